#pragma once

#include <vector>

#include "vcgs/common/rng.h"
#include "vcgs/scene/mesh.h"

namespace vcgs {

/// Pinhole camera. The camera frame looks down +z with x right and y down;
/// `pose` maps camera coordinates to world coordinates.
struct CameraModel {
  GraspPose pose;
  int width = 128;
  int height = 128;
  double focal = 120.0;
  double cx = 64.0;
  double cy = 64.0;

  void validate() const;
  /// Unit ray direction through pixel (u, v) in the camera frame.
  Vec3 pixel_ray(int u, int v) const;
};

/// Range image: distance along each pixel ray to the nearest surface, 0 for
/// pixels that see nothing.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> depth;

  double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  double& at(int u, int v) { return depth[static_cast<std::size_t>(v) * width + u]; }
};

DepthImage render_depth(const TriMesh& mesh, const CameraModel& cam);

/// World-frame points for every nonzero pixel, in row-major pixel order.
/// Throws EmptyCloud if no pixel has depth.
PointCloud depth_to_cloud(const DepthImage& img, const CameraModel& cam);

struct CameraSampling {
  double min_radius = 0.30;
  double max_radius = 0.45;
  int width = 128;
  int height = 128;
  double focal = 120.0;
};

/// Camera at a uniformly random direction and radius, looking at the origin,
/// with a uniformly random roll about the optical axis.
CameraModel sample_camera(Rng& rng, const CameraSampling& opts = {});

}  // namespace vcgs
