#include "vcgs/scene/camera.h"

#include <cmath>
#include <numbers>

#include "vcgs/common/error.h"

namespace vcgs {

void CameraModel::validate() const {
  if (width < 16 || height < 16) throw ConfigError("camera resolution must be >= 16x16");
  if (!(focal > 0.0)) throw ConfigError("camera focal length must be positive");
  if (!pose.is_valid()) throw InvalidRotation("camera pose is not a rigid transform");
}

Vec3 CameraModel::pixel_ray(int u, int v) const {
  return Vec3((u - cx) / focal, (v - cy) / focal, 1.0).normalized();
}

DepthImage render_depth(const TriMesh& mesh, const CameraModel& cam) {
  cam.validate();
  DepthImage img{cam.width, cam.height,
                 std::vector<double>(static_cast<std::size_t>(cam.width) * cam.height, 0.0)};
  if (mesh.face_count() == 0) return img;
  const Mat3 r = cam.pose.rotation.to_matrix();
  const Vec3 origin = cam.pose.position;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 dir = r * cam.pixel_ray(u, v);
      if (auto hit = cast_ray(mesh, origin, dir, 1e-9,
                              std::numeric_limits<double>::infinity())) {
        img.at(u, v) = hit->t;
      }
    }
  }
  return img;
}

PointCloud depth_to_cloud(const DepthImage& img, const CameraModel& cam) {
  const Mat3 r = cam.pose.rotation.to_matrix();
  std::vector<Vec3> pts;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const double d = img.at(u, v);
      if (d > 0.0) pts.push_back(cam.pose.position + d * (r * cam.pixel_ray(u, v)));
    }
  }
  if (pts.empty()) throw EmptyCloud("depth image has no valid pixels");
  PointCloud cloud;
  cloud.frame = CloudFrame::kObject;
  cloud.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    cloud.points.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  }
  return cloud;
}

CameraModel sample_camera(Rng& rng, const CameraSampling& opts) {
  if (!(opts.min_radius > 0.0) || opts.max_radius < opts.min_radius) {
    throw ConfigError("camera radius range must satisfy 0 < min <= max");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double zc = 2.0 * unit(rng) - 1.0;
  const double az = 2.0 * std::numbers::pi * unit(rng);
  const double rho = std::sqrt(std::max(0.0, 1.0 - zc * zc));
  const Vec3 dir(rho * std::cos(az), rho * std::sin(az), zc);
  const double radius =
      opts.min_radius + (opts.max_radius - opts.min_radius) * unit(rng);
  const Vec3 forward = -dir;
  // Random roll: project a random reference direction onto the image plane.
  Vec3 ref;
  do {
    ref = Vec3(2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0);
    ref -= ref.dot(forward) * forward;
  } while (ref.norm() < 1e-3);
  const Vec3 x_axis = ref.normalized();
  const Vec3 y_axis = forward.cross(x_axis);
  Mat3 rot;
  rot.col(0) = x_axis;
  rot.col(1) = y_axis;
  rot.col(2) = forward;

  CameraModel cam;
  cam.pose.rotation = Quaternion::from_matrix(rot);
  cam.pose.position = radius * dir;
  cam.width = opts.width;
  cam.height = opts.height;
  cam.focal = opts.focal;
  cam.cx = 0.5 * opts.width;
  cam.cy = 0.5 * opts.height;
  return cam;
}

}  // namespace vcgs
