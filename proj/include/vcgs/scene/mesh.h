#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vcgs/geometry/geometry.h"

namespace vcgs {

using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bool empty() const { return (hi.array() < lo.array()).any(); }
  Vec3 diagonal() const { return hi - lo; }
  /// Slab test; returns the entry parameter if the ray [tmin, tmax] hits.
  bool intersects_ray(const Vec3& origin, const Vec3& inv_dir, double tmin,
                      double tmax) const;
};

/// Triangle mesh. A mesh may be a union of several closed components that
/// overlap (e.g. a mug body and its handle); components are the connected
/// sets of faces sharing vertices.
class TriMesh {
 public:
  TriMesh() = default;
  TriMesh(Points vertices, Faces faces, std::string object_id);

  const Points& vertices() const { return vertices_; }
  const Faces& faces() const { return faces_; }
  const std::string& object_id() const { return object_id_; }
  void set_object_id(std::string id) { object_id_ = std::move(id); }

  std::size_t face_count() const { return static_cast<std::size_t>(faces_.rows()); }
  std::size_t vertex_count() const { return static_cast<std::size_t>(vertices_.rows()); }
  std::size_t component_count() const { return component_boxes_.size(); }
  int face_component(std::size_t f) const { return face_component_[f]; }
  const Aabb& bounds() const { return bounds_; }
  const Aabb& component_bounds(int c) const { return component_boxes_[c]; }

  std::array<Vec3, 3> triangle(std::size_t f) const;
  /// Outward unit normal from the winding order.
  Vec3 face_normal(std::size_t f) const;
  double face_area(std::size_t f) const;

  /// Every undirected edge is shared by exactly two faces with opposite
  /// orientation.
  /// Cached at construction.
  bool is_watertight() const { return watertight_; }

  /// Throws InvariantError on out-of-range indices or zero-area faces.
  void validate() const;

  /// Applies a rigid transform to every vertex.
  TriMesh transformed(const GraspPose& t) const;

 private:
  void index_components();
  bool check_watertight() const;

  Points vertices_;
  Faces faces_;
  std::string object_id_;
  std::vector<int> face_component_;
  std::vector<Aabb> component_boxes_;
  Aabb bounds_;
  bool watertight_ = false;
};

struct RayHit {
  double t = 0.0;
  std::size_t face = 0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
};

/// Moller-Trumbore; both faces count. Returns the ray parameter of the hit.
std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir,
                                         const Vec3& a, const Vec3& b,
                                         const Vec3& c);

/// Nearest hit with t in [tmin, tmax].
std::optional<RayHit> cast_ray(const TriMesh& mesh, const Vec3& origin,
                               const Vec3& dir, double tmin, double tmax);

/// All hits with t in [tmin, tmax], sorted by t.
std::vector<RayHit> cast_ray_all(const TriMesh& mesh, const Vec3& origin,
                                 const Vec3& dir, double tmin, double tmax);

/// Point containment in the union of the mesh components (crossing parity
/// per component).
bool point_inside(const TriMesh& mesh, const Vec3& p);

/// True when p lies strictly inside some component other than `component`.
bool inside_other_component(const TriMesh& mesh, const Vec3& p, int component);

}  // namespace vcgs
