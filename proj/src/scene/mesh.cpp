#include "vcgs/scene/mesh.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "vcgs/common/error.h"

namespace vcgs {

bool Aabb::intersects_ray(const Vec3& origin, const Vec3& inv_dir, double tmin,
                          double tmax) const {
  for (int k = 0; k < 3; ++k) {
    double t0 = (lo[k] - origin[k]) * inv_dir[k];
    double t1 = (hi[k] - origin[k]) * inv_dir[k];
    if (t0 > t1) std::swap(t0, t1);
    // NaN from 0 * inf falls through both comparisons.
    if (t0 > tmin) tmin = t0;
    if (t1 < tmax) tmax = t1;
    if (tmin > tmax) return false;
  }
  return true;
}

TriMesh::TriMesh(Points vertices, Faces faces, std::string object_id)
    : vertices_(std::move(vertices)),
      faces_(std::move(faces)),
      object_id_(std::move(object_id)) {
  validate();
  index_components();
  watertight_ = check_watertight();
}

std::array<Vec3, 3> TriMesh::triangle(std::size_t f) const {
  const auto i = static_cast<Eigen::Index>(f);
  return {vertices_.row(faces_(i, 0)).transpose(),
          vertices_.row(faces_(i, 1)).transpose(),
          vertices_.row(faces_(i, 2)).transpose()};
}

Vec3 TriMesh::face_normal(std::size_t f) const {
  const auto [a, b, c] = triangle(f);
  return (b - a).cross(c - a).normalized();
}

double TriMesh::face_area(std::size_t f) const {
  const auto [a, b, c] = triangle(f);
  return 0.5 * (b - a).cross(c - a).norm();
}

bool TriMesh::check_watertight() const {
  if (faces_.rows() == 0) return false;
  std::map<std::pair<int, int>, int> directed;
  for (Eigen::Index f = 0; f < faces_.rows(); ++f) {
    for (int k = 0; k < 3; ++k) {
      ++directed[{faces_(f, k), faces_(f, (k + 1) % 3)}];
    }
  }
  for (const auto& [edge, count] : directed) {
    if (count != 1) return false;
    const auto twin = directed.find({edge.second, edge.first});
    if (twin == directed.end() || twin->second != 1) return false;
  }
  return true;
}

void TriMesh::validate() const {
  const auto nv = vertices_.rows();
  if (!vertices_.allFinite()) throw InvariantError("mesh has non-finite vertices");
  for (Eigen::Index f = 0; f < faces_.rows(); ++f) {
    for (int k = 0; k < 3; ++k) {
      if (faces_(f, k) < 0 || faces_(f, k) >= nv) {
        throw InvariantError("mesh face " + std::to_string(f) +
                             " has an out-of-range vertex index");
      }
    }
    if (face_area(static_cast<std::size_t>(f)) <= 1e-14) {
      throw InvariantError("mesh face " + std::to_string(f) + " is degenerate");
    }
  }
}

TriMesh TriMesh::transformed(const GraspPose& t) const {
  Points v(vertices_.rows(), 3);
  const Mat3 r = t.rotation.to_matrix();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    v.row(i) = (r * vertices_.row(i).transpose() + t.position).transpose();
  }
  return TriMesh(std::move(v), faces_, object_id_);
}

void TriMesh::index_components() {
  const auto nv = static_cast<int>(vertices_.rows());
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Eigen::Index f = 0; f < faces_.rows(); ++f) {
    const int a = find(faces_(f, 0));
    parent[find(faces_(f, 1))] = a;
    parent[find(faces_(f, 2))] = a;
  }
  std::map<int, int> label;
  face_component_.assign(faces_.rows(), 0);
  for (Eigen::Index f = 0; f < faces_.rows(); ++f) {
    const int root = find(faces_(f, 0));
    auto it = label.try_emplace(root, static_cast<int>(label.size())).first;
    face_component_[f] = it->second;
  }
  component_boxes_.assign(label.size(), Aabb{});
  bounds_ = Aabb{};
  for (Eigen::Index f = 0; f < faces_.rows(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const Vec3 p = vertices_.row(faces_(f, k)).transpose();
      component_boxes_[face_component_[f]].extend(p);
      bounds_.extend(p);
    }
  }
}

std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir,
                                         const Vec3& a, const Vec3& b,
                                         const Vec3& c) {
  constexpr double kEps = 1e-14;
  // Barycentric slack so a line through a shared edge hits at least one side.
  constexpr double kEdge = 1e-12;
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < kEps) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tvec = origin - a;
  const double u = tvec.dot(pvec) * inv;
  if (u < -kEdge || u > 1.0 + kEdge) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv;
  if (v < -kEdge || u + v > 1.0 + kEdge) return std::nullopt;
  return e2.dot(qvec) * inv;
}

namespace {

template <typename Visit>
void for_each_hit(const TriMesh& mesh, const Vec3& origin, const Vec3& dir,
                  double tmin, double tmax, Visit&& visit) {
  const Vec3 inv = dir.cwiseInverse();
  if (!mesh.bounds().intersects_ray(origin, inv, tmin, tmax)) return;
  std::vector<char> live(mesh.component_count());
  for (std::size_t c = 0; c < live.size(); ++c) {
    live[c] = mesh.component_bounds(static_cast<int>(c))
                  .intersects_ray(origin, inv, tmin, tmax);
  }
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    if (!live[mesh.face_component(f)]) continue;
    const auto [a, b, c] = mesh.triangle(f);
    const auto t = intersect_triangle(origin, dir, a, b, c);
    if (t && *t >= tmin && *t <= tmax) visit(*t, f);
  }
}

}  // namespace

std::optional<RayHit> cast_ray(const TriMesh& mesh, const Vec3& origin,
                               const Vec3& dir, double tmin, double tmax) {
  std::optional<RayHit> best;
  for_each_hit(mesh, origin, dir, tmin, tmax, [&](double t, std::size_t f) {
    if (!best || t < best->t) best = RayHit{t, f, Vec3::Zero(), Vec3::Zero()};
  });
  if (best) {
    best->point = origin + best->t * dir;
    best->normal = mesh.face_normal(best->face);
  }
  return best;
}

std::vector<RayHit> cast_ray_all(const TriMesh& mesh, const Vec3& origin,
                                 const Vec3& dir, double tmin, double tmax) {
  std::vector<RayHit> hits;
  for_each_hit(mesh, origin, dir, tmin, tmax, [&](double t, std::size_t f) {
    hits.push_back({t, f, origin + t * dir, mesh.face_normal(f)});
  });
  std::sort(hits.begin(), hits.end(), [](const RayHit& a, const RayHit& b) {
    return a.t < b.t || (a.t == b.t && a.face < b.face);
  });
  return hits;
}

namespace {

// Off-axis directions so that rays rarely graze edges or vertices.
const std::array<Vec3, 3>& parity_directions() {
  static const std::array<Vec3, 3> dirs = {
      Vec3(0.5773, 0.5779, 0.5768).normalized(),
      Vec3(-0.3187, 0.8412, -0.4368).normalized(),
      Vec3(0.7071, -0.2213, -0.6716).normalized()};
  return dirs;
}

// Majority vote over three parity rays, restricted to one component.
bool inside_component(const TriMesh& mesh, const Vec3& p, int component) {
  const Aabb& box = mesh.component_bounds(component);
  if ((p.array() < box.lo.array()).any() || (p.array() > box.hi.array()).any()) {
    return false;
  }
  int votes = 0;
  for (const Vec3& dir : parity_directions()) {
    int crossings = 0;
    for (std::size_t f = 0; f < mesh.face_count(); ++f) {
      if (mesh.face_component(f) != component) continue;
      const auto [a, b, c] = mesh.triangle(f);
      const auto t = intersect_triangle(p, dir, a, b, c);
      if (t && *t > 0.0) ++crossings;
    }
    votes += crossings % 2;
  }
  return votes >= 2;
}

}  // namespace

bool point_inside(const TriMesh& mesh, const Vec3& p) {
  for (std::size_t c = 0; c < mesh.component_count(); ++c) {
    if (inside_component(mesh, p, static_cast<int>(c))) return true;
  }
  return false;
}

bool inside_other_component(const TriMesh& mesh, const Vec3& p, int component) {
  for (std::size_t c = 0; c < mesh.component_count(); ++c) {
    if (static_cast<int>(c) == component) continue;
    if (inside_component(mesh, p, static_cast<int>(c))) return true;
  }
  return false;
}

}  // namespace vcgs
