#include "vcgs/scene/primitives.h"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "vcgs/common/error.h"
#include "vcgs/common/rng.h"

namespace vcgs {

namespace {

constexpr double kPi = std::numbers::pi;

// Accumulates closed components into one vertex/face list.
class MeshBuilder {
 public:
  int vertex(const Vec3& p) {
    verts_.push_back(p);
    return static_cast<int>(verts_.size()) - 1;
  }
  void face(int a, int b, int c) { faces_.push_back({a, b, c}); }
  void quad(int a, int b, int c, int d) {
    face(a, b, c);
    face(a, c, d);
  }

  void begin_component() { component_start_ = faces_.size(); }

  // Flips the component just built if its signed volume is negative.
  void orient_component() {
    double volume = 0.0;
    for (std::size_t f = component_start_; f < faces_.size(); ++f) {
      const auto& t = faces_[f];
      volume += verts_[t[0]].dot(verts_[t[1]].cross(verts_[t[2]]));
    }
    if (volume < 0.0) {
      for (std::size_t f = component_start_; f < faces_.size(); ++f) {
        std::swap(faces_[f][1], faces_[f][2]);
      }
    }
  }

  TriMesh build(const std::string& id, double yaw) const {
    Aabb box;
    for (const auto& v : verts_) box.extend(v);
    const Vec3 center = 0.5 * (box.lo + box.hi);
    const Mat3 r = Quaternion::from_axis_angle(Vec3::UnitZ(), yaw).to_matrix();
    Points v(static_cast<Eigen::Index>(verts_.size()), 3);
    for (std::size_t i = 0; i < verts_.size(); ++i) {
      v.row(static_cast<Eigen::Index>(i)) = (r * (verts_[i] - center)).transpose();
    }
    // Recentering after the yaw keeps the bounding box symmetric about 0.
    Aabb rotated;
    for (Eigen::Index i = 0; i < v.rows(); ++i) rotated.extend(v.row(i).transpose());
    const Vec3 shift = 0.5 * (rotated.lo + rotated.hi);
    for (Eigen::Index i = 0; i < v.rows(); ++i) v.row(i) -= shift.transpose();
    Faces f(static_cast<Eigen::Index>(faces_.size()), 3);
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      f.row(static_cast<Eigen::Index>(i)) << faces_[i][0], faces_[i][1], faces_[i][2];
    }
    return TriMesh(std::move(v), std::move(f), id);
  }

 private:
  std::vector<Vec3> verts_;
  std::vector<std::array<int, 3>> faces_;
  std::size_t component_start_ = 0;
};

void add_box(MeshBuilder& mb, const Vec3& half) {
  mb.begin_component();
  int v[8];
  for (int i = 0; i < 8; ++i) {
    v[i] = mb.vertex({(i & 1 ? 1 : -1) * half.x(), (i & 2 ? 1 : -1) * half.y(),
                      (i & 4 ? 1 : -1) * half.z()});
  }
  mb.quad(v[0], v[2], v[3], v[1]);  // -z
  mb.quad(v[4], v[5], v[7], v[6]);  // +z
  mb.quad(v[0], v[1], v[5], v[4]);  // -y
  mb.quad(v[2], v[6], v[7], v[3]);  // +y
  mb.quad(v[0], v[4], v[6], v[2]);  // -x
  mb.quad(v[1], v[3], v[7], v[5]);  // +x
  mb.orient_component();
}

void add_cylinder(MeshBuilder& mb, double radius, double z0, double z1,
                  int segments) {
  mb.begin_component();
  std::vector<int> bottom(segments), top(segments);
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * kPi * i / segments;
    bottom[i] = mb.vertex({radius * std::cos(a), radius * std::sin(a), z0});
    top[i] = mb.vertex({radius * std::cos(a), radius * std::sin(a), z1});
  }
  const int cb = mb.vertex({0.0, 0.0, z0});
  const int ct = mb.vertex({0.0, 0.0, z1});
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    mb.quad(bottom[i], bottom[j], top[j], top[i]);
    mb.face(cb, bottom[j], bottom[i]);
    mb.face(ct, top[i], top[j]);
  }
  mb.orient_component();
}

void add_icosphere(MeshBuilder& mb, double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                             {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                             {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& v : verts) v.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int a = mid(f[0], f[1]);
      const int b = mid(f[1], f[2]);
      const int c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }
  mb.begin_component();
  std::vector<int> ids;
  ids.reserve(verts.size());
  for (const auto& v : verts) ids.push_back(mb.vertex(radius * v));
  for (const auto& f : faces) mb.face(ids[f[0]], ids[f[1]], ids[f[2]]);
  mb.orient_component();
}

// Sphere of `radius` split at the equator, halves offset by +-half_gap in z.
void add_capsule(MeshBuilder& mb, double radius, double half_gap, int segments) {
  mb.begin_component();
  const int half_rings = std::max(2, segments / 4);
  const int south = mb.vertex({0.0, 0.0, -half_gap - radius});
  std::vector<std::vector<int>> rings;
  for (int r = 1; r < 2 * half_rings; ++r) {
    const double lat = -kPi / 2 + kPi * r / (2 * half_rings);
    const double z = radius * std::sin(lat);
    const double rho = radius * std::cos(lat);
    const double offset = r < half_rings ? -half_gap : (r > half_rings ? half_gap : 0.0);
    // The equator ring is duplicated into two rings when the halves separate.
    const int copies = (r == half_rings && half_gap > 0.0) ? 2 : 1;
    for (int c = 0; c < copies; ++c) {
      const double zoff = copies == 2 ? (c == 0 ? -half_gap : half_gap) : offset;
      std::vector<int> ring(segments);
      for (int i = 0; i < segments; ++i) {
        const double a = 2.0 * kPi * i / segments;
        ring[i] = mb.vertex({rho * std::cos(a), rho * std::sin(a), z + zoff});
      }
      rings.push_back(std::move(ring));
    }
  }
  const int north = mb.vertex({0.0, 0.0, half_gap + radius});
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    mb.face(south, rings.front()[j], rings.front()[i]);
    mb.face(north, rings.back()[i], rings.back()[j]);
  }
  for (std::size_t r = 0; r + 1 < rings.size(); ++r) {
    for (int i = 0; i < segments; ++i) {
      const int j = (i + 1) % segments;
      mb.quad(rings[r][i], rings[r][j], rings[r + 1][j], rings[r + 1][i]);
    }
  }
  mb.orient_component();
}

// Tube of radius `minor` swept along an arc of radius `major` in the x-z
// plane around `center`, from angle phi0 to phi1, with flat end caps.
void add_torus_segment(MeshBuilder& mb, const Vec3& center, double major,
                       double minor, double phi0, double phi1, int arc_segments,
                       int tube_segments) {
  mb.begin_component();
  std::vector<std::vector<int>> rings;
  for (int s = 0; s <= arc_segments; ++s) {
    const double phi = phi0 + (phi1 - phi0) * s / arc_segments;
    const Vec3 radial(std::cos(phi), 0.0, std::sin(phi));
    std::vector<int> ring(tube_segments);
    for (int i = 0; i < tube_segments; ++i) {
      const double th = 2.0 * kPi * i / tube_segments;
      ring[i] = mb.vertex(center + (major + minor * std::cos(th)) * radial +
                          minor * std::sin(th) * Vec3::UnitY());
    }
    rings.push_back(std::move(ring));
  }
  for (std::size_t s = 0; s + 1 < rings.size(); ++s) {
    for (int i = 0; i < tube_segments; ++i) {
      const int j = (i + 1) % tube_segments;
      mb.quad(rings[s][i], rings[s][j], rings[s + 1][j], rings[s + 1][i]);
    }
  }
  const Vec3 start = center + major * Vec3(std::cos(phi0), 0.0, std::sin(phi0));
  const Vec3 end = center + major * Vec3(std::cos(phi1), 0.0, std::sin(phi1));
  const int c0 = mb.vertex(start);
  const int c1 = mb.vertex(end);
  for (int i = 0; i < tube_segments; ++i) {
    const int j = (i + 1) % tube_segments;
    mb.face(c0, rings.front()[j], rings.front()[i]);
    mb.face(c1, rings.back()[i], rings.back()[j]);
  }
  mb.orient_component();
}

std::size_t expected_dims(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::kBox: return 3;
    case PrimitiveKind::kSphere: return 1;
    default: return 2;
  }
}

}  // namespace

std::string to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::kBox: return "box";
    case PrimitiveKind::kCylinder: return "cylinder";
    case PrimitiveKind::kSphere: return "sphere";
    case PrimitiveKind::kCapsule: return "capsule";
    case PrimitiveKind::kMugLike: return "mug_like";
    case PrimitiveKind::kBottleLike: return "bottle_like";
  }
  return "unknown";
}

PrimitiveKind primitive_kind_from_string(const std::string& name) {
  static const std::map<std::string, PrimitiveKind> kinds = {
      {"box", PrimitiveKind::kBox},          {"cylinder", PrimitiveKind::kCylinder},
      {"sphere", PrimitiveKind::kSphere},    {"capsule", PrimitiveKind::kCapsule},
      {"mug_like", PrimitiveKind::kMugLike}, {"bottle_like", PrimitiveKind::kBottleLike}};
  const auto it = kinds.find(name);
  if (it == kinds.end()) throw ConfigError("unknown primitive kind '" + name + "'");
  return it->second;
}

TriMesh gen_primitive(const PrimitiveSpec& spec, std::uint64_t seed,
                      const std::string& object_id) {
  if (spec.dims.size() != expected_dims(spec.kind)) {
    throw ConfigError(to_string(spec.kind) + " expects " +
                      std::to_string(expected_dims(spec.kind)) + " dims");
  }
  for (double d : spec.dims) {
    if (!(d >= kMinPrimitiveDim && d <= kMaxPrimitiveDim)) {
      throw ConfigError(to_string(spec.kind) + ": dimension " + std::to_string(d) +
                        " m outside [0.02, 0.30]");
    }
  }
  const int segments = spec.resolution > 0 ? spec.resolution : 32;
  Rng rng(seed);
  const double yaw = spec.kind == PrimitiveKind::kBox
                         ? 0.0
                         : std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(rng);
  const auto& d = spec.dims;
  MeshBuilder mb;
  switch (spec.kind) {
    case PrimitiveKind::kBox:
      add_box(mb, 0.5 * Vec3(d[0], d[1], d[2]));
      break;
    case PrimitiveKind::kCylinder:
      add_cylinder(mb, d[0], -0.5 * d[1], 0.5 * d[1], segments);
      break;
    case PrimitiveKind::kSphere:
      add_icosphere(mb, d[0], spec.resolution > 0 ? spec.resolution : 3);
      break;
    case PrimitiveKind::kCapsule:
      add_capsule(mb, d[0], std::max(0.0, 0.5 * d[1] - d[0]), segments);
      break;
    case PrimitiveKind::kMugLike: {
      const double radius = d[0];
      const double height = d[1];
      add_cylinder(mb, radius, -0.5 * height, 0.5 * height, segments);
      const double major = 0.3 * height;
      const double minor = std::min(0.12 * radius, 0.09 * height);
      add_torus_segment(mb, Vec3(radius, 0.0, 0.0), major, minor,
                        -110.0 * kPi / 180.0, 110.0 * kPi / 180.0, 24, 12);
      break;
    }
    case PrimitiveKind::kBottleLike: {
      const double radius = d[0];
      const double height = d[1];
      add_cylinder(mb, radius, 0.0, 0.7 * height, segments);
      add_cylinder(mb, 0.45 * radius, 0.65 * height, height, segments);
      break;
    }
  }
  return mb.build(object_id, yaw);
}

}  // namespace vcgs
