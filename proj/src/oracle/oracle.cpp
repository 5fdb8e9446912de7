#include "vcgs/oracle/oracle.h"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "vcgs/common/error.h"
#include "vcgs/common/rng.h"

namespace vcgs {

std::string to_string(LabelReason reason) {
  switch (reason) {
    case LabelReason::kOk: return "ok";
    case LabelReason::kNoContact: return "no_contact";
    case LabelReason::kTooWide: return "too_wide";
    case LabelReason::kFrictionViolation: return "friction_violation";
    case LabelReason::kCollision: return "collision";
  }
  return "unknown";
}

LabelReason label_reason_from_string(const std::string& name) {
  static const std::map<std::string, LabelReason> reasons = {
      {"ok", LabelReason::kOk},
      {"no_contact", LabelReason::kNoContact},
      {"too_wide", LabelReason::kTooWide},
      {"friction_violation", LabelReason::kFrictionViolation},
      {"collision", LabelReason::kCollision}};
  const auto it = reasons.find(name);
  if (it == reasons.end()) throw FormatError("unknown label reason '" + name + "'", 0);
  return it->second;
}

std::vector<Aabb> GripperBody::boxes(const GripperModel& gm) const {
  const double half = 0.5 * gm.max_opening;
  const double hw = 0.5 * finger_width;
  const double f = gm.finger_length;
  Aabb right{Vec3(half, -hw, 0.0), Vec3(half + finger_thickness, hw, f)};
  Aabb left{Vec3(-half - finger_thickness, -hw, 0.0), Vec3(-half, hw, f)};
  Aabb palm{Vec3(-half - finger_thickness, -hw, -palm_height),
            Vec3(half + finger_thickness, hw, 0.0)};
  return {right, left, palm};
}

namespace {

struct Crossing {
  double t = 0.0;  // signed distance from the center grasp point
  Vec3 point;
  Vec3 normal;
};

enum class ProbeOutcome { kContacts, kNoContact, kTooWide };

struct Probe {
  ProbeOutcome outcome = ProbeOutcome::kNoContact;
  ContactPair contacts;
};

// Union-boundary crossings of the full closing line through the center
// grasp point, sorted along +x.
std::vector<Crossing> closing_line_crossings(const TriMesh& mesh, const Vec3& center,
                                             const Vec3& axis, double half) {
  const Vec3 mid = 0.5 * (mesh.bounds().lo + mesh.bounds().hi);
  const double reach =
      (center - mid).norm() + mesh.bounds().diagonal().norm() + half + 0.01;
  const auto hits = cast_ray_all(mesh, center - reach * axis, axis, 0.0, 2.0 * reach);
  std::vector<Crossing> out;
  for (const auto& h : hits) {
    const double t = h.t - reach;
    // Coincident hits come from the line passing through a shared edge or
    // vertex; they are one crossing.
    if (!out.empty() && std::abs(t - out.back().t) < 1e-9) continue;
    if (mesh.component_count() > 1 &&
        inside_other_component(mesh, h.point, mesh.face_component(h.face))) {
      continue;
    }
    out.push_back({t, h.point, h.normal});
  }
  return out;
}

Probe probe(const TriMesh& mesh, const GraspPose& g, const GripperModel& gm) {
  if (!mesh.is_watertight()) {
    throw OracleUnsupported("mesh '" + mesh.object_id() + "' is not watertight");
  }
  const double half = 0.5 * gm.max_opening;
  const Vec3 center = g.apply(gm.center_local());
  const Vec3 axis = rotate_point(g.rotation, Vec3::UnitX());
  const auto crossings = closing_line_crossings(mesh, center, axis, half);

  int beyond_pos = 0;
  int beyond_neg = 0;
  const Crossing* first = nullptr;
  const Crossing* last = nullptr;
  for (const auto& c : crossings) {
    if (c.t > half) {
      ++beyond_pos;
    } else if (c.t < -half) {
      ++beyond_neg;
    } else {
      if (!first) first = &c;
      last = &c;
    }
  }
  Probe p;
  // A finger whose start point is inside the object cannot close around it.
  if (beyond_pos % 2 == 1 || beyond_neg % 2 == 1) {
    p.outcome = ProbeOutcome::kTooWide;
    return p;
  }
  if (!first || first == last) return p;
  p.outcome = ProbeOutcome::kContacts;
  p.contacts = {first->point, last->point, first->normal, last->normal};
  return p;
}

bool overlap_on_axis(const Vec3& axis, const Vec3& v0, const Vec3& v1,
                     const Vec3& v2, const Vec3& half) {
  if (axis.squaredNorm() < 1e-24) return true;
  const double p0 = axis.dot(v0);
  const double p1 = axis.dot(v1);
  const double p2 = axis.dot(v2);
  const double r = half.x() * std::abs(axis.x()) + half.y() * std::abs(axis.y()) +
                   half.z() * std::abs(axis.z());
  return !(std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r);
}

bool collides(const TriMesh& mesh, const GraspPose& g, const GripperModel& gm,
              const GripperBody& body) {
  const auto boxes = body.boxes(gm);
  const GraspPose to_gripper = g.inverse();
  const Mat3 r = to_gripper.rotation.to_matrix();
  Aabb reach;
  for (const auto& b : boxes) {
    reach.extend(b.lo);
    reach.extend(b.hi);
  }
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    auto tri = mesh.triangle(f);
    Aabb tri_box;
    for (auto& v : tri) {
      v = r * v + to_gripper.position;
      tri_box.extend(v);
    }
    if ((tri_box.hi.array() < reach.lo.array()).any() ||
        (tri_box.lo.array() > reach.hi.array()).any()) {
      continue;
    }
    for (const auto& b : boxes) {
      if (triangle_box_overlap(tri[0], tri[1], tri[2], b)) return true;
    }
  }
  // A box entirely inside the object touches no triangle.
  for (const auto& b : boxes) {
    if (point_inside(mesh, g.apply(0.5 * (b.lo + b.hi)))) return true;
  }
  return false;
}

}  // namespace

bool triangle_box_overlap(const Vec3& a, const Vec3& b, const Vec3& c,
                          const Aabb& box) {
  const Vec3 center = 0.5 * (box.lo + box.hi);
  const Vec3 half = 0.5 * (box.hi - box.lo);
  const Vec3 v0 = a - center;
  const Vec3 v1 = b - center;
  const Vec3 v2 = c - center;
  const Vec3 e0 = v1 - v0;
  const Vec3 e1 = v2 - v1;
  const Vec3 e2 = v0 - v2;
  // Box face normals.
  for (int k = 0; k < 3; ++k) {
    if (std::min({v0[k], v1[k], v2[k]}) > half[k] ||
        std::max({v0[k], v1[k], v2[k]}) < -half[k]) {
      return false;
    }
  }
  // Triangle normal.
  if (!overlap_on_axis(e0.cross(e1), v0, v1, v2, half)) return false;
  // Edge cross products.
  for (const Vec3& e : {e0, e1, e2}) {
    for (int k = 0; k < 3; ++k) {
      if (!overlap_on_axis(Vec3::Unit(k).cross(e), v0, v1, v2, half)) return false;
    }
  }
  return true;
}

std::optional<ContactPair> find_contacts(const TriMesh& mesh, const GraspPose& g,
                                         const GripperModel& gm) {
  const Probe p = probe(mesh, g, gm);
  if (p.outcome != ProbeOutcome::kContacts) return std::nullopt;
  return p.contacts;
}

GraspLabel label_grasp(const TriMesh& mesh, const GraspPose& g,
                       const GripperModel& gm, double mu, const GripperBody& body) {
  if (!(mu > 0.0)) throw ConfigError("friction coefficient must be positive");
  const Probe p = probe(mesh, g, gm);
  if (p.outcome == ProbeOutcome::kTooWide) return {false, LabelReason::kTooWide};
  if (p.outcome == ProbeOutcome::kNoContact) return {false, LabelReason::kNoContact};
  const ContactPair& c = p.contacts;
  if ((c.p2 - c.p1).norm() > gm.max_opening) return {false, LabelReason::kTooWide};
  const Vec3 axis = rotate_point(g.rotation, Vec3::UnitX());
  const double cos_cone = 1.0 / std::sqrt(1.0 + mu * mu);
  if (c.n2.dot(axis) < cos_cone || c.n1.dot(-axis) < cos_cone) {
    return {false, LabelReason::kFrictionViolation};
  }
  if (collides(mesh, g, gm, body)) return {false, LabelReason::kCollision};
  return {true, LabelReason::kOk};
}

namespace {

struct SurfaceSampler {
  explicit SurfaceSampler(const TriMesh& mesh) : mesh_(mesh) {
    std::vector<double> areas(mesh.face_count());
    for (std::size_t f = 0; f < areas.size(); ++f) areas[f] = mesh.face_area(f);
    pick_ = std::discrete_distribution<std::size_t>(areas.begin(), areas.end());
  }

  // Point on the union boundary with its outward normal.
  std::pair<Vec3, Vec3> draw(Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::pair<Vec3, Vec3> last;
    for (int attempt = 0; attempt < 32; ++attempt) {
      const std::size_t f = pick_(rng);
      double u = unit(rng);
      double v = unit(rng);
      if (u + v > 1.0) {
        u = 1.0 - u;
        v = 1.0 - v;
      }
      const auto [a, b, c] = mesh_.triangle(f);
      last = {a + u * (b - a) + v * (c - a), mesh_.face_normal(f)};
      if (mesh_.component_count() == 1 ||
          !inside_other_component(mesh_, last.first, mesh_.face_component(f))) {
        break;
      }
    }
    return last;
  }

  const TriMesh& mesh_;
  std::discrete_distribution<std::size_t> pick_;
};

Vec3 any_perpendicular(const Vec3& v) {
  const Vec3 ref = std::abs(v.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return v.cross(ref).normalized();
}

}  // namespace

std::vector<LabeledGrasp> sample_labeled_grasps(const TriMesh& mesh,
                                                const GripperModel& gm, double mu,
                                                std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample_labeled_grasps: n must be >= 1");
  constexpr double kMaxTilt = 15.0 * std::numbers::pi / 180.0;
  constexpr double kStandoffLo = -0.015;
  constexpr double kStandoffHi = 0.008;

  SurfaceSampler surface(mesh);
  std::vector<LabeledGrasp> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto [point, normal] = surface.draw(rng);

    // Closing axis: inward normal tilted uniformly within a cone.
    const Vec3 inward = -normal;
    const Vec3 e1 = any_perpendicular(inward);
    const Vec3 e2 = inward.cross(e1);
    const double cos_tilt = 1.0 - unit(rng) * (1.0 - std::cos(kMaxTilt));
    const double sin_tilt = std::sqrt(std::max(0.0, 1.0 - cos_tilt * cos_tilt));
    const double spin = 2.0 * std::numbers::pi * unit(rng);
    const Vec3 closing =
        (cos_tilt * inward + sin_tilt * (std::cos(spin) * e1 + std::sin(spin) * e2))
            .normalized();

    // Chord through the object along the closing axis.
    Vec3 mid = point + 0.01 * closing;
    const auto exit = cast_ray(mesh, point + 1e-7 * closing, closing, 0.0,
                               std::numeric_limits<double>::infinity());
    if (exit) mid = 0.5 * (point + exit->point);

    // Approach axis rolled randomly about the closing line.
    const Vec3 f1 = any_perpendicular(closing);
    const Vec3 f2 = closing.cross(f1);
    const double roll = 2.0 * std::numbers::pi * unit(rng);
    const Vec3 approach = std::cos(roll) * f1 + std::sin(roll) * f2;
    const double standoff = kStandoffLo + (kStandoffHi - kStandoffLo) * unit(rng);
    const Vec3 center = mid + standoff * approach;

    Mat3 rot;
    rot.col(0) = closing;
    rot.col(1) = approach.cross(closing);
    rot.col(2) = approach;
    GraspPose pose;
    pose.rotation = Quaternion::from_matrix(rot);
    pose.position = center - rotate_point(pose.rotation, gm.center_local());
    out.push_back({pose, label_grasp(mesh, pose, gm, mu)});
  }
  return out;
}

}  // namespace vcgs
