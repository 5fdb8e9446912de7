#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vcgs/geometry/geometry.h"
#include "vcgs/scene/mesh.h"

namespace vcgs {

/// Two opposing contacts on the closing line with outward unit normals.
/// p1 lies on the -x side of the gripper, p2 on the +x side.
struct ContactPair {
  Vec3 p1 = Vec3::Zero();
  Vec3 p2 = Vec3::Zero();
  Vec3 n1 = Vec3::Zero();
  Vec3 n2 = Vec3::Zero();
};

enum class LabelReason { kOk, kNoContact, kTooWide, kFrictionViolation, kCollision };

std::string to_string(LabelReason reason);
LabelReason label_reason_from_string(const std::string& name);

struct GraspLabel {
  bool stable = false;
  LabelReason reason = LabelReason::kNoContact;
  bool operator==(const GraspLabel&) const = default;
};

/// Gripper body boxes used for the collision test, in the gripper frame.
struct GripperBody {
  double finger_thickness = 0.010;  // along x, outside the opening
  double finger_width = 0.020;      // along y
  double palm_height = 0.020;       // below z = 0

  /// Two finger boxes then the palm box, as (lo, hi) corners.
  std::vector<Aabb> boxes(const GripperModel& gm) const;
};

struct LabeledGrasp {
  GraspPose pose;
  GraspLabel label;
};

/// The closing line runs through the center grasp point along the gripper x
/// axis, limited to +-max_opening/2. Returns the first surfaces the two
/// fingers meet while closing, or nothing when the line misses the mesh or a
/// finger starts inside it. Throws OracleUnsupported for non-watertight
/// meshes.
std::optional<ContactPair> find_contacts(const TriMesh& mesh, const GraspPose& g,
                                         const GripperModel& gm);

/// Stable iff contacts exist within the opening, both normals lie inside the
/// friction cone of half-angle atan(mu) about the closing line, and the
/// pre-close gripper body does not intersect the mesh. Reasons are checked
/// in the order too_wide, no_contact, friction_violation, collision.
GraspLabel label_grasp(const TriMesh& mesh, const GraspPose& g,
                       const GripperModel& gm, double mu,
                       const GripperBody& body = {});

/// Candidate generation: area-weighted surface point, closing axis along the
/// inward normal tilted by up to 15 degrees, grasp center on the chord
/// midpoint shifted along a randomly rolled approach axis. Each candidate
/// draws from its own stream derived from (seed, index).
std::vector<LabeledGrasp> sample_labeled_grasps(const TriMesh& mesh,
                                                const GripperModel& gm, double mu,
                                                std::size_t n, std::uint64_t seed);

/// Separating-axis triangle/box overlap test.
bool triangle_box_overlap(const Vec3& a, const Vec3& b, const Vec3& c,
                          const Aabb& box);

}  // namespace vcgs
