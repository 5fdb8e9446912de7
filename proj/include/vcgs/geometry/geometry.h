#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <vector>

namespace vcgs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
/// Row-major N x 3 block of points.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
/// Six gripper control points, one per row.
using ControlPoints = Eigen::Matrix<double, 6, 3, Eigen::RowMajor>;

inline constexpr double kUnitTolerance = 1e-6;

/// Rotation quaternion stored as (w, x, y, z).
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion identity() { return {}; }
  static Quaternion from_axis_angle(const Vec3& axis, double angle);
  static Quaternion from_matrix(const Mat3& r);

  double norm() const;
  bool is_unit(double tol = kUnitTolerance) const;
  /// Unit copy. A zero quaternion normalizes to identity.
  Quaternion normalized() const;
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  Quaternion operator-() const { return {-w, -x, -y, -z}; }
  /// Rotation matrix; requires a unit quaternion.
  Mat3 to_matrix() const;
};

Quaternion operator*(const Quaternion& a, const Quaternion& b);

/// Gripper pose: rotation then translation, gripper frame -> cloud frame.
/// Also used as a generic rigid transform.
struct GraspPose {
  Quaternion rotation;
  Vec3 position = Vec3::Zero();

  static GraspPose identity() { return {}; }
  Vec3 apply(const Vec3& v) const;
  GraspPose inverse() const;
  bool is_valid() const;
};

/// (a * b).apply(v) == a.apply(b.apply(v)).
GraspPose operator*(const GraspPose& a, const GraspPose& b);

/// Parallel-jaw gripper as six control points. Rows 0..3 are the fingertip
/// and mid-finger points (x = +-max_opening/2), row 4 is the palm and row 5
/// the base.
struct GripperModel {
  ControlPoints control_points;
  double max_opening = 0.08;
  double finger_length = 0.046;
  double assoc_distance_d = 0.02;

  /// Franka-like parallel jaw: closing axis x, approach axis +z.
  static GripperModel canonical();

  /// Center grasp point in the gripper frame (mean of rows 0..3).
  Vec3 center_local() const;
  void validate() const;
};

enum class CloudFrame : std::uint8_t { kCamera = 0, kObject = 1 };

struct PointCloud {
  Points points;
  CloudFrame frame = CloudFrame::kCamera;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  Vec3 point(std::size_t i) const {
    return points.row(static_cast<Eigen::Index>(i)).transpose();
  }
  Vec3 centroid() const;
  void validate() const;
};

/// Per-point membership in a target area; aligned with a PointCloud.
struct TargetMask {
  std::vector<std::uint8_t> member;

  static TargetMask all(std::size_t n) { return {std::vector<std::uint8_t>(n, 1)}; }
  static TargetMask none(std::size_t n) { return {std::vector<std::uint8_t>(n, 0)}; }

  std::size_t size() const { return member.size(); }
  std::size_t count() const;
  bool operator==(const TargetMask&) const = default;
};

/// R(q) v. Throws InvalidRotation if q is not unit within 1e-6.
Vec3 rotate_point(const Quaternion& q, const Vec3& v);

/// The gripper's point-cloud image under g: row i = R(q) cp_i + p.
ControlPoints grasp_to_points(const GraspPose& g, const GripperModel& gm);

/// Mean of the four fingertip/mid-finger points after applying g.
Vec3 center_grasp_point(const GraspPose& g, const GripperModel& gm);

/// Distance from the center grasp point to the nearest masked point.
/// Throws EmptyTarget if the mask has no members.
double min_dist_to_area(const GraspPose& g, const PointCloud& cloud,
                        const TargetMask& mask, const GripperModel& gm);

/// Closed test: min_dist_to_area <= gm.assoc_distance_d.
bool is_on_target(const GraspPose& g, const PointCloud& cloud,
                  const TargetMask& mask, const GripperModel& gm);

}  // namespace vcgs
