#include "vcgs/geometry/geometry.h"

#include <cmath>
#include <limits>
#include <string>

#include "vcgs/common/error.h"

namespace vcgs {

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
  const Vec3 a = axis.normalized();
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), a.x() * s, a.y() * s, a.z() * s};
}

Quaternion Quaternion::from_matrix(const Mat3& r) {
  const Eigen::Quaterniond q(r);
  return Quaternion{q.w(), q.x(), q.y(), q.z()}.normalized();
}

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

bool Quaternion::is_unit(double tol) const {
  return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) &&
         std::isfinite(z) && std::abs(norm() - 1.0) <= tol;
}

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) return identity();
  return {w / n, x / n, y / n, z / n};
}

Mat3 Quaternion::to_matrix() const {
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Quaternion operator*(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Vec3 GraspPose::apply(const Vec3& v) const {
  return rotate_point(rotation, v) + position;
}

GraspPose GraspPose::inverse() const {
  const Quaternion qi = rotation.conjugate();
  return {qi, -rotate_point(qi, position)};
}

bool GraspPose::is_valid() const {
  return rotation.is_unit() && position.allFinite();
}

GraspPose operator*(const GraspPose& a, const GraspPose& b) {
  return {(a.rotation * b.rotation).normalized(), a.apply(b.position)};
}

GripperModel GripperModel::canonical() {
  GripperModel gm;
  const double half = 0.5 * gm.max_opening;
  const double f = gm.finger_length;
  gm.control_points << half, 0.0, f,  //
      -half, 0.0, f,                  //
      half, 0.0, 0.5 * f,             //
      -half, 0.0, 0.5 * f,            //
      0.0, 0.0, 0.0,                  //
      0.0, 0.0, -0.066;
  return gm;
}

Vec3 GripperModel::center_local() const {
  return control_points.topRows<4>().colwise().mean().transpose();
}

void GripperModel::validate() const {
  const double half = 0.5 * max_opening;
  const bool ok = max_opening > 0.0 && assoc_distance_d > 0.0 &&
                  std::abs(control_points(0, 0) - half) < 1e-12 &&
                  std::abs(control_points(2, 0) - half) < 1e-12 &&
                  std::abs(control_points(1, 0) + half) < 1e-12 &&
                  std::abs(control_points(3, 0) + half) < 1e-12;
  if (!ok) throw InvariantError("gripper model: inconsistent control points");
}

Vec3 PointCloud::centroid() const {
  if (points.rows() == 0) throw EmptyCloud("centroid of empty cloud");
  return points.colwise().mean().transpose();
}

void PointCloud::validate() const {
  if (points.rows() < 1) throw EmptyCloud("point cloud has no points");
  if (!points.allFinite()) throw InvariantError("point cloud has non-finite coordinates");
}

std::size_t TargetMask::count() const {
  std::size_t n = 0;
  for (auto m : member) n += m != 0;
  return n;
}

Vec3 rotate_point(const Quaternion& q, const Vec3& v) {
  if (!q.is_unit()) {
    throw InvalidRotation("quaternion norm " + std::to_string(q.norm()) +
                          " is not unit");
  }
  // v' = v + 2w (u x v) + 2 u x (u x v)
  const Vec3 u(q.x, q.y, q.z);
  const Vec3 t = 2.0 * u.cross(v);
  return v + q.w * t + u.cross(t);
}

ControlPoints grasp_to_points(const GraspPose& g, const GripperModel& gm) {
  ControlPoints out;
  for (int i = 0; i < 6; ++i) {
    out.row(i) = g.apply(gm.control_points.row(i).transpose()).transpose();
  }
  return out;
}

Vec3 center_grasp_point(const GraspPose& g, const GripperModel& gm) {
  return grasp_to_points(g, gm).topRows<4>().colwise().mean().transpose();
}

double min_dist_to_area(const GraspPose& g, const PointCloud& cloud,
                        const TargetMask& mask, const GripperModel& gm) {
  if (mask.size() != cloud.size()) {
    throw ShapeError("mask length " + std::to_string(mask.size()) +
                     " != cloud size " + std::to_string(cloud.size()));
  }
  const Vec3 c = center_grasp_point(g, gm);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!mask.member[i]) continue;
    best = std::min(best, (cloud.point(i) - c).squaredNorm());
  }
  if (!std::isfinite(best)) throw EmptyTarget("target mask has no members");
  return std::sqrt(best);
}

bool is_on_target(const GraspPose& g, const PointCloud& cloud,
                  const TargetMask& mask, const GripperModel& gm) {
  return min_dist_to_area(g, cloud, mask, gm) <= gm.assoc_distance_d;
}

}  // namespace vcgs
