#include "vcgs/models/inputs.h"

#include <fmt/core.h>

#include "vcgs/common/error.h"

namespace vcgs {

namespace {

void check_aligned(const PointCloud& cloud, const TargetMask& mask) {
  if (cloud.size() == 0) throw EmptyCloud("network input needs a non-empty cloud");
  if (mask.size() != cloud.size()) {
    throw ShapeError(fmt::format("mask has {} entries for {} points", mask.size(), cloud.size()));
  }
}

void check_flags(const nn::Matrix& input, Eigen::Index col, Eigen::Index rows) {
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double f = input(r, col);
    if (f != 0.0 && f != 1.0) throw ShapeError(fmt::format("flag at row {} is {}", r, f));
  }
}

void check_tiled(const nn::Matrix& input, Eigen::Index start, Eigen::Index count) {
  for (Eigen::Index r = 1; r < input.rows(); ++r) {
    if (input.block(r, start, 1, count) != input.block(0, start, 1, count)) {
      throw ShapeError(fmt::format("tiled columns differ at row {}", r));
    }
  }
}

}  // namespace

nn::Matrix encoder_input(const PointCloud& cloud, const TargetMask& mask, const GraspPose& g) {
  check_aligned(cloud, mask);
  if (!g.is_valid()) throw InvalidRotation("encoder input: grasp rotation is not unit");
  const Eigen::Index n = cloud.points.rows();
  const Quaternion q = g.rotation.w < 0.0 ? -g.rotation : g.rotation;
  Eigen::Matrix<double, 1, 7> pose;
  pose << q.w, q.x, q.y, q.z, g.position.x(), g.position.y(), g.position.z();
  nn::Matrix out(n, kEncoderFeatures);
  out.leftCols(3) = cloud.points;
  for (Eigen::Index r = 0; r < n; ++r) out(r, 3) = mask.member[static_cast<std::size_t>(r)];
  out.rightCols(7).rowwise() = pose;
  return out;
}

nn::Matrix decoder_input(const PointCloud& cloud, const TargetMask& mask,
                         const Eigen::VectorXd& latent) {
  check_aligned(cloud, mask);
  if (latent.size() < 1) throw ShapeError("decoder input: empty latent");
  const Eigen::Index n = cloud.points.rows();
  nn::Matrix out(n, 4 + latent.size());
  out.leftCols(3) = cloud.points;
  for (Eigen::Index r = 0; r < n; ++r) out(r, 3) = mask.member[static_cast<std::size_t>(r)];
  out.rightCols(latent.size()).rowwise() = latent.transpose();
  return out;
}

nn::Matrix evaluator_input(const PointCloud& cloud, const GraspPose& g, const GripperModel& gm) {
  if (cloud.size() == 0) throw EmptyCloud("evaluator input needs a non-empty cloud");
  const Eigen::Index n = cloud.points.rows();
  nn::Matrix out = nn::Matrix::Zero(n + 6, kEvaluatorFeatures);
  out.topLeftCorner(n, 3) = cloud.points;
  out.bottomLeftCorner(6, 3) = grasp_to_points(g, gm);
  out.bottomRightCorner(6, 1).setOnes();
  return out;
}

void check_encoder_input(const nn::Matrix& input) {
  if (input.cols() != kEncoderFeatures || input.rows() < 1) {
    throw ShapeError(fmt::format("encoder input must be N x {}, got {}x{}", kEncoderFeatures,
                                 input.rows(), input.cols()));
  }
  check_flags(input, 3, input.rows());
  check_tiled(input, 4, 7);
}

void check_decoder_input(const nn::Matrix& input, Eigen::Index latent_dim) {
  if (input.cols() != 4 + latent_dim || input.rows() < 1) {
    throw ShapeError(fmt::format("decoder input must be N x {}, got {}x{}", 4 + latent_dim,
                                 input.rows(), input.cols()));
  }
  check_flags(input, 3, input.rows());
  check_tiled(input, 4, latent_dim);
}

void check_evaluator_input(const nn::Matrix& input) {
  if (input.cols() != kEvaluatorFeatures || input.rows() < 7) {
    throw ShapeError(fmt::format("evaluator input must be (N+6) x {}, got {}x{}",
                                 kEvaluatorFeatures, input.rows(), input.cols()));
  }
  const Eigen::Index n = input.rows() - 6;
  for (Eigen::Index r = 0; r < input.rows(); ++r) {
    const double want = r < n ? 0.0 : 1.0;
    if (input(r, 3) != want) {
      throw ShapeError(fmt::format("evaluator input: row {} has flag {}, expected {}", r,
                                   input(r, 3), want));
    }
  }
}

Vec3 input_centroid(const nn::Matrix& input, Eigen::Index rows) {
  return input.topLeftCorner(rows, 3).colwise().mean().transpose();
}

}  // namespace vcgs
