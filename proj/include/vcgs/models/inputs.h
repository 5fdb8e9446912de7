#pragma once

#include "vcgs/geometry/geometry.h"
#include "vcgs/nn/tape.h"

// Network input layouts. Rows are per point; columns as documented.
namespace vcgs {

inline constexpr Eigen::Index kEncoderFeatures = 11;
inline constexpr Eigen::Index kEvaluatorFeatures = 4;

/// N x 11: [xyz | area flag | qw qx qy qz px py pz], the pose tiled on every
/// row. The quaternion is sign-canonicalized (w >= 0).
nn::Matrix encoder_input(const PointCloud& cloud, const TargetMask& mask, const GraspPose& g);

/// N x (4 + L): [xyz | area flag | latent].
nn::Matrix decoder_input(const PointCloud& cloud, const TargetMask& mask,
                         const Eigen::VectorXd& latent);

/// (N + 6) x 4: object points with flag 0, then grasp_to_points(g) with
/// flag 1.
nn::Matrix evaluator_input(const PointCloud& cloud, const GraspPose& g, const GripperModel& gm);

/// Checks column count, flag values and per-row tiling. Throws ShapeError.
void check_encoder_input(const nn::Matrix& input);
void check_decoder_input(const nn::Matrix& input, Eigen::Index latent_dim);
void check_evaluator_input(const nn::Matrix& input);

/// Mean of the xyz columns; the networks work relative to it.
Vec3 input_centroid(const nn::Matrix& input, Eigen::Index rows);

/// Coordinates are centered on the cloud centroid and multiplied by this.
inline constexpr double kInputScale = 10.0;

}  // namespace vcgs
