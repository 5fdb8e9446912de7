#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vcgs/common/rng.h"
#include "vcgs/geometry/geometry.h"
#include "vcgs/nn/params.h"
#include "vcgs/nn/tape.h"

namespace vcgs::testing {

Quaternion random_quaternion(Rng& rng);
/// Random rotation and a position with coordinates in [-scale, scale].
GraspPose random_pose(Rng& rng, double scale = 0.5);
Points random_points(Rng& rng, Eigen::Index n, double scale = 1.0);
nn::Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0);

/// Independent greedy farthest-point reference: O(k N^2), lowest index wins
/// ties.
std::vector<std::size_t> brute_force_fps(const Points& pts, std::size_t k, std::size_t seed_index);

/// Builds a scalar loss from leaf variables created from `inputs`.
using LossFn = std::function<nn::Var(nn::Tape&, const std::vector<nn::Var>&)>;

struct GradCheck {
  /// Worst over inputs of |analytic - numeric|_2 / max(|analytic|_2,
  /// |numeric|_2, 1e-8).
  double max_rel_error = 0.0;
  std::string detail;
  /// Some coordinate sits within h of a non-differentiable point (its
  /// one-sided slopes disagree); the instance is not a valid check.
  bool kinked = false;
};

/// Central finite differences with step h against tape.backward().
GradCheck gradcheck(const LossFn& loss, const std::vector<nn::Matrix>& inputs,
                    double h = 1e-5);

/// Same check over every parameter of `store` (except `skip`), where `loss`
/// reads parameters through tape.parameter().
GradCheck gradcheck_params(const std::function<nn::Var(nn::Tape&)>& loss, nn::ParamStore& store,
                           const std::vector<std::string>& skip = {}, double h = 1e-5);

/// One autodiff primitive or composed loss with a generator for random
/// well-conditioned instances (away from kinks of non-smooth ops).
struct GradCase {
  std::string name;
  std::function<GradCheck(Rng&)> run;
};

/// Runs `c` on fresh instances until one is free of kinks (at most 50
/// draws).
GradCheck run_smooth(const GradCase& c, Rng& rng, std::size_t* redraws = nullptr);

/// Every primitive plus the composed reconstruction, ELBO and BCE losses.
std::vector<GradCase> gradient_cases();

}  // namespace vcgs::testing
