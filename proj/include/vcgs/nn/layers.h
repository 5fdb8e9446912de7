#pragma once

#include <string>
#include <vector>

#include "vcgs/common/rng.h"
#include "vcgs/nn/ops.h"
#include "vcgs/nn/params.h"

namespace vcgs::nn {

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

/// Registers `<prefix>.<i>.w/b` for a chain in -> widths[0] -> ... .
void init_mlp(ParamStore& store, const std::string& prefix, Eigen::Index in,
              const std::vector<int>& widths, Rng& rng);

/// Applies the chain registered by init_mlp. ReLU follows every layer except,
/// when `relu_last` is false, the final one.
Var mlp(Tape& tape, ParamStore& store, const std::string& prefix, Var x,
        std::size_t layers, bool relu_last);

/// Shared per-point MLP then max-pool. `points` stacks B sets of `set_size`
/// rows; the result is B x widths.back(). Registered with init_mlp under
/// `prefix`.
Var set_encoder(Tape& tape, ParamStore& store, const std::string& prefix, Var points,
                Eigen::Index set_size, std::size_t layers);

/// 0.5 * sum(mu^2 + exp(log_var) - 1 - log_var) over every element.
Var kl_standard_normal(Var mu, Var log_var);
double kl_standard_normal(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var);

/// mu + exp(log_var / 2) * noise with log_var clamped to [-10, 10].
Var reparameterize(Var mu, Var log_var, const Matrix& noise);

}  // namespace vcgs::nn
