#include "vcgs/nn/layers.h"

#include <fmt/core.h>

#include <cmath>

#include "vcgs/common/error.h"

namespace vcgs::nn {

namespace {

std::string layer_name(const std::string& prefix, std::size_t i) {
  return fmt::format("{}.{}", prefix, i);
}

}  // namespace

void init_mlp(ParamStore& store, const std::string& prefix, Eigen::Index in,
              const std::vector<int>& widths, Rng& rng) {
  Eigen::Index prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] < 1) throw ConfigError("layer widths must be positive");
    init_linear(store, layer_name(prefix, i), prev, widths[i], rng);
    prev = widths[i];
  }
}

Var mlp(Tape& tape, ParamStore& store, const std::string& prefix, Var x, std::size_t layers,
        bool relu_last) {
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string name = layer_name(prefix, i);
    x = linear(x, tape.parameter(store, name + ".w"), tape.parameter(store, name + ".b"));
    if (i + 1 < layers || relu_last) x = relu(x);
  }
  return x;
}

Var set_encoder(Tape& tape, ParamStore& store, const std::string& prefix, Var points,
                Eigen::Index set_size, std::size_t layers) {
  if (points.rows() < 1) throw ShapeError("set_encoder: empty set");
  return max_pool_over_set(mlp(tape, store, prefix, points, layers, true), set_size);
}

Var kl_standard_normal(Var mu, Var log_var) {
  if (mu.rows() != log_var.rows() || mu.cols() != log_var.cols()) {
    throw ShapeError(fmt::format("kl_standard_normal: mu {}x{} vs log_var {}x{}", mu.rows(),
                                 mu.cols(), log_var.rows(), log_var.cols()));
  }
  const Var terms = sub(add(mul(mu, mu), exp(log_var)), log_var);
  return scale(add_scalar(sum(terms), -static_cast<double>(mu.value().size())), 0.5);
}

double kl_standard_normal(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var) {
  if (mu.size() != log_var.size()) throw ShapeError("kl_standard_normal: size mismatch");
  return 0.5 * (mu.array().square() + log_var.array().exp() - 1.0 - log_var.array()).sum();
}

Var reparameterize(Var mu, Var log_var, const Matrix& noise) {
  if (mu.rows() != noise.rows() || mu.cols() != noise.cols() || log_var.rows() != mu.rows() ||
      log_var.cols() != mu.cols()) {
    throw ShapeError("reparameterize: mu, log_var and noise shapes differ");
  }
  Tape& tape = *mu.tape();
  const Var sigma = exp(scale(clamp(log_var, kLogVarMin, kLogVarMax), 0.5));
  return add(mu, mul(sigma, tape.constant(noise)));
}

}  // namespace vcgs::nn
