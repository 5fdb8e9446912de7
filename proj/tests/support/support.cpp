#include "support.h"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vcgs/models/evaluator.h"
#include "vcgs/models/inputs.h"
#include "vcgs/models/sampler.h"
#include "vcgs/nn/layers.h"
#include "vcgs/nn/ops.h"

namespace vcgs::testing {

Quaternion random_quaternion(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Quaternion{n(rng), n(rng), n(rng), n(rng)}.normalized();
}

GraspPose random_pose(Rng& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  GraspPose g;
  g.rotation = random_quaternion(rng);
  g.position = Vec3(u(rng), u(rng), u(rng));
  return g;
}

Points random_points(Rng& rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Points p(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) p(i, j) = u(rng);
  }
  return p;
}

nn::Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

std::vector<std::size_t> brute_force_fps(const Points& pts, std::size_t k, std::size_t seed_index) {
  std::vector<std::size_t> chosen{seed_index};
  const auto n = static_cast<std::size_t>(pts.rows());
  while (chosen.size() < k) {
    double best = -1.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t c : chosen) {
        const double dx = pts(i, 0) - pts(c, 0);
        const double dy = pts(i, 1) - pts(c, 1);
        const double dz = pts(i, 2) - pts(c, 2);
        nearest = std::min(nearest, dx * dx + dy * dy + dz * dz);
      }
      if (nearest > best) {
        best = nearest;
        best_i = i;
      }
    }
    chosen.push_back(best_i);
  }
  return chosen;
}

namespace {

double rel_error(const nn::Matrix& analytic, const nn::Matrix& numeric) {
  const double denom = std::max({analytic.norm(), numeric.norm(), 1e-8});
  return (analytic - numeric).norm() / denom;
}

/// One-sided slopes that disagree by more than this (relative) mark a kink.
constexpr double kKinkTolerance = 1e-2;

bool is_kink(double down, double mid, double up, double h) {
  const double forward = (up - mid) / h;
  const double backward = (mid - down) / h;
  return std::abs(forward - backward) >
         kKinkTolerance * std::max({1.0, std::abs(forward), std::abs(backward)});
}

double eval_loss(const LossFn& loss, const std::vector<nn::Matrix>& inputs) {
  nn::Tape tape;
  std::vector<nn::Var> vars;
  for (const auto& m : inputs) vars.push_back(tape.constant(m));
  return loss(tape, vars).scalar();
}

}  // namespace

GradCheck gradcheck(const LossFn& loss, const std::vector<nn::Matrix>& inputs, double h) {
  std::vector<nn::Matrix> analytic;
  {
    nn::Tape tape;
    std::vector<nn::Var> vars;
    for (const auto& m : inputs) vars.push_back(tape.variable(m));
    tape.backward(loss(tape, vars));
    for (const auto& v : vars) analytic.push_back(v.grad());
  }
  GradCheck out;
  const double mid = eval_loss(loss, inputs);
  std::vector<nn::Matrix> work = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    nn::Matrix numeric(inputs[k].rows(), inputs[k].cols());
    for (Eigen::Index i = 0; i < numeric.size(); ++i) {
      const double x = inputs[k](i);
      work[k](i) = x + h;
      const double up = eval_loss(loss, work);
      work[k](i) = x - h;
      const double down = eval_loss(loss, work);
      work[k](i) = x;
      numeric(i) = (up - down) / (2.0 * h);
      out.kinked = out.kinked || is_kink(down, mid, up, h);
    }
    const double e = rel_error(analytic[k], numeric);
    if (e > out.max_rel_error) {
      out.max_rel_error = e;
      out.detail = fmt::format("input {}", k);
    }
  }
  return out;
}

GradCheck gradcheck_params(const std::function<nn::Var(nn::Tape&)>& loss, nn::ParamStore& store,
                           const std::vector<std::string>& skip, double h) {
  store.zero_grad();
  {
    nn::Tape tape;
    tape.backward(loss(tape));
  }
  GradCheck out;
  double mid;
  {
    nn::Tape tape;
    mid = loss(tape).scalar();
  }
  for (const auto& name : store.names()) {
    if (std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
    nn::Parameter& p = store.at(name);
    nn::Matrix numeric(p.value.rows(), p.value.cols());
    for (Eigen::Index i = 0; i < numeric.size(); ++i) {
      const double x = p.value(i);
      p.value(i) = x + h;
      double up, down;
      {
        nn::Tape tape;
        up = loss(tape).scalar();
      }
      p.value(i) = x - h;
      {
        nn::Tape tape;
        down = loss(tape).scalar();
      }
      p.value(i) = x;
      numeric(i) = (up - down) / (2.0 * h);
      out.kinked = out.kinked || is_kink(down, mid, up, h);
    }
    const double e = rel_error(p.grad, numeric);
    if (e > out.max_rel_error) {
      out.max_rel_error = e;
      out.detail = name;
    }
  }
  store.zero_grad();
  return out;
}

GradCheck run_smooth(const GradCase& c, Rng& rng, std::size_t* redraws) {
  GradCheck r;
  for (int attempt = 0; attempt < 50; ++attempt) {
    r = c.run(rng);
    if (!r.kinked) return r;
    if (redraws) ++*redraws;
  }
  return r;
}

namespace {

/// Weighted sum of every output entry, so each one reaches the loss.
nn::Var reduce(nn::Tape& tape, nn::Var out, const nn::Matrix& weights) {
  return nn::sum(nn::mul(out, tape.constant(weights)));
}

/// Entries with |x| in [margin, 1], random sign.
nn::Matrix away_from_zero(Rng& rng, Eigen::Index rows, Eigen::Index cols, double margin) {
  std::uniform_real_distribution<double> mag(margin, 1.0);
  std::bernoulli_distribution sign(0.5);
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = sign(rng) ? mag(rng) : -mag(rng);
  return m;
}

/// Unary elementwise/matrix op checked through a random weighted sum.
GradCase unary(std::string name, std::function<nn::Matrix(Rng&)> gen,
               std::function<nn::Var(nn::Var)> op) {
  return {name, [gen, op](Rng& rng) {
            const nn::Matrix x = gen(rng);
            nn::Var probe;
            nn::Matrix w;
            {
              nn::Tape t;
              probe = op(t.constant(x));
              w = random_matrix(rng, probe.rows(), probe.cols());
            }
            return gradcheck(
                [&](nn::Tape& t, const std::vector<nn::Var>& v) { return reduce(t, op(v[0]), w); },
                {x});
          }};
}

GradCase binary(std::string name, Eigen::Index ar, Eigen::Index ac, Eigen::Index br,
                Eigen::Index bc, std::function<nn::Var(nn::Var, nn::Var)> op) {
  return {name, [=](Rng& rng) {
            const nn::Matrix a = random_matrix(rng, ar, ac);
            const nn::Matrix b = random_matrix(rng, br, bc);
            nn::Matrix w;
            {
              nn::Tape t;
              const nn::Var o = op(t.constant(a), t.constant(b));
              w = random_matrix(rng, o.rows(), o.cols());
            }
            return gradcheck(
                [&](nn::Tape& t, const std::vector<nn::Var>& v) {
                  return reduce(t, op(v[0], v[1]), w);
                },
                {a, b});
          }};
}

nn::Matrix gaussian(Rng& rng, Eigen::Index r, Eigen::Index c) { return random_matrix(rng, r, c); }

/// Columns of distinct, well separated values in random row order.
nn::Matrix separated(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  nn::Matrix m(rows, cols);
  std::uniform_real_distribution<double> jitter(-0.02, 0.02);
  for (Eigen::Index c = 0; c < cols; ++c) {
    std::vector<double> vals;
    for (Eigen::Index r = 0; r < rows; ++r) vals.push_back(0.1 * static_cast<double>(r) + jitter(rng));
    std::shuffle(vals.begin(), vals.end(), rng);
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = vals[static_cast<std::size_t>(r)] - 0.3;
  }
  return m;
}

/// Stacked sets of random camera-frame clouds with area flags and grasps.
struct ToyBatch {
  nn::Matrix encoder;   // B*N x 11
  nn::Matrix target;    // B x 18
  nn::Matrix evaluator; // B*(N+6) x 4
  nn::Matrix labels;    // B x 1
};

ToyBatch toy_batch(Rng& rng, Eigen::Index batch, Eigen::Index n, const GripperModel& gm) {
  ToyBatch tb;
  tb.encoder.resize(batch * n, kEncoderFeatures);
  tb.target.resize(batch, 18);
  tb.evaluator.resize(batch * (n + 6), 4);
  tb.labels.resize(batch, 1);
  std::bernoulli_distribution coin(0.5);
  for (Eigen::Index b = 0; b < batch; ++b) {
    PointCloud cloud{random_points(rng, n, 0.05), CloudFrame::kCamera};
    cloud.points.rowwise() += Eigen::RowVector3d(0.0, 0.0, 0.5);
    TargetMask mask = TargetMask::none(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) mask.member[static_cast<std::size_t>(i)] = coin(rng);
    mask.member[0] = 1;
    GraspPose g = random_pose(rng, 0.05);
    g.position += Vec3(0.0, 0.0, 0.5);
    tb.encoder.middleRows(b * n, n) = encoder_input(cloud, mask, g);
    tb.target.row(b) = flat_control_points(g, gm);
    tb.evaluator.middleRows(b * (n + 6), n + 6) = evaluator_input(cloud, g, gm);
    tb.labels(b, 0) = coin(rng) ? 1.0 : 0.0;
  }
  return tb;
}

}  // namespace

std::vector<GradCase> gradient_cases() {
  using nn::Var;
  std::vector<GradCase> cases;
  cases.push_back(binary("matmul", 3, 4, 4, 2, [](Var a, Var b) { return nn::matmul(a, b); }));
  cases.push_back(binary("add", 3, 4, 3, 4, [](Var a, Var b) { return nn::add(a, b); }));
  cases.push_back(
      binary("add_row_broadcast", 3, 4, 1, 4, [](Var a, Var b) { return nn::add(a, b); }));
  cases.push_back(binary("sub", 3, 4, 3, 4, [](Var a, Var b) { return nn::sub(a, b); }));
  cases.push_back(binary("mul", 3, 4, 3, 4, [](Var a, Var b) { return nn::mul(a, b); }));
  cases.push_back(binary("linear_xw", 5, 3, 3, 4, [](Var x, Var w) {
    return nn::linear(x, w, x.tape()->constant(nn::Matrix::Constant(1, 4, 0.3)));
  }));
  cases.push_back({"linear", [](Rng& rng) {
                     const nn::Matrix w = random_matrix(rng, 5, 4);
                     return gradcheck(
                         [&](nn::Tape& t, const std::vector<Var>& v) {
                           return reduce(t, nn::linear(v[0], v[1], v[2]), w);
                         },
                         {gaussian(rng, 5, 3), gaussian(rng, 3, 4), gaussian(rng, 1, 4)});
                   }});
  cases.push_back(unary("scale", [](Rng& r) { return gaussian(r, 3, 4); },
                        [](Var a) { return nn::scale(a, -1.7); }));
  cases.push_back(unary("add_scalar", [](Rng& r) { return gaussian(r, 3, 4); },
                        [](Var a) { return nn::add_scalar(a, 0.3); }));
  cases.push_back(unary("relu", [](Rng& r) { return away_from_zero(r, 4, 5, 0.05); },
                        [](Var a) { return nn::relu(a); }));
  cases.push_back(unary("sigmoid", [](Rng& r) { return random_matrix(r, 4, 3, 2.0); },
                        [](Var a) { return nn::sigmoid(a); }));
  cases.push_back(unary("exp", [](Rng& r) { return gaussian(r, 3, 3); },
                        [](Var a) { return nn::exp(a); }));
  cases.push_back(unary("log",
                        [](Rng& r) {
                          return nn::Matrix(away_from_zero(r, 3, 3, 0.2).cwiseAbs() * 2.0);
                        },
                        [](Var a) { return nn::log(a); }));
  cases.push_back(unary("clamp",
                        [](Rng& r) {
                          // Keep clear of the bounds at +-0.5.
                          nn::Matrix m = away_from_zero(r, 4, 4, 0.05);
                          for (Eigen::Index i = 0; i < m.size(); ++i) {
                            if (std::abs(std::abs(m(i)) - 0.5) < 0.05) m(i) *= 1.3;
                          }
                          return m;
                        },
                        [](Var a) { return nn::clamp(a, -0.5, 0.5); }));
  cases.push_back({"concat_cols", [](Rng& rng) {
                     const nn::Matrix w = random_matrix(rng, 3, 6);
                     return gradcheck(
                         [&](nn::Tape& t, const std::vector<Var>& v) {
                           return reduce(t, nn::concat_cols({v[0], v[1], v[2]}), w);
                         },
                         {gaussian(rng, 3, 1), gaussian(rng, 3, 2), gaussian(rng, 3, 3)});
                   }});
  cases.push_back(unary("slice_cols", [](Rng& r) { return gaussian(r, 3, 6); },
                        [](Var a) { return nn::slice_cols(a, 1, 3); }));
  cases.push_back(unary("tile_rows", [](Rng& r) { return gaussian(r, 2, 3); },
                        [](Var a) { return nn::tile_rows(a, 4); }));
  cases.push_back(unary("max_pool_over_set", [](Rng& r) { return separated(r, 12, 3); },
                        [](Var a) { return nn::max_pool_over_set(a, 4); }));
  cases.push_back(unary("mean", [](Rng& r) { return gaussian(r, 3, 4); },
                        [](Var a) { return nn::mean(a); }));
  cases.push_back(unary("sum", [](Rng& r) { return gaussian(r, 3, 4); },
                        [](Var a) { return nn::sum(a); }));
  cases.push_back(unary("abs_sum", [](Rng& r) { return away_from_zero(r, 3, 4, 0.05); },
                        [](Var a) { return nn::abs_sum(a); }));
  cases.push_back(unary("normalize_rows", [](Rng& r) { return gaussian(r, 3, 4); },
                        [](Var a) {
                          return nn::normalize_rows(a, Eigen::RowVectorXd::Unit(4, 0));
                        }));
  cases.push_back({"rigid_points", [](Rng& rng) {
                     const nn::Matrix pts = random_matrix(rng, 6, 3, 0.05);
                     const nn::Matrix w = random_matrix(rng, 3, 18);
                     return gradcheck(
                         [&](nn::Tape& t, const std::vector<Var>& v) {
                           return reduce(t, nn::rigid_points(v[0], v[1], pts), w);
                         },
                         {gaussian(rng, 3, 4), gaussian(rng, 3, 3)});
                   }});
  cases.push_back({"kl_standard_normal", [](Rng& rng) {
                     return gradcheck(
                         [](nn::Tape&, const std::vector<Var>& v) {
                           return nn::kl_standard_normal(v[0], v[1]);
                         },
                         {gaussian(rng, 3, 2), gaussian(rng, 3, 2)});
                   }});
  cases.push_back({"reparameterize", [](Rng& rng) {
                     const nn::Matrix noise = gaussian(rng, 3, 2);
                     const nn::Matrix w = gaussian(rng, 3, 2);
                     return gradcheck(
                         [&](nn::Tape& t, const std::vector<Var>& v) {
                           return reduce(t, nn::reparameterize(v[0], v[1], noise), w);
                         },
                         {gaussian(rng, 3, 2), gaussian(rng, 3, 2)});
                   }});
  cases.push_back({"bce_loss", [](Rng& rng) {
                     nn::Matrix labels(6, 1);
                     std::bernoulli_distribution coin(0.5);
                     for (Eigen::Index i = 0; i < 6; ++i) labels(i, 0) = coin(rng) ? 1.0 : 0.0;
                     return gradcheck(
                         [&](nn::Tape& t, const std::vector<Var>& v) {
                           return bce_loss(t.constant(labels), nn::sigmoid(v[0]));
                         },
                         {random_matrix(rng, 6, 1, 2.0)});
                   }});
  cases.push_back({"reconstruction_loss", [](Rng& rng) {
                     const GripperModel gm = GripperModel::canonical();
                     nn::Matrix target(3, 18);
                     for (Eigen::Index i = 0; i < 3; ++i) {
                       target.row(i) = flat_control_points(random_pose(rng, 0.1), gm);
                     }
                     return gradcheck(
                         [&](nn::Tape&, const std::vector<Var>& v) {
                           const DecoderOutput d{
                               nn::normalize_rows(v[0], Eigen::RowVectorXd::Unit(4, 0)), v[1]};
                           return reconstruction_loss(d, target, gm);
                         },
                         {gaussian(rng, 3, 4), random_matrix(rng, 3, 3, 0.1)});
                   }});
  cases.push_back({"set_encoder", [](Rng& rng) {
                     nn::ParamStore store;
                     nn::init_mlp(store, "enc", 3, {5, 4}, rng);
                     const nn::Matrix pts = gaussian(rng, 12, 3);
                     const nn::Matrix w = gaussian(rng, 3, 4);
                     return gradcheck_params(
                         [&](nn::Tape& t) {
                           return reduce(t, nn::set_encoder(t, store, "enc", t.constant(pts), 4, 2),
                                         w);
                         },
                         store);
                   }});
  cases.push_back({"elbo_loss (composed sampler objective)", [](Rng& rng) {
                     const GripperModel gm = GripperModel::canonical();
                     SamplerConfig cfg;
                     cfg.trunk_widths = {6, 5};
                     cfg.head_widths = {5};
                     cfg.seed = rng();
                     SamplerModel model = SamplerModel::create(cfg, gm);
                     const ToyBatch tb = toy_batch(rng, 3, 8, gm);
                     const nn::Matrix noise = gaussian(rng, 3, cfg.latent_dim);
                     return gradcheck_params(
                         [&](nn::Tape& t) {
                           return sampler_elbo(t, model, tb.encoder, 8, tb.target, noise, 0.3, gm)
                               .loss;
                         },
                         model.params, {"decoder.grasp_center"});
                   }});
  cases.push_back({"bce_loss (composed evaluator objective)", [](Rng& rng) {
                     const GripperModel gm = GripperModel::canonical();
                     EvaluatorConfig cfg;
                     cfg.trunk_widths = {6, 5};
                     cfg.head_widths = {5};
                     cfg.seed = rng();
                     EvaluatorModel model = EvaluatorModel::create(cfg);
                     const ToyBatch tb = toy_batch(rng, 4, 8, gm);
                     return gradcheck_params(
                         [&](nn::Tape& t) {
                           const Var logits = evaluator_logits(t, model, tb.evaluator, 14, gm);
                           return bce_loss(t.constant(tb.labels), nn::sigmoid(logits));
                         },
                         model.params);
                   }});
  return cases;
}

}  // namespace vcgs::testing
