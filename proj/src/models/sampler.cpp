#include "vcgs/models/sampler.h"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "vcgs/common/error.h"
#include "vcgs/common/log.h"
#include "vcgs/common/rng.h"
#include "vcgs/models/inputs.h"

namespace vcgs {

namespace {

const char* const kEncTrunk = "encoder.trunk";
const char* const kEncHead = "encoder.head";
const char* const kEncOut = "encoder.out";
const char* const kDecTrunk = "decoder.trunk";
const char* const kDecHead = "decoder.head";
const char* const kDecOut = "decoder.out";
// Gripper-frame center grasp point; stored with the weights but never
// trained (it only enters the tape as a constant).
const char* const kGraspCenter = "decoder.grasp_center";

std::size_t count_layers(const nn::ParamStore& params, const std::string& prefix) {
  std::size_t n = 0;
  while (params.contains(fmt::format("{}.{}.w", prefix, n))) ++n;
  return n;
}

/// Per-set anchors (B x 3): the mean of the rows flagged as target area, or
/// of all rows when none is flagged.
nn::Matrix set_centroids(const nn::Matrix& stacked, Eigen::Index set_size) {
  if (set_size < 1 || stacked.rows() % set_size != 0 || stacked.rows() == 0) {
    throw ShapeError(fmt::format("stacked input has {} rows, not a multiple of {}",
                                 stacked.rows(), set_size));
  }
  const Eigen::Index sets = stacked.rows() / set_size;
  nn::Matrix c(sets, 3);
  for (Eigen::Index b = 0; b < sets; ++b) {
    const auto block = stacked.middleRows(b * set_size, set_size);
    Eigen::RowVector3d acc = Eigen::RowVector3d::Zero();
    double count = 0.0;
    for (Eigen::Index r = 0; r < set_size; ++r) {
      if (block(r, 3) != 0.0) {
        acc += block.block(r, 0, 1, 3);
        count += 1.0;
      }
    }
    c.row(b) = count > 0.0 ? Eigen::RowVector3d(acc / count)
                           : Eigen::RowVector3d(block.leftCols(3).colwise().mean());
  }
  return c;
}

/// Centers xyz (and optionally the tiled position columns) per set and
/// scales them.
nn::Matrix normalize_stacked(const nn::Matrix& stacked, const nn::Matrix& centroids,
                             Eigen::Index set_size, Eigen::Index position_col) {
  nn::Matrix out = stacked;
  for (Eigen::Index b = 0; b < centroids.rows(); ++b) {
    auto block = out.middleRows(b * set_size, set_size);
    block.leftCols(3) =
        (block.leftCols(3).rowwise() - centroids.row(b)) * kInputScale;
    if (position_col >= 0) {
      block.middleCols(position_col, 3) =
          (block.middleCols(position_col, 3).rowwise() - centroids.row(b)) * kInputScale;
    }
  }
  return out;
}

EncoderOutput encoder_forward(nn::Tape& tape, SamplerModel& m, nn::Var features,
                              Eigen::Index set_size) {
  nn::Var global = nn::set_encoder(tape, m.params, kEncTrunk, features, set_size, m.trunk_layers);
  global = nn::mlp(tape, m.params, kEncHead, global, m.head_layers, true);
  const nn::Var out = nn::mlp(tape, m.params, kEncOut, global, 1, false);
  return {nn::slice_cols(out, 0, m.latent_dim), nn::slice_cols(out, m.latent_dim, m.latent_dim)};
}

DecoderOutput decoder_forward(nn::Tape& tape, SamplerModel& m, nn::Var features,
                              const nn::Matrix& centroids, Eigen::Index set_size) {
  nn::Var global = nn::set_encoder(tape, m.params, kDecTrunk, features, set_size, m.trunk_layers);
  global = nn::mlp(tape, m.params, kDecHead, global, m.head_layers, true);
  const nn::Var raw = nn::mlp(tape, m.params, kDecOut, global, 1, false);
  Eigen::RowVectorXd identity = Eigen::RowVectorXd::Zero(4);
  identity(0) = 1.0;
  const nn::Var quat = nn::normalize_rows(nn::slice_cols(raw, 0, 4), identity);
  // The raw translation places the center grasp point relative to the
  // anchor; the gripper origin follows from the rotation.
  const nn::Var center = nn::add(nn::scale(nn::slice_cols(raw, 4, 3), 1.0 / kInputScale),
                                 tape.constant(centroids));
  const nn::Var offset = nn::rigid_points(quat, tape.constant(nn::Matrix::Zero(quat.rows(), 3)),
                                          m.params.at(kGraspCenter).value);
  return {quat, nn::sub(center, offset)};
}

nn::Matrix control_points_matrix(const GripperModel& gm) {
  return nn::Matrix(gm.control_points);
}

}  // namespace

void SamplerConfig::validate() const {
  if (latent_dim < 1) throw ConfigError("sampler: latent_dim must be >= 1");
  if (!(alpha >= 0.0)) throw ConfigError("sampler: alpha must be >= 0");
  if (trunk_widths.empty()) throw ConfigError("sampler: trunk_widths must be non-empty");
  for (int w : trunk_widths) {
    if (w < 1) throw ConfigError("sampler: widths must be positive");
  }
  for (int w : head_widths) {
    if (w < 1) throw ConfigError("sampler: widths must be positive");
  }
  if (!(lr > 0.0)) throw ConfigError("sampler: lr must be > 0");
  if (epochs < 1 || batch_size < 1) throw ConfigError("sampler: epochs and batch_size must be >= 1");
}

SamplerModel SamplerModel::create(const SamplerConfig& cfg, const GripperModel& gm) {
  cfg.validate();
  SamplerModel m;
  m.latent_dim = cfg.latent_dim;
  m.trunk_layers = cfg.trunk_widths.size();
  m.head_layers = cfg.head_widths.size();
  Rng rng(derive_seed(cfg.seed, "sampler-init"));
  const int global = cfg.trunk_widths.back();
  const int head_out = cfg.head_widths.empty() ? global : cfg.head_widths.back();
  nn::init_mlp(m.params, kEncTrunk, kEncoderFeatures, cfg.trunk_widths, rng);
  nn::init_mlp(m.params, kEncHead, global, cfg.head_widths, rng);
  nn::init_mlp(m.params, kEncOut, head_out, {2 * cfg.latent_dim}, rng);
  nn::init_mlp(m.params, kDecTrunk, 4 + cfg.latent_dim, cfg.trunk_widths, rng);
  nn::init_mlp(m.params, kDecHead, global, cfg.head_widths, rng);
  nn::init_mlp(m.params, kDecOut, head_out, {7}, rng);
  // Start the raw quaternion near identity so it is never close to zero.
  m.params.at(std::string(kDecOut) + ".0.b").value(0, 0) = 1.0;
  m.params.add(kGraspCenter, nn::Matrix(gm.center_local().transpose()));
  return m;
}

SamplerModel SamplerModel::from_params(nn::ParamStore params) {
  SamplerModel m;
  m.trunk_layers = count_layers(params, kEncTrunk);
  m.head_layers = count_layers(params, kEncHead);
  if (m.trunk_layers == 0 || count_layers(params, kEncOut) != 1 ||
      count_layers(params, kDecOut) != 1 || count_layers(params, kDecTrunk) != m.trunk_layers ||
      count_layers(params, kDecHead) != m.head_layers || !params.contains(kGraspCenter) ||
      params.at(kGraspCenter).value.rows() != 1 || params.at(kGraspCenter).value.cols() != 3) {
    throw ConfigError("checkpoint does not hold a sampler model");
  }
  const auto& enc_out = params.at(std::string(kEncOut) + ".0.w").value;
  const auto& dec_in = params.at(std::string(kDecTrunk) + ".0.w").value;
  const auto& enc_in = params.at(std::string(kEncTrunk) + ".0.w").value;
  const auto& dec_out = params.at(std::string(kDecOut) + ".0.w").value;
  if (enc_out.cols() % 2 != 0 || enc_in.rows() != kEncoderFeatures || dec_out.cols() != 7) {
    throw ConfigError("checkpoint does not hold a sampler model");
  }
  m.latent_dim = static_cast<int>(enc_out.cols() / 2);
  if (dec_in.rows() != 4 + m.latent_dim) {
    throw ConfigError("checkpoint: decoder input width does not match the latent size");
  }
  m.params = std::move(params);
  return m;
}

EncoderOutput encode_batch(nn::Tape& tape, SamplerModel& model, const nn::Matrix& stacked,
                           Eigen::Index set_size) {
  if (stacked.cols() != kEncoderFeatures) {
    throw ShapeError(fmt::format("encoder input must have {} columns, got {}", kEncoderFeatures,
                                 stacked.cols()));
  }
  const nn::Matrix c = set_centroids(stacked, set_size);
  return encoder_forward(tape, model, tape.constant(normalize_stacked(stacked, c, set_size, 8)),
                         set_size);
}

DecoderOutput decode_batch(nn::Tape& tape, SamplerModel& model, const nn::Matrix& stacked,
                           Eigen::Index set_size) {
  if (stacked.cols() != 4 + model.latent_dim) {
    throw ShapeError(fmt::format("decoder input must have {} columns, got {}",
                                 4 + model.latent_dim, stacked.cols()));
  }
  const nn::Matrix c = set_centroids(stacked, set_size);
  return decoder_forward(tape, model, tape.constant(normalize_stacked(stacked, c, set_size, -1)),
                         c, set_size);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(SamplerModel& model, const nn::Matrix& input) {
  check_encoder_input(input);
  nn::Tape tape;
  const EncoderOutput out = encode_batch(tape, model, input, input.rows());
  return {out.mu.value().row(0).transpose(), out.log_var.value().row(0).transpose()};
}

GraspPose decode(SamplerModel& model, const nn::Matrix& input) {
  check_decoder_input(input, model.latent_dim);
  nn::Tape tape;
  const DecoderOutput out = decode_batch(tape, model, input, input.rows());
  const auto& q = out.quat.value();
  GraspPose g;
  g.rotation = {q(0, 0), q(0, 1), q(0, 2), q(0, 3)};
  g.position = out.position.value().row(0).transpose();
  if (q(0, 0) == 1.0 && q.row(0).tail(3).isZero(0.0)) {
    log::warn("decoder produced a zero raw quaternion; using identity");
  }
  return g;
}

Eigen::RowVectorXd flat_control_points(const GraspPose& g, const GripperModel& gm) {
  const ControlPoints pts = grasp_to_points(g, gm);
  return Eigen::Map<const Eigen::RowVectorXd>(pts.data(), 18);
}

nn::Var reconstruction_loss(const DecoderOutput& decoded, const nn::Matrix& target,
                            const GripperModel& gm) {
  nn::Tape& tape = *decoded.quat.tape();
  const nn::Var h = nn::rigid_points(decoded.quat, decoded.position, control_points_matrix(gm));
  if (target.rows() != h.rows() || target.cols() != 18) {
    throw ShapeError(fmt::format("reconstruction target must be {}x18, got {}x{}", h.rows(),
                                 target.rows(), target.cols()));
  }
  return nn::scale(nn::abs_sum(nn::sub(h, tape.constant(target))),
                   1.0 / static_cast<double>(target.rows()));
}

double reconstruction_loss(const GraspPose& target, const GraspPose& predicted,
                           const GripperModel& gm) {
  return (grasp_to_points(target, gm) - grasp_to_points(predicted, gm)).cwiseAbs().sum();
}

nn::Var elbo_loss(nn::Var recon, nn::Var mu, nn::Var log_var, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("elbo_loss: alpha must be >= 0");
  const double batch = static_cast<double>(mu.rows());
  return nn::add(recon, nn::scale(nn::kl_standard_normal(mu, log_var), alpha / batch));
}

ElboTerms sampler_elbo(nn::Tape& tape, SamplerModel& model, const nn::Matrix& encoder_stacked,
                       Eigen::Index set_size, const nn::Matrix& target, const nn::Matrix& noise,
                       double alpha, const GripperModel& gm) {
  const EncoderOutput e = encode_batch(tape, model, encoder_stacked, set_size);
  if (noise.rows() != e.mu.rows() || noise.cols() != e.mu.cols()) {
    throw ShapeError(fmt::format("noise must be {}x{}, got {}x{}", e.mu.rows(), e.mu.cols(),
                                 noise.rows(), noise.cols()));
  }
  const nn::Var z = nn::reparameterize(e.mu, e.log_var, noise);

  const nn::Matrix centroids = set_centroids(encoder_stacked, set_size);
  nn::Matrix base = normalize_stacked(encoder_stacked.leftCols(4), centroids, set_size, -1);
  const nn::Var features =
      nn::concat_cols({tape.constant(std::move(base)), nn::tile_rows(z, set_size)});
  const DecoderOutput d = decoder_forward(tape, model, features, centroids, set_size);

  ElboTerms out;
  out.recon = reconstruction_loss(d, target, gm);
  out.kl = nn::kl_standard_normal(e.mu, e.log_var);
  out.loss = elbo_loss(out.recon, e.mu, e.log_var, alpha);
  return out;
}

namespace {

struct Example {
  std::size_t record;
  std::size_t grasp;
};

struct BatchLoss {
  double loss;
  double recon;
  double kl;
};

BatchLoss train_batch(SamplerModel& model, const std::vector<DatasetRecord>& records,
                      const std::vector<Example>& batch, const SamplerConfig& cfg,
                      double alpha, const GripperModel& gm, Rng& rng) {
  const Eigen::Index n = records[batch.front().record].cloud.points.rows();
  const auto b = static_cast<Eigen::Index>(batch.size());
  const int latent = model.latent_dim;
  nn::Matrix enc(b * n, kEncoderFeatures);
  nn::Matrix target(b, 18);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Example& ex = batch[static_cast<std::size_t>(i)];
    const DatasetRecord& rec = records[ex.record];
    const TargetMask mask = cfg.unconstrained ? TargetMask::all(rec.cloud.size()) : rec.mask;
    enc.middleRows(i * n, n) = encoder_input(rec.cloud, mask, rec.grasps[ex.grasp]);
    target.row(i) = flat_control_points(rec.grasps[ex.grasp], gm);
  }
  nn::Matrix noise(b, latent);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (int j = 0; j < latent; ++j) noise(i, j) = normal(rng);
  }

  nn::Tape tape;
  const ElboTerms t = sampler_elbo(tape, model, enc, n, target, noise, alpha, gm);
  tape.backward(t.loss);
  nn::adam_step(model.params, {cfg.lr});
  return {t.loss.scalar(), t.recon.scalar(), t.kl.scalar() / static_cast<double>(b)};
}

}  // namespace

SamplerTraining train_sampler(const std::vector<DatasetRecord>& records,
                              const SamplerConfig& cfg, const GripperModel& gm,
                              const std::filesystem::path& rescue_path) {
  cfg.validate();
  if (records.empty()) throw ConfigError("train_sampler: empty training split");
  const std::size_t n_points = records.front().cloud.size();
  std::vector<Example> all;
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].cloud.size() != n_points) {
      throw ConfigError("train_sampler: every record must have the same number of points");
    }
    for (std::size_t k = 0; k < records[r].grasps.size(); ++k) all.push_back({r, k});
  }
  if (all.empty()) throw ConfigError("train_sampler: no grasps in the training split");

  SamplerTraining out{SamplerModel::create(cfg, gm), {}};
  nn::ParamStore last_good = out.model.params;
  Rng rng(derive_seed(cfg.seed, "sampler-train"));
  const std::size_t warmup = cfg.alpha_warmup ? std::max<std::size_t>(1, cfg.epochs / 10) : 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<Example> order;
    if (cfg.examples_per_epoch == 0) {
      order = all;
      std::shuffle(order.begin(), order.end(), rng);
    } else {
      order.reserve(cfg.examples_per_epoch);
      for (std::size_t i = 0; i < cfg.examples_per_epoch; ++i) {
        const std::size_t r = std::uniform_int_distribution<std::size_t>(0, records.size() - 1)(rng);
        const std::size_t k =
            std::uniform_int_distribution<std::size_t>(0, records[r].grasps.size() - 1)(rng);
        order.push_back({r, k});
      }
    }
    const double alpha =
        epoch < warmup ? cfg.alpha * static_cast<double>(epoch) / static_cast<double>(warmup)
                       : cfg.alpha;
    EpochStats stats;
    stats.epoch = epoch;
    try {
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        const std::vector<Example> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
        const BatchLoss bl = train_batch(out.model, records, batch, cfg, alpha, gm, rng);
        const double w = static_cast<double>(batch.size());
        stats.loss += bl.loss * w;
        stats.recon += bl.recon * w;
        stats.kl += bl.kl * w;
      }
    } catch (const TrainingDiverged& e) {
      if (!rescue_path.empty()) nn::write_checkpoint_file(rescue_path, last_good);
      throw TrainingDiverged(fmt::format("sampler training diverged in epoch {}: {}", epoch,
                                         e.what()));
    }
    const double total = static_cast<double>(order.size());
    stats.loss /= total;
    stats.recon /= total;
    stats.kl /= total;
    if (!std::isfinite(stats.loss)) {
      if (!rescue_path.empty()) nn::write_checkpoint_file(rescue_path, last_good);
      throw TrainingDiverged(fmt::format("sampler loss is not finite in epoch {}", epoch));
    }
    out.log.push_back(stats);
    last_good = out.model.params;
    log::info("sampler epoch {}/{}: loss {:.5f} recon {:.5f} kl {:.4f}", epoch + 1, cfg.epochs,
              stats.loss, stats.recon, stats.kl);
  }
  return out;
}

std::vector<GraspPose> sample_grasps(SamplerModel& model, const PointCloud& cloud,
                                     const TargetMask& mask, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample_grasps: n must be >= 1");
  const nn::Matrix base = decoder_input(cloud, mask, Eigen::VectorXd::Zero(model.latent_dim));
  const Eigen::Index rows = base.rows();
  const int latent = model.latent_dim;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  nn::Matrix z(static_cast<Eigen::Index>(n), latent);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (int j = 0; j < latent; ++j) z(i, j) = normal(rng);
  }
  std::vector<GraspPose> out;
  out.reserve(n);
  constexpr Eigen::Index kChunk = 32;
  for (Eigen::Index start = 0; start < z.rows(); start += kChunk) {
    const Eigen::Index b = std::min(kChunk, z.rows() - start);
    nn::Matrix stacked(b * rows, 4 + latent);
    for (Eigen::Index i = 0; i < b; ++i) {
      auto block = stacked.middleRows(i * rows, rows);
      block.leftCols(4) = base.leftCols(4);
      block.rightCols(latent).rowwise() = z.row(start + i);
    }
    nn::Tape tape;
    const DecoderOutput d = decode_batch(tape, model, stacked, rows);
    for (Eigen::Index i = 0; i < b; ++i) {
      GraspPose g;
      const auto q = d.quat.value().row(i);
      g.rotation = {q(0), q(1), q(2), q(3)};
      g.position = d.position.value().row(i).transpose();
      out.push_back(g);
    }
  }
  return out;
}

}  // namespace vcgs
