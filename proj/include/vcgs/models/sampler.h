#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vcgs/dataset/dataset.h"
#include "vcgs/geometry/geometry.h"
#include "vcgs/nn/layers.h"

namespace vcgs {

struct SamplerConfig {
  int latent_dim = 2;
  /// Weight of the KL term.
  double alpha = 0.01;
  /// Ramp alpha linearly from 0 over the first 10% of epochs.
  bool alpha_warmup = false;
  std::vector<int> trunk_widths = {64, 128, 256};
  std::vector<int> head_widths = {256, 128, 64};
  double lr = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  /// Examples drawn per epoch (uniform record, then uniform grasp); 0 means
  /// every (record, grasp) pair once.
  std::size_t examples_per_epoch = 0;
  /// Train with every mask set to the whole cloud (the unconstrained
  /// baseline).
  bool unconstrained = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Encoder and decoder parameters. Layer counts and the latent size are
/// recovered from parameter names and shapes, so a checkpoint is
/// self-describing.
struct SamplerModel {
  nn::ParamStore params;
  int latent_dim = 2;
  std::size_t trunk_layers = 0;
  std::size_t head_layers = 0;

  static SamplerModel create(const SamplerConfig& cfg,
                             const GripperModel& gm = GripperModel::canonical());
  static SamplerModel from_params(nn::ParamStore params);
};

/// Batched forward passes over B stacked inputs of N rows each.
struct EncoderOutput {
  nn::Var mu;       // B x L
  nn::Var log_var;  // B x L
};
EncoderOutput encode_batch(nn::Tape& tape, SamplerModel& model, const nn::Matrix& stacked,
                           Eigen::Index set_size);

struct DecoderOutput {
  nn::Var quat;      // B x 4, unit rows
  nn::Var position;  // B x 3
};
DecoderOutput decode_batch(nn::Tape& tape, SamplerModel& model, const nn::Matrix& stacked,
                           Eigen::Index set_size);

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(SamplerModel& model, const nn::Matrix& input);
/// Logs a warning and returns the identity rotation for a zero raw
/// quaternion.
GraspPose decode(SamplerModel& model, const nn::Matrix& input);

/// Mean over the batch of the L1 distance between control-point images.
/// `target` is B x 18 (rows of grasp_points).
nn::Var reconstruction_loss(const DecoderOutput& decoded, const nn::Matrix& target,
                            const GripperModel& gm);
double reconstruction_loss(const GraspPose& target, const GraspPose& predicted,
                           const GripperModel& gm);

/// recon + alpha * KL(mu, log_var) / B, with B the number of rows of mu.
nn::Var elbo_loss(nn::Var recon, nn::Var mu, nn::Var log_var, double alpha);

struct ElboTerms {
  nn::Var loss;
  nn::Var recon;
  /// Summed over the batch.
  nn::Var kl;
};

/// Full training objective for B stacked encoder inputs: encode, draw
/// z = mu + sigma * noise (noise B x L), decode with z tiled over the set,
/// and combine the reconstruction and KL terms with elbo_loss.
ElboTerms sampler_elbo(nn::Tape& tape, SamplerModel& model, const nn::Matrix& encoder_stacked,
                       Eigen::Index set_size, const nn::Matrix& target, const nn::Matrix& noise,
                       double alpha, const GripperModel& gm);

/// grasp_to_points(g) flattened row-major to 1 x 18.
Eigen::RowVectorXd flat_control_points(const GraspPose& g, const GripperModel& gm);

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

struct SamplerTraining {
  SamplerModel model;
  std::vector<EpochStats> log;
};

/// Trains encoder and decoder jointly with Adam on the ELBO. On divergence,
/// writes the last completed epoch's parameters to `rescue_path` (when set)
/// and rethrows TrainingDiverged.
SamplerTraining train_sampler(const std::vector<DatasetRecord>& records,
                              const SamplerConfig& cfg, const GripperModel& gm,
                              const std::filesystem::path& rescue_path = {});

/// n poses from independent latent draws z ~ N(0, I); a fixed seed gives a
/// fixed list.
std::vector<GraspPose> sample_grasps(SamplerModel& model, const PointCloud& cloud,
                                     const TargetMask& mask, std::size_t n, std::uint64_t seed);

}  // namespace vcgs
