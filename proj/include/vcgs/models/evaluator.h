#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vcgs/dataset/dataset.h"
#include "vcgs/geometry/geometry.h"
#include "vcgs/nn/layers.h"
#include "vcgs/scene/corpus.h"

namespace vcgs {

struct EvaluatorConfig {
  std::vector<int> trunk_widths = {64, 128, 256};
  std::vector<int> head_widths = {256, 128, 64};
  double lr = 1e-3;
  std::size_t epochs = 30;
  /// Half positives, half negatives.
  std::size_t batch_size = 16;
  /// Examples per epoch; 0 means twice the number of positives.
  std::size_t examples_per_epoch = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// How negatives are generated for evaluator training.
struct NegativeConfig {
  double max_rotation_deg = 60.0;
  double max_translation = 0.03;
  /// Share of negatives made by perturbing positives; the rest are
  /// oracle-unstable candidates.
  double perturbed_fraction = 0.5;
  std::size_t negatives_per_record = 8;
  std::size_t candidates_per_object = 500;
  /// Perturbation attempts per negative before falling back to a candidate.
  std::size_t max_attempts = 20;
  double mu = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One labeled grasp on a record's cloud (camera frame).
struct EvalExample {
  std::size_t record = 0;
  GraspPose grasp;
  bool stable = false;
};

/// Positives are the records' stored grasps (at most `max_positives_per_record`
/// each, 0 = all); negatives follow `neg`. Records whose object is missing
/// from the corpus contribute positives only.
std::vector<EvalExample> build_eval_examples(const std::vector<DatasetRecord>& records,
                                             const std::vector<CorpusObject>& corpus,
                                             const NegativeConfig& neg, const GripperModel& gm,
                                             std::size_t max_positives_per_record = 0);

struct EvaluatorModel {
  nn::ParamStore params;
  std::size_t trunk_layers = 0;
  std::size_t head_layers = 0;

  static EvaluatorModel create(const EvaluatorConfig& cfg);
  static EvaluatorModel from_params(nn::ParamStore params);
};

/// Logits (B x 1) for B stacked evaluator inputs of `set_size` rows each.
/// Every input is expressed in the frame of its own gripper, recovered from
/// the six flag-1 rows, before the shared point network.
nn::Var evaluator_logits(nn::Tape& tape, EvaluatorModel& model, const nn::Matrix& stacked,
                         Eigen::Index set_size, const GripperModel& gm);

/// Success probability in (0, 1).
double evaluate_grasp(EvaluatorModel& model, const PointCloud& cloud, const GraspPose& g,
                      const GripperModel& gm);
std::vector<double> evaluate_grasps(EvaluatorModel& model, const PointCloud& cloud,
                                    const std::vector<GraspPose>& grasps, const GripperModel& gm);

inline constexpr double kProbabilityClamp = 1e-7;

/// Mean binary cross-entropy of probabilities against 0/1 labels, with the
/// probabilities clamped to [1e-7, 1 - 1e-7].
nn::Var bce_loss(nn::Var labels, nn::Var probabilities);
double bce_loss(double label, double probability);

struct EvaluatorTraining {
  EvaluatorModel model;
  std::vector<double> epoch_loss;
};

/// Balanced-batch BCE training. Throws ConfigError when either class is
/// absent.
EvaluatorTraining train_evaluator(const std::vector<DatasetRecord>& records,
                                  const std::vector<EvalExample>& examples,
                                  const EvaluatorConfig& cfg, const GripperModel& gm,
                                  const std::filesystem::path& rescue_path = {});

/// Area under the ROC curve (ties count one half). Throws ConfigError when
/// either class is absent.
double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels);

}  // namespace vcgs
