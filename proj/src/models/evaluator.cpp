#include "vcgs/models/evaluator.h"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "vcgs/common/error.h"
#include "vcgs/common/log.h"
#include "vcgs/common/rng.h"
#include "vcgs/models/inputs.h"
#include "vcgs/oracle/oracle.h"

namespace vcgs {

namespace {

const char* const kTrunk = "evaluator.trunk";
const char* const kHead = "evaluator.head";
const char* const kOut = "evaluator.out";

std::size_t count_layers(const nn::ParamStore& params, const std::string& prefix) {
  std::size_t n = 0;
  while (params.contains(fmt::format("{}.{}.w", prefix, n))) ++n;
  return n;
}

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    const Vec3 v(normal(rng), normal(rng), normal(rng));
    const double n = v.norm();
    if (n > 1e-9) return v / n;
  }
}

/// Rotates about the center grasp point, then translates.
GraspPose perturb(const GraspPose& g, const NegativeConfig& neg, const GripperModel& gm,
                  Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double angle = unit(rng) * neg.max_rotation_deg * std::numbers::pi / 180.0;
  const Quaternion dq = Quaternion::from_axis_angle(random_unit(rng), angle);
  const Vec3 center = center_grasp_point(g, gm);
  const Vec3 shift = random_unit(rng) * (unit(rng) * neg.max_translation);
  GraspPose out;
  out.rotation = (dq * g.rotation).normalized();
  // Keep the center grasp point fixed under the rotation.
  out.position = center - out.rotation.to_matrix() * gm.center_local() + shift;
  return out;
}

/// Re-expresses every row in the gripper frame given by the last six rows.
nn::Matrix to_gripper_frame(const nn::Matrix& input, Eigen::Index rows, const GripperModel& gm) {
  const Eigen::Index n = rows - 6;
  const auto cp = input.block(n, 0, 6, 3);
  Vec3 x = (cp.row(0) - cp.row(1)).transpose();
  Vec3 z = (cp.row(0) - cp.row(2)).transpose();
  if (x.norm() <= 0.0 || z.norm() <= 0.0) {
    throw ShapeError("evaluator input: degenerate gripper rows");
  }
  x.normalize();
  z = (z - x * x.dot(z)).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  const Vec3 origin = cp.row(4).transpose() - r * gm.control_points.row(4).transpose();
  nn::Matrix out = input;
  out.leftCols(3) = ((input.leftCols(3).rowwise() - origin.transpose()) * r) * kInputScale;
  return out;
}

}  // namespace

void EvaluatorConfig::validate() const {
  if (trunk_widths.empty()) throw ConfigError("evaluator: trunk_widths must be non-empty");
  for (int w : trunk_widths) {
    if (w < 1) throw ConfigError("evaluator: widths must be positive");
  }
  for (int w : head_widths) {
    if (w < 1) throw ConfigError("evaluator: widths must be positive");
  }
  if (!(lr > 0.0)) throw ConfigError("evaluator: lr must be > 0");
  if (epochs < 1 || batch_size < 2) {
    throw ConfigError("evaluator: epochs must be >= 1 and batch_size >= 2");
  }
}

void NegativeConfig::validate() const {
  if (!(max_rotation_deg >= 0.0) || !(max_translation >= 0.0)) {
    throw ConfigError("negatives: perturbation bounds must be >= 0");
  }
  if (!(perturbed_fraction >= 0.0 && perturbed_fraction <= 1.0)) {
    throw ConfigError("negatives: perturbed_fraction must lie in [0, 1]");
  }
  if (!(mu > 0.0)) throw ConfigError("negatives: mu must be > 0");
}

std::vector<EvalExample> build_eval_examples(const std::vector<DatasetRecord>& records,
                                             const std::vector<CorpusObject>& corpus,
                                             const NegativeConfig& neg, const GripperModel& gm,
                                             std::size_t max_positives_per_record) {
  neg.validate();
  std::map<std::string, const TriMesh*> meshes;
  for (const auto& obj : corpus) meshes[obj.entry.object_id] = &obj.mesh;

  // Oracle-unstable candidates per object, in the object frame.
  std::map<std::string, std::vector<GraspPose>> unstable;
  auto candidates = [&](const std::string& id) -> const std::vector<GraspPose>& {
    auto it = unstable.find(id);
    if (it != unstable.end()) return it->second;
    std::vector<GraspPose> pool;
    for (const auto& g : sample_labeled_grasps(*meshes.at(id), gm, neg.mu,
                                               neg.candidates_per_object,
                                               derive_seed(derive_seed(neg.seed, "negatives"), id))) {
      if (!g.label.stable) pool.push_back(g.pose);
    }
    return unstable.emplace(id, std::move(pool)).first->second;
  };

  std::vector<EvalExample> out;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const DatasetRecord& rec = records[r];
    Rng rng(derive_seed(derive_seed(neg.seed, rec.object_id), rec.seed ^ rec.query_index));
    std::vector<std::size_t> order(rec.grasps.size());
    std::iota(order.begin(), order.end(), 0);
    if (max_positives_per_record > 0 && order.size() > max_positives_per_record) {
      std::shuffle(order.begin(), order.end(), rng);
      order.resize(max_positives_per_record);
      std::sort(order.begin(), order.end());
    }
    for (std::size_t k : order) out.push_back({r, rec.grasps[k], true});

    auto mesh_it = meshes.find(rec.object_id);
    if (mesh_it == meshes.end() || rec.grasps.empty()) continue;
    const TriMesh& mesh = *mesh_it->second;
    const std::vector<GraspPose>& pool = candidates(rec.object_id);
    const GraspPose to_camera = rec.camera_pose.inverse();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < neg.negatives_per_record; ++i) {
      bool made = false;
      if (unit(rng) < neg.perturbed_fraction) {
        for (std::size_t attempt = 0; attempt < neg.max_attempts && !made; ++attempt) {
          const std::size_t k =
              std::uniform_int_distribution<std::size_t>(0, rec.grasps.size() - 1)(rng);
          const GraspPose g = perturb(rec.grasps[k], neg, gm, rng);
          if (!label_grasp(mesh, object_frame_grasp(rec, g), gm, neg.mu).stable) {
            out.push_back({r, g, false});
            made = true;
          }
        }
      }
      if (!made && !pool.empty()) {
        const std::size_t k = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
        out.push_back({r, to_camera * pool[k], false});
      }
    }
  }
  return out;
}

EvaluatorModel EvaluatorModel::create(const EvaluatorConfig& cfg) {
  cfg.validate();
  EvaluatorModel m;
  m.trunk_layers = cfg.trunk_widths.size();
  m.head_layers = cfg.head_widths.size();
  Rng rng(derive_seed(cfg.seed, "evaluator-init"));
  const int global = cfg.trunk_widths.back();
  nn::init_mlp(m.params, kTrunk, kEvaluatorFeatures, cfg.trunk_widths, rng);
  nn::init_mlp(m.params, kHead, global, cfg.head_widths, rng);
  nn::init_mlp(m.params, kOut, cfg.head_widths.empty() ? global : cfg.head_widths.back(), {1},
               rng);
  return m;
}

EvaluatorModel EvaluatorModel::from_params(nn::ParamStore params) {
  EvaluatorModel m;
  m.trunk_layers = count_layers(params, kTrunk);
  m.head_layers = count_layers(params, kHead);
  if (m.trunk_layers == 0 || count_layers(params, kOut) != 1 ||
      params.at(std::string(kTrunk) + ".0.w").value.rows() != kEvaluatorFeatures ||
      params.at(std::string(kOut) + ".0.w").value.cols() != 1) {
    throw ConfigError("checkpoint does not hold an evaluator model");
  }
  m.params = std::move(params);
  return m;
}

nn::Var evaluator_logits(nn::Tape& tape, EvaluatorModel& model, const nn::Matrix& stacked,
                         Eigen::Index set_size, const GripperModel& gm) {
  if (set_size < 7 || stacked.rows() % set_size != 0 || stacked.cols() != kEvaluatorFeatures) {
    throw ShapeError(fmt::format("evaluator batch {}x{} does not hold sets of {} rows",
                                 stacked.rows(), stacked.cols(), set_size));
  }
  nn::Matrix local(stacked.rows(), stacked.cols());
  for (Eigen::Index b = 0; b < stacked.rows() / set_size; ++b) {
    local.middleRows(b * set_size, set_size) =
        to_gripper_frame(stacked.middleRows(b * set_size, set_size), set_size, gm);
  }
  nn::Var global =
      nn::set_encoder(tape, model.params, kTrunk, tape.constant(std::move(local)), set_size,
                      model.trunk_layers);
  global = nn::mlp(tape, model.params, kHead, global, model.head_layers, true);
  return nn::mlp(tape, model.params, kOut, global, 1, false);
}

std::vector<double> evaluate_grasps(EvaluatorModel& model, const PointCloud& cloud,
                                    const std::vector<GraspPose>& grasps, const GripperModel& gm) {
  std::vector<double> out;
  out.reserve(grasps.size());
  const Eigen::Index rows = static_cast<Eigen::Index>(cloud.size()) + 6;
  constexpr std::size_t kChunk = 32;
  for (std::size_t start = 0; start < grasps.size(); start += kChunk) {
    const std::size_t end = std::min(grasps.size(), start + kChunk);
    nn::Matrix stacked(static_cast<Eigen::Index>(end - start) * rows, kEvaluatorFeatures);
    for (std::size_t i = start; i < end; ++i) {
      stacked.middleRows(static_cast<Eigen::Index>(i - start) * rows, rows) =
          evaluator_input(cloud, grasps[i], gm);
    }
    nn::Tape tape;
    const nn::Var p = nn::sigmoid(evaluator_logits(tape, model, stacked, rows, gm));
    for (Eigen::Index i = 0; i < p.rows(); ++i) out.push_back(p.value()(i, 0));
  }
  return out;
}

double evaluate_grasp(EvaluatorModel& model, const PointCloud& cloud, const GraspPose& g,
                      const GripperModel& gm) {
  const nn::Matrix input = evaluator_input(cloud, g, gm);
  check_evaluator_input(input);
  nn::Tape tape;
  return nn::sigmoid(evaluator_logits(tape, model, input, input.rows(), gm)).scalar();
}

nn::Var bce_loss(nn::Var labels, nn::Var probabilities) {
  if (labels.rows() != probabilities.rows() || labels.cols() != probabilities.cols()) {
    throw ShapeError("bce_loss: labels and probabilities differ in shape");
  }
  const nn::Var p = nn::clamp(probabilities, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const nn::Var not_p = nn::add_scalar(nn::scale(p, -1.0), 1.0);
  const nn::Var not_y = nn::add_scalar(nn::scale(labels, -1.0), 1.0);
  const nn::Var ll = nn::add(nn::mul(labels, nn::log(p)), nn::mul(not_y, nn::log(not_p)));
  return nn::scale(nn::mean(ll), -1.0);
}

double bce_loss(double label, double probability) {
  const double p = std::clamp(probability, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
}

EvaluatorTraining train_evaluator(const std::vector<DatasetRecord>& records,
                                  const std::vector<EvalExample>& examples,
                                  const EvaluatorConfig& cfg, const GripperModel& gm,
                                  const std::filesystem::path& rescue_path) {
  cfg.validate();
  std::vector<const EvalExample*> pos, neg;
  for (const auto& ex : examples) {
    if (ex.record >= records.size()) throw ConfigError("evaluator example refers to no record");
    (ex.stable ? pos : neg).push_back(&ex);
  }
  if (pos.empty() || neg.empty()) {
    throw ConfigError("train_evaluator: needs both positive and negative examples");
  }
  const std::size_t n_points = records[pos.front()->record].cloud.size();
  for (const auto& ex : examples) {
    if (records[ex.record].cloud.size() != n_points) {
      throw ConfigError("train_evaluator: every record must have the same number of points");
    }
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(n_points) + 6;
  const std::size_t per_epoch = cfg.examples_per_epoch > 0 ? cfg.examples_per_epoch : 2 * pos.size();
  const std::size_t half = cfg.batch_size / 2;

  EvaluatorTraining out{EvaluatorModel::create(cfg), {}};
  nn::ParamStore last_good = out.model.params;
  Rng rng(derive_seed(cfg.seed, "evaluator-train"));
  std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_neg(0, neg.size() - 1);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0.0;
    std::size_t seen = 0;
    try {
      while (seen < per_epoch) {
        std::vector<const EvalExample*> batch;
        for (std::size_t i = 0; i < half; ++i) batch.push_back(pos[pick_pos(rng)]);
        for (std::size_t i = 0; i < half; ++i) batch.push_back(neg[pick_neg(rng)]);
        const auto b = static_cast<Eigen::Index>(batch.size());
        nn::Matrix stacked(b * rows, kEvaluatorFeatures);
        nn::Matrix labels(b, 1);
        for (Eigen::Index i = 0; i < b; ++i) {
          const EvalExample& ex = *batch[static_cast<std::size_t>(i)];
          stacked.middleRows(i * rows, rows) =
              evaluator_input(records[ex.record].cloud, ex.grasp, gm);
          labels(i, 0) = ex.stable ? 1.0 : 0.0;
        }
        nn::Tape tape;
        const nn::Var logits = evaluator_logits(tape, out.model, stacked, rows, gm);
        const nn::Var loss = bce_loss(tape.constant(labels), nn::sigmoid(logits));
        tape.backward(loss);
        nn::adam_step(out.model.params, {cfg.lr});
        total += loss.scalar() * static_cast<double>(b);
        seen += batch.size();
      }
    } catch (const TrainingDiverged& e) {
      if (!rescue_path.empty()) nn::write_checkpoint_file(rescue_path, last_good);
      throw TrainingDiverged(fmt::format("evaluator training diverged in epoch {}: {}", epoch,
                                         e.what()));
    }
    const double mean_loss = total / static_cast<double>(seen);
    out.epoch_loss.push_back(mean_loss);
    last_good = out.model.params;
    log::info("evaluator epoch {}/{}: bce {:.5f}", epoch + 1, cfg.epochs, mean_loss);
  }
  return out;
}

double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("roc_auc: scores and labels differ in size");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ConfigError("roc_auc: needs both classes");
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

}  // namespace vcgs
