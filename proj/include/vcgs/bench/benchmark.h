#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vcgs/dataset/dataset.h"
#include "vcgs/geometry/geometry.h"
#include "vcgs/scene/corpus.h"

namespace vcgs {

enum class BenchMode { kConstrained, kUnconstrained };

std::string to_string(BenchMode mode);
/// Throws ConfigError for names other than "constrained" / "unconstrained".
BenchMode bench_mode_from_string(const std::string& name);

/// Draws `n` grasps for a cloud and target mask with a given seed.
using GraspSource = std::function<std::vector<GraspPose>(
    const PointCloud& cloud, const TargetMask& mask, std::size_t n, std::uint64_t seed)>;
/// Success probability per grasp.
using GraspScorer = std::function<std::vector<double>(const PointCloud& cloud,
                                                      const std::vector<GraspPose>& grasps)>;

struct BenchConfig {
  BenchMode mode = BenchMode::kConstrained;
  std::size_t n_sampled = 100;
  std::size_t top_k = 10;
  std::size_t areas_per_object = 10;
  std::size_t renders_per_object = 1;
  std::size_t n_points = 1024;
  double d = 0.02;
  double mu = 0.5;
  /// In unconstrained mode, filter samples against the trial's area (true)
  /// or treat the whole cloud as the area (false, ratio kept = 100%).
  bool filter_unconstrained = true;
  /// Executed grasps are the top_k by evaluator score (true) or top_k drawn
  /// uniformly from the kept set (false).
  bool use_scorer = true;
  /// draws_to_k_on_target settings.
  std::size_t draws_k = 10;
  std::size_t draws_batch = 10;
  std::size_t draws_max = 50;
  /// Record wall-clock inference time in the report.
  bool timing = false;
  CameraSampling camera;
  std::uint64_t seed = 0;

  void validate() const;
};

/// FPS query points with radius ~ U[0, R], R the mesh's bounding-box
/// diagonal.
std::vector<TargetMask> sample_eval_areas(const PointCloud& cloud, const TriMesh& mesh,
                                          std::size_t n_areas, std::uint64_t seed);

struct FilterResult {
  std::vector<GraspPose> kept;
  /// Indices of kept grasps in the input.
  std::vector<std::size_t> kept_index;
  /// Percentage in [0, 100]; 0 for an empty input.
  double ratio = 0.0;
};

FilterResult filter_on_target(const std::vector<GraspPose>& grasps, const PointCloud& cloud,
                              const TargetMask& mask, const GripperModel& gm);

/// One benchmark scene: a camera-frame cloud of an object.
struct BenchScene {
  std::string object_id;
  const TriMesh* mesh = nullptr;
  std::uint32_t render_index = 0;
  /// Camera -> object transform.
  GraspPose camera_pose;
  PointCloud cloud;
};

struct DrawsResult {
  std::size_t draws = 0;
  std::size_t on_target = 0;
  bool saturated = false;
};

/// Draws batches until at least k on-target grasps have been seen or
/// max_draws is reached. Batch i uses seed derive_seed(seed, i).
DrawsResult draws_to_k_on_target(const GraspSource& sampler, const PointCloud& cloud,
                                 const TargetMask& mask, const GripperModel& gm, std::size_t k,
                                 std::size_t batch, std::size_t max_draws, std::uint64_t seed);

struct TrialOutcome {
  std::string object_id;
  std::uint32_t render_index = 0;
  std::size_t area_index = 0;
  std::size_t area_size = 0;
  std::size_t sampled = 0;
  std::size_t kept = 0;
  std::size_t executed = 0;
  std::size_t successes = 0;
  double ratio_kept = 0.0;
  DrawsResult draws;
  double inference_seconds = 0.0;
};

/// Sample, filter, score, execute the top_k against the oracle (ties to the
/// lowest sample index), then measure draws_to_k_on_target.
TrialOutcome run_trial(const GraspSource& sampler, const GraspScorer& scorer,
                       const BenchScene& scene, const TargetMask& mask, const BenchConfig& cfg,
                       const GripperModel& gm, std::uint64_t seed);

struct BenchAggregate {
  std::size_t trials = 0;
  /// Successes over executed grasps, percent.
  double success_rate = 0.0;
  /// Mean per-trial kept ratio, percent.
  double ratio_kept = 0.0;
  double mean_draws = 0.0;
  double saturated_fraction = 0.0;
  double inference_seconds = 0.0;
};

struct BenchReport {
  BenchConfig config;
  std::vector<TrialOutcome> trials;
  BenchAggregate aggregate;
};

/// Renders each object, draws areas and runs every trial. `workers` > 1 runs
/// objects in parallel; output order is fixed. Throws ConfigError for an
/// empty corpus.
BenchReport run_benchmark(const GraspSource& sampler, const GraspScorer& scorer,
                          const std::vector<CorpusObject>& test_objects, const BenchConfig& cfg,
                          const GripperModel& gm, std::size_t workers = 1);

BenchAggregate aggregate_trials(const std::vector<TrialOutcome>& trials, bool timing);

nlohmann::json report_to_json(const BenchReport& report);
/// Rebuilds a report from its JSON; the aggregate is recomputed from the
/// trials.
BenchReport report_from_json(const nlohmann::json& j);
std::string report_table(const BenchReport& report);

}  // namespace vcgs
