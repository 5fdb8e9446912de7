#include "vcgs/bench/benchmark.h"

#include <fmt/core.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <numeric>
#include <random>
#include <thread>

#include "vcgs/common/error.h"
#include "vcgs/common/log.h"
#include "vcgs/common/rng.h"
#include "vcgs/oracle/oracle.h"
#include "vcgs/scene/sampling.h"

namespace vcgs {

std::string to_string(BenchMode mode) {
  return mode == BenchMode::kConstrained ? "constrained" : "unconstrained";
}

BenchMode bench_mode_from_string(const std::string& name) {
  if (name == "constrained") return BenchMode::kConstrained;
  if (name == "unconstrained") return BenchMode::kUnconstrained;
  throw ConfigError("unknown bench mode '" + name + "' (expected constrained or unconstrained)");
}

void BenchConfig::validate() const {
  if (n_sampled < 1 || top_k < 1 || areas_per_object < 1 || renders_per_object < 1 ||
      n_points < 1) {
    throw ConfigError("bench: counts must be >= 1");
  }
  if (top_k > n_sampled) throw ConfigError("bench: top_k must not exceed n_sampled");
  if (areas_per_object > n_points) throw ConfigError("bench: more areas than points");
  if (!(d > 0.0)) throw ConfigError("bench: d must be > 0");
  if (!(mu > 0.0)) throw ConfigError("bench: mu must be > 0");
  if (draws_k < 1 || draws_batch < 1 || draws_max < 1) {
    throw ConfigError("bench: draws settings must be >= 1");
  }
}

std::vector<TargetMask> sample_eval_areas(const PointCloud& cloud, const TriMesh& mesh,
                                          std::size_t n_areas, std::uint64_t seed) {
  if (cloud.size() == 0) throw EmptyCloud("sample_eval_areas: empty cloud");
  const double diag = bbox_diagonal(mesh);
  const auto queries = fps(cloud.points, n_areas, fps_seed_index(cloud.points));
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TargetMask> out;
  out.reserve(queries.size());
  for (const std::size_t q : queries) out.push_back(build_area(cloud, q, unit(rng) * diag));
  return out;
}

FilterResult filter_on_target(const std::vector<GraspPose>& grasps, const PointCloud& cloud,
                              const TargetMask& mask, const GripperModel& gm) {
  FilterResult out;
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    if (is_on_target(grasps[i], cloud, mask, gm)) {
      out.kept.push_back(grasps[i]);
      out.kept_index.push_back(i);
    }
  }
  if (!grasps.empty()) {
    out.ratio = 100.0 * static_cast<double>(out.kept.size()) / static_cast<double>(grasps.size());
  }
  return out;
}

DrawsResult draws_to_k_on_target(const GraspSource& sampler, const PointCloud& cloud,
                                 const TargetMask& mask, const GripperModel& gm, std::size_t k,
                                 std::size_t batch, std::size_t max_draws, std::uint64_t seed) {
  if (batch < 1) throw ConfigError("draws_to_k_on_target: batch must be >= 1");
  DrawsResult out;
  for (std::size_t i = 0; out.on_target < k && out.draws < max_draws; ++i) {
    const std::size_t n = std::min(batch, max_draws - out.draws);
    const auto grasps = sampler(cloud, mask, n, derive_seed(seed, i));
    out.draws += n;
    for (const auto& g : grasps) out.on_target += is_on_target(g, cloud, mask, gm);
  }
  out.saturated = out.on_target < k;
  return out;
}

TrialOutcome run_trial(const GraspSource& sampler, const GraspScorer& scorer,
                       const BenchScene& scene, const TargetMask& mask, const BenchConfig& cfg,
                       const GripperModel& gripper, std::uint64_t seed) {
  GripperModel gm = gripper;
  gm.assoc_distance_d = cfg.d;
  const bool constrained = cfg.mode == BenchMode::kConstrained;
  const TargetMask whole = TargetMask::all(scene.cloud.size());
  const TargetMask& sample_mask = constrained ? mask : whole;
  const TargetMask& filter_mask = constrained || cfg.filter_unconstrained ? mask : whole;

  TrialOutcome out;
  out.object_id = scene.object_id;
  out.render_index = scene.render_index;
  out.area_size = filter_mask.count();

  const auto t0 = std::chrono::steady_clock::now();
  const auto sampled = sampler(scene.cloud, sample_mask, cfg.n_sampled, derive_seed(seed, "sample"));
  const FilterResult filtered = filter_on_target(sampled, scene.cloud, filter_mask, gm);
  std::vector<double> scores;
  if (cfg.use_scorer && !filtered.kept.empty()) scores = scorer(scene.cloud, filtered.kept);
  const auto t1 = std::chrono::steady_clock::now();

  out.sampled = sampled.size();
  out.kept = filtered.kept.size();
  out.ratio_kept = filtered.ratio;
  if (cfg.timing) out.inference_seconds = std::chrono::duration<double>(t1 - t0).count();

  std::vector<std::size_t> order(filtered.kept.size());
  std::iota(order.begin(), order.end(), 0);
  if (cfg.use_scorer) {
    if (scores.size() != filtered.kept.size()) {
      throw InvariantError("scorer returned a wrong number of scores");
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  } else {
    Rng rng(derive_seed(seed, "random-pick"));
    std::shuffle(order.begin(), order.end(), rng);
  }
  order.resize(std::min(order.size(), cfg.top_k));
  for (const std::size_t i : order) {
    const GraspPose object_frame = scene.camera_pose * filtered.kept[i];
    out.successes += label_grasp(*scene.mesh, object_frame, gm, cfg.mu).stable;
  }
  out.executed = order.size();
  // Draws are sampled with the sampling mask and counted against the filter
  // mask; the two differ for the filtered unconstrained baseline.
  const GraspSource with_sample_mask = [&](const PointCloud& c, const TargetMask&,
                                           std::size_t n, std::uint64_t s) {
    return sampler(c, sample_mask, n, s);
  };
  out.draws = draws_to_k_on_target(with_sample_mask, scene.cloud, filter_mask, gm, cfg.draws_k,
                                   cfg.draws_batch, cfg.draws_max, derive_seed(seed, "draws"));
  return out;
}

namespace {

std::vector<TrialOutcome> run_object(const GraspSource& sampler, const GraspScorer& scorer,
                                     const CorpusObject& obj, const BenchConfig& cfg,
                                     const GripperModel& gm) {
  std::vector<TrialOutcome> out;
  const std::uint64_t object_seed =
      derive_seed(derive_seed(cfg.seed, "bench"), obj.entry.object_id);
  for (std::size_t r = 0; r < cfg.renders_per_object; ++r) {
    const std::uint64_t render_seed = derive_seed(object_seed, r);
    Rng rng(render_seed);
    const CameraModel cam = sample_rounded_camera(rng, cfg.camera);
    BenchScene scene;
    scene.object_id = obj.entry.object_id;
    scene.mesh = &obj.mesh;
    scene.render_index = static_cast<std::uint32_t>(r);
    scene.camera_pose = cam.pose;
    try {
      scene.cloud =
          render_view(obj.mesh, cam, cfg.n_points, derive_seed(render_seed, "downsample")).cloud;
    } catch (const EmptyCloud&) {
      log::warn("bench: '{}' render {} shows nothing; skipped", obj.entry.object_id, r);
      continue;
    }
    const auto areas = sample_eval_areas(scene.cloud, obj.mesh, cfg.areas_per_object,
                                         derive_seed(render_seed, "areas"));
    for (std::size_t a = 0; a < areas.size(); ++a) {
      TrialOutcome t =
          run_trial(sampler, scorer, scene, areas[a], cfg, gm, derive_seed(render_seed, a));
      t.area_index = a;
      out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace

BenchAggregate aggregate_trials(const std::vector<TrialOutcome>& trials, bool timing) {
  BenchAggregate agg;
  agg.trials = trials.size();
  if (trials.empty()) return agg;
  std::size_t executed = 0, successes = 0, saturated = 0;
  double ratio = 0.0, draws = 0.0, seconds = 0.0;
  for (const auto& t : trials) {
    executed += t.executed;
    successes += t.successes;
    ratio += t.ratio_kept;
    draws += static_cast<double>(t.draws.draws);
    saturated += t.draws.saturated;
    seconds += t.inference_seconds;
  }
  const double n = static_cast<double>(trials.size());
  agg.success_rate =
      executed > 0 ? 100.0 * static_cast<double>(successes) / static_cast<double>(executed) : 0.0;
  agg.ratio_kept = ratio / n;
  agg.mean_draws = draws / n;
  agg.saturated_fraction = static_cast<double>(saturated) / n;
  agg.inference_seconds = timing ? seconds / n : 0.0;
  return agg;
}

BenchReport run_benchmark(const GraspSource& sampler, const GraspScorer& scorer,
                          const std::vector<CorpusObject>& test_objects, const BenchConfig& cfg,
                          const GripperModel& gm, std::size_t workers) {
  cfg.validate();
  if (test_objects.empty()) throw ConfigError("bench: empty test set");
  std::vector<std::vector<TrialOutcome>> parts(test_objects.size());
  // Timing runs stay on one worker so wall-clock numbers are meaningful.
  workers = cfg.timing ? 1 : std::max<std::size_t>(1, std::min(workers, test_objects.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < test_objects.size(); ++i) {
      log::info("bench {} ({}/{})", test_objects[i].entry.object_id, i + 1, test_objects.size());
      parts[i] = run_object(sampler, scorer, test_objects[i], cfg, gm);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < test_objects.size(); i = next++) {
            parts[i] = run_object(sampler, scorer, test_objects[i], cfg, gm);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  BenchReport report;
  report.config = cfg;
  for (auto& p : parts) {
    for (auto& t : p) report.trials.push_back(std::move(t));
  }
  report.aggregate = aggregate_trials(report.trials, cfg.timing);
  return report;
}

namespace {

nlohmann::json config_to_json(const BenchConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"n_sampled", c.n_sampled},
          {"top_k", c.top_k},
          {"areas_per_object", c.areas_per_object},
          {"renders_per_object", c.renders_per_object},
          {"n_points", c.n_points},
          {"d", c.d},
          {"mu", c.mu},
          {"filter_unconstrained", c.filter_unconstrained},
          {"use_scorer", c.use_scorer},
          {"draws_k", c.draws_k},
          {"draws_batch", c.draws_batch},
          {"draws_max", c.draws_max},
          {"timing", c.timing},
          {"seed", c.seed}};
}

}  // namespace

nlohmann::json report_to_json(const BenchReport& report) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : report.trials) {
    nlohmann::json j = {{"object_id", t.object_id},
                        {"render_index", t.render_index},
                        {"area_index", t.area_index},
                        {"area_size", t.area_size},
                        {"sampled", t.sampled},
                        {"kept", t.kept},
                        {"executed", t.executed},
                        {"successes", t.successes},
                        {"ratio_kept", t.ratio_kept},
                        {"draws", t.draws.draws},
                        {"draws_on_target", t.draws.on_target},
                        {"draws_saturated", t.draws.saturated}};
    if (report.config.timing) j["inference_seconds"] = t.inference_seconds;
    trials.push_back(std::move(j));
  }
  const BenchAggregate& a = report.aggregate;
  nlohmann::json agg = {{"trials", a.trials},
                        {"success_rate", a.success_rate},
                        {"ratio_kept", a.ratio_kept},
                        {"mean_draws", a.mean_draws},
                        {"saturated_fraction", a.saturated_fraction}};
  if (report.config.timing) agg["inference_seconds"] = a.inference_seconds;
  return {{"config", config_to_json(report.config)}, {"per_trial", trials}, {"aggregate", agg}};
}

BenchReport report_from_json(const nlohmann::json& j) {
  try {
    BenchReport r;
    const auto& c = j.at("config");
    r.config.mode = bench_mode_from_string(c.at("mode").get<std::string>());
    r.config.n_sampled = c.at("n_sampled").get<std::size_t>();
    r.config.top_k = c.at("top_k").get<std::size_t>();
    r.config.areas_per_object = c.at("areas_per_object").get<std::size_t>();
    r.config.renders_per_object = c.at("renders_per_object").get<std::size_t>();
    r.config.n_points = c.at("n_points").get<std::size_t>();
    r.config.d = c.at("d").get<double>();
    r.config.mu = c.at("mu").get<double>();
    r.config.filter_unconstrained = c.at("filter_unconstrained").get<bool>();
    r.config.use_scorer = c.at("use_scorer").get<bool>();
    r.config.draws_k = c.at("draws_k").get<std::size_t>();
    r.config.draws_batch = c.at("draws_batch").get<std::size_t>();
    r.config.draws_max = c.at("draws_max").get<std::size_t>();
    r.config.timing = c.at("timing").get<bool>();
    r.config.seed = c.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("per_trial")) {
      TrialOutcome o;
      o.object_id = t.at("object_id").get<std::string>();
      o.render_index = t.at("render_index").get<std::uint32_t>();
      o.area_index = t.at("area_index").get<std::size_t>();
      o.area_size = t.at("area_size").get<std::size_t>();
      o.sampled = t.at("sampled").get<std::size_t>();
      o.kept = t.at("kept").get<std::size_t>();
      o.executed = t.at("executed").get<std::size_t>();
      o.successes = t.at("successes").get<std::size_t>();
      o.ratio_kept = t.at("ratio_kept").get<double>();
      o.draws.draws = t.at("draws").get<std::size_t>();
      o.draws.on_target = t.at("draws_on_target").get<std::size_t>();
      o.draws.saturated = t.at("draws_saturated").get<bool>();
      o.inference_seconds = t.value("inference_seconds", 0.0);
      r.trials.push_back(std::move(o));
    }
    r.aggregate = aggregate_trials(r.trials, r.config.timing);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bench report: ") + e.what(), 0);
  }
}

std::string report_table(const BenchReport& report) {
  const BenchAggregate& a = report.aggregate;
  std::string out;
  out += fmt::format("{:<32}{:>16}\n", "", to_string(report.config.mode));
  out += fmt::format("{:<32}{:>16.1f}\n", "Grasp success rate (%)", a.success_rate);
  out += fmt::format("{:<32}{:>16.1f}\n", "Ratio of grasps kept (%)", a.ratio_kept);
  out += fmt::format("{:<32}{:>16.2f}\n",
                     fmt::format("Mean draws to {} on-target", report.config.draws_k),
                     a.mean_draws);
  if (report.config.timing) {
    out += fmt::format("{:<32}{:>16.4f}\n", "Inference time (s)", a.inference_seconds);
  }
  out += fmt::format("{:<32}{:>16}\n", "Trials", a.trials);
  return out;
}

}  // namespace vcgs
