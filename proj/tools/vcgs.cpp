// vcgs: corpus generation, curation, training, sampling and benchmarking.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vcgs/cli/pipeline.h"
#include "vcgs/cli/run_config.h"
#include "vcgs/common/alloc.h"
#include "vcgs/common/error.h"
#include "vcgs/common/log.h"
#include "vcgs/geometry/grasp_io.h"
#include "vcgs/nn/params.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vcgs {
namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, const char* out_help, bool out_required = true) {
  cmd->add_option("--config", c.config, "RunConfig JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Global seed (overrides the config)");
  cmd->add_option("--workers", c.workers, "Worker threads for data-parallel stages");
  auto* out = cmd->add_option("--out", c.out, out_help);
  if (out_required) out->required();
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.seed) cfg.apply_seed(*c.seed);
  if (c.workers) cfg.workers = *c.workers;
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw ConfigError("write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << text;
}

const char* exit_name(ExitCode code) {
  switch (code) {
    case ExitCode::kOk: return "ok";
    case ExitCode::kUsage: return "usage";
    case ExitCode::kConfig: return "config";
    case ExitCode::kDataFormat: return "data-format";
    case ExitCode::kInvariant: return "invariant";
    case ExitCode::kDiverged: return "diverged";
  }
  return "unknown";
}

int report_error(ExitCode code, const std::string& message) {
  const json err = {{"error", exit_name(code)},
                    {"exit_code", static_cast<int>(code)},
                    {"message", message}};
  std::cerr << err.dump() << '\n';
  return static_cast<int>(code);
}

BenchMode parse_mode(const std::string& mode) { return bench_mode_from_string(mode); }

void check_dataset_not_empty(const std::vector<DatasetRecord>& records, const std::string& what) {
  if (records.empty()) throw ConfigError(what + " holds no records");
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Constrained 6-DOF grasp sampling: curation, training and benchmarking"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging on stderr");

  // corpus
  Common corpus_c;
  std::optional<std::size_t> n_objects;
  auto* corpus_cmd = app.add_subcommand("corpus", "Generate a procedural object corpus");
  add_common(corpus_cmd, corpus_c, "Output directory (OFF meshes + manifest.json)");
  corpus_cmd->add_option("--objects", n_objects, "Number of objects");

  // curate
  Common curate_c;
  std::string curate_corpus_dir, curate_test_out, curate_stats;
  std::optional<std::size_t> n_points, n_queries, n_renders;
  std::optional<double> assoc_dist;
  auto* curate_cmd = app.add_subcommand("curate", "Curate a constrained-grasp dataset");
  add_common(curate_cmd, curate_c, "Dataset file (CONG); all objects, or the train split with --test-out");
  curate_cmd->add_option("--corpus", curate_corpus_dir, "Corpus directory or manifest")->required();
  curate_cmd->add_option("--test-out", curate_test_out,
                         "Write held-out objects (test_fraction) to this CONG file");
  curate_cmd->add_option("--stats", curate_stats, "Write dataset statistics JSON");
  curate_cmd->add_option("--n-points", n_points, "Points per downsampled cloud");
  curate_cmd->add_option("--queries", n_queries, "Query points per render");
  curate_cmd->add_option("--renders", n_renders, "Renders per object");
  curate_cmd->add_option("--assoc-dist", assoc_dist, "Association distance d in metres");

  // verify-dataset
  Common verify_c;
  std::string verify_dataset_path, verify_corpus;
  auto* verify_cmd = app.add_subcommand("verify-dataset", "Re-check every dataset invariant");
  add_common(verify_cmd, verify_c, "Write the verification report JSON", false);
  verify_cmd->add_option("--dataset", verify_dataset_path, "CONG file")->required();
  verify_cmd->add_option("--corpus", verify_corpus, "Corpus directory or manifest")->required();

  // train-sampler
  Common ts_c;
  std::string ts_dataset, ts_log, ts_mode;
  std::optional<int> latent;
  std::optional<double> alpha;
  std::optional<std::size_t> ts_epochs;
  auto* ts_cmd = app.add_subcommand("train-sampler", "Train the grasp sampler");
  add_common(ts_cmd, ts_c, "Checkpoint file (VCGM)");
  ts_cmd->add_option("--dataset", ts_dataset, "Training CONG file")->required();
  ts_cmd->add_option("--log", ts_log, "Write per-epoch losses as JSON");
  ts_cmd->add_option("--latent", latent, "Latent dimension");
  ts_cmd->add_option("--alpha", alpha, "KL weight");
  ts_cmd->add_option("--epochs", ts_epochs, "Training epochs");
  ts_cmd->add_option("--mode", ts_mode, "constrained | unconstrained (all-true masks)")
      ->check(CLI::IsMember({"constrained", "unconstrained"}));

  // train-evaluator
  Common te_c;
  std::string te_dataset, te_corpus, te_log, te_holdout;
  std::optional<std::size_t> te_epochs;
  auto* te_cmd = app.add_subcommand("train-evaluator", "Train the grasp evaluator");
  add_common(te_cmd, te_c, "Checkpoint file (VCGM)");
  te_cmd->add_option("--dataset", te_dataset, "Training CONG file")->required();
  te_cmd->add_option("--corpus", te_corpus, "Corpus directory or manifest")->required();
  te_cmd->add_option("--holdout", te_holdout, "CONG file for a held-out AUC");
  te_cmd->add_option("--log", te_log, "Write per-epoch losses (and AUC) as JSON");
  te_cmd->add_option("--epochs", te_epochs, "Training epochs");

  // sample
  Common sample_c;
  std::string sample_sampler, sample_evaluator, sample_dataset, sample_mode = "constrained";
  std::size_t sample_record = 0;
  std::optional<std::size_t> n_samples;
  auto* sample_cmd = app.add_subcommand("sample", "Sample grasps for one dataset record");
  add_common(sample_cmd, sample_c, "Grasp JSON file (camera frame)");
  sample_cmd->add_option("--sampler", sample_sampler, "Sampler checkpoint")->required();
  sample_cmd->add_option("--evaluator", sample_evaluator, "Evaluator checkpoint for scores");
  sample_cmd->add_option("--dataset", sample_dataset, "CONG file")->required();
  sample_cmd->add_option("--record", sample_record, "Record index");
  sample_cmd->add_option("--samples", n_samples, "Number of grasps (default 100)");
  sample_cmd->add_option("--mode", sample_mode, "constrained (record mask) | unconstrained")
      ->check(CLI::IsMember({"constrained", "unconstrained"}));

  // bench
  Common bench_c;
  std::string bench_sampler, bench_evaluator, bench_corpus, bench_objects_from, bench_table,
      bench_mode;
  std::optional<std::size_t> bench_samples, bench_top_k;
  bool timing = false;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark a sampler on held-out objects");
  add_common(bench_cmd, bench_c, "Report JSON file");
  bench_cmd->add_option("--sampler", bench_sampler, "Sampler checkpoint")->required();
  bench_cmd->add_option("--evaluator", bench_evaluator,
                        "Evaluator checkpoint; without it executed grasps are drawn at random");
  bench_cmd->add_option("--corpus", bench_corpus, "Corpus directory or manifest")->required();
  bench_cmd->add_option("--objects-from", bench_objects_from,
                        "Restrict to objects present in this CONG file");
  bench_cmd->add_option("--table", bench_table, "Write the text table to this file");
  bench_cmd->add_option("--samples", bench_samples, "Grasps sampled per trial");
  bench_cmd->add_option("--top-k", bench_top_k, "Grasps executed per trial");
  bench_cmd->add_option("--mode", bench_mode, "constrained | unconstrained")
      ->check(CLI::IsMember({"constrained", "unconstrained"}));
  bench_cmd->add_flag("--timing", timing, "Record inference wall-clock (single worker)");

  // stats
  std::string stats_dataset, stats_out;
  auto* stats_cmd = app.add_subcommand("stats", "Print dataset statistics as JSON");
  stats_cmd->add_option("--dataset", stats_dataset, "CONG file")->required();
  stats_cmd->add_option("--out", stats_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }
  if (verbose) log::set_threshold(log::Level::kDebug);
  const GripperModel gm = GripperModel::canonical();

  if (*corpus_cmd) {
    RunConfig cfg = resolve(corpus_c);
    if (n_objects) cfg.corpus.n_objects = *n_objects;
    cfg.validate();
    const auto objects = generate_corpus(cfg.corpus);
    write_corpus(corpus_c.out, objects);
    log::info("wrote {} objects to {}", objects.size(), corpus_c.out);
    return 0;
  }

  if (*curate_cmd) {
    RunConfig cfg = resolve(curate_c);
    if (n_points) cfg.curation.n_points = *n_points;
    if (n_queries) cfg.curation.n_queries = *n_queries;
    if (n_renders) cfg.curation.renders_per_object = *n_renders;
    if (assoc_dist) cfg.curation.assoc_distance = *assoc_dist;
    cfg.validate();
    const auto corpus = read_corpus(curate_corpus_dir);
    const CurationResult result = curate_corpus(corpus, cfg.curation, gm, cfg.workers);
    for (const auto& id : result.skipped_objects) log::warn("skipped object {}", id);
    log::info("curated {} records ({} areas dropped)", result.records.size(), result.dropped);
    if (curate_test_out.empty()) {
      write_dataset_file(curate_c.out, result.records);
    } else {
      auto [train, test] =
          split(result.records, cfg.test_fraction, derive_seed(cfg.seed, "split"));
      write_dataset_file(curate_c.out, train);
      write_dataset_file(curate_test_out, test);
      log::info("split: {} train / {} test records", train.size(), test.size());
    }
    if (!curate_stats.empty()) {
      json stats = stats_to_json(compute_stats(result.records, result.dropped));
      stats["radius_fractions"] = result.radius_fractions;
      write_json(curate_stats, stats);
    }
    return 0;
  }

  if (*verify_cmd) {
    const RunConfig cfg = resolve(verify_c);
    const auto records = read_dataset_file(verify_dataset_path);
    const auto corpus = read_corpus(verify_corpus);
    GripperModel vgm = gm;
    vgm.assoc_distance_d = cfg.curation.assoc_distance;
    const VerifyReport rep = verify_dataset(records, corpus, vgm, cfg.curation.mu);
    const json j = {{"records", rep.records},
                    {"grasps", rep.grasps},
                    {"off_target", rep.off_target},
                    {"unstable", rep.unstable},
                    {"area_violations", rep.area_violations},
                    {"problems", rep.problems},
                    {"ok", rep.ok()}};
    if (!verify_c.out.empty()) write_json(verify_c.out, j);
    log::info("verified {} records, {} grasps: {} off-target, {} unstable, {} area violations",
              rep.records, rep.grasps, rep.off_target, rep.unstable, rep.area_violations);
    if (!rep.ok()) {
      for (const auto& p : rep.problems) log::warn("{}", p);
      return report_error(ExitCode::kInvariant, "dataset verification failed");
    }
    return 0;
  }

  if (*ts_cmd) {
    RunConfig cfg = resolve(ts_c);
    if (latent) cfg.sampler.latent_dim = *latent;
    if (alpha) cfg.sampler.alpha = *alpha;
    if (ts_epochs) cfg.sampler.epochs = *ts_epochs;
    if (!ts_mode.empty()) cfg.sampler.unconstrained = parse_mode(ts_mode) == BenchMode::kUnconstrained;
    cfg.validate();
    const auto records = read_dataset_file(ts_dataset);
    check_dataset_not_empty(records, ts_dataset);
    const fs::path out = ts_c.out;
    fs::path rescue = out;
    rescue += ".rescue";
    const SamplerTraining t = train_sampler(records, cfg.sampler, gm, rescue);
    nn::write_checkpoint_file(out, t.model.params);
    if (!ts_log.empty()) {
      json epochs = json::array();
      for (const auto& e : t.log) {
        epochs.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"recon", e.recon}, {"kl", e.kl}});
      }
      write_json(ts_log, {{"epochs", epochs}});
    }
    return 0;
  }

  if (*te_cmd) {
    RunConfig cfg = resolve(te_c);
    if (te_epochs) cfg.evaluator.epochs = *te_epochs;
    cfg.validate();
    const auto records = read_dataset_file(te_dataset);
    check_dataset_not_empty(records, te_dataset);
    const auto corpus = read_corpus(te_corpus);
    const auto examples = build_eval_examples(records, corpus, cfg.negatives, gm,
                                              cfg.evaluator_positives_per_record);
    fs::path rescue = te_c.out;
    rescue += ".rescue";
    EvaluatorTraining t = train_evaluator(records, examples, cfg.evaluator, gm, rescue);
    nn::write_checkpoint_file(te_c.out, t.model.params);
    json log_json = {{"epoch_loss", t.epoch_loss}};
    if (!te_holdout.empty()) {
      const auto held = read_dataset_file(te_holdout);
      check_dataset_not_empty(held, te_holdout);
      NegativeConfig neg = cfg.negatives;
      neg.seed = derive_seed(cfg.negatives.seed, "holdout");
      const auto held_examples =
          build_eval_examples(held, corpus, neg, gm, cfg.evaluator_positives_per_record);
      std::vector<double> scores;
      std::vector<bool> labels;
      for (const auto& ex : held_examples) {
        scores.push_back(evaluate_grasp(t.model, held[ex.record].cloud, ex.grasp, gm));
        labels.push_back(ex.stable);
      }
      const double auc = roc_auc(scores, labels);
      log::info("held-out AUC {:.4f} over {} examples", auc, held_examples.size());
      log_json["holdout_auc"] = auc;
    }
    if (!te_log.empty()) write_json(te_log, log_json);
    return 0;
  }

  if (*sample_cmd) {
    const RunConfig cfg = resolve(sample_c);
    const auto records = read_dataset_file(sample_dataset);
    if (sample_record >= records.size()) {
      throw ConfigError(fmt::format("record {} out of range ({} records)", sample_record,
                                    records.size()));
    }
    const DatasetRecord& rec = records[sample_record];
    SamplerModel sampler = SamplerModel::from_params(nn::read_checkpoint_file(sample_sampler));
    TargetMask mask = rec.mask;
    if (parse_mode(sample_mode) == BenchMode::kUnconstrained) {
      mask.member.assign(rec.cloud.size(), 1);
    }
    const auto grasps = sample_grasps(sampler, rec.cloud, mask, n_samples.value_or(100),
                                      derive_seed(cfg.seed, "sample"));
    std::vector<double> scores;
    if (!sample_evaluator.empty()) {
      EvaluatorModel ev = EvaluatorModel::from_params(nn::read_checkpoint_file(sample_evaluator));
      scores = evaluate_grasps(ev, rec.cloud, grasps, gm);
    }
    std::vector<GraspRecord> out;
    for (std::size_t i = 0; i < grasps.size(); ++i) {
      GraspRecord r;
      r.pose = grasps[i];
      if (!scores.empty()) r.score = scores[i];
      out.push_back(r);
    }
    write_json(sample_c.out, grasps_to_json(out));
    return 0;
  }

  if (*bench_cmd) {
    RunConfig cfg = resolve(bench_c);
    if (bench_samples) cfg.bench.n_sampled = *bench_samples;
    if (bench_top_k) cfg.bench.top_k = *bench_top_k;
    if (!bench_mode.empty()) cfg.bench.mode = parse_mode(bench_mode);
    if (timing) cfg.bench.timing = true;
    if (bench_evaluator.empty()) cfg.bench.use_scorer = false;
    cfg.validate();
    auto corpus = read_corpus(bench_corpus);
    if (!bench_objects_from.empty()) {
      corpus = objects_in(corpus, read_dataset_file(bench_objects_from));
    }
    SamplerModel sampler = SamplerModel::from_params(nn::read_checkpoint_file(bench_sampler));
    std::optional<EvaluatorModel> ev;
    GraspScorer scorer;
    if (!bench_evaluator.empty()) {
      ev = EvaluatorModel::from_params(nn::read_checkpoint_file(bench_evaluator));
      scorer = evaluator_scorer(*ev, gm);
    }
    const BenchReport report =
        run_benchmark(sampler_source(sampler), scorer, corpus, cfg.bench, gm, cfg.workers);
    write_json(bench_c.out, report_to_json(report));
    const std::string table = report_table(report);
    if (!bench_table.empty()) write_text(bench_table, table);
    std::cerr << table;
    return 0;
  }

  if (*stats_cmd) {
    const auto records = read_dataset_file(stats_dataset);
    const json j = stats_to_json(compute_stats(records));
    if (stats_out.empty()) {
      std::cout << j.dump(2) << '\n';
    } else {
      write_json(stats_out, j);
    }
    return 0;
  }
  return static_cast<int>(ExitCode::kUsage);
}

}  // namespace vcgs

int main(int argc, char** argv) {
  vcgs::configure_allocator();
  try {
    return vcgs::run(argc, argv);
  } catch (const vcgs::Error& e) {
    return vcgs::report_error(e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return vcgs::report_error(vcgs::ExitCode::kDataFormat, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return vcgs::report_error(vcgs::ExitCode::kConfig, e.what());
  } catch (const std::exception& e) {
    return vcgs::report_error(vcgs::ExitCode::kInvariant, e.what());
  }
}
