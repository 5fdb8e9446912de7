// Acceptance gate: one PASS/FAIL line per criterion on stdout.
//
// Usage: vcgs_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "support.h"
#include "vcgs/cli/pipeline.h"
#include "vcgs/common/alloc.h"
#include "vcgs/common/log.h"
#include "vcgs/nn/layers.h"
#include "vcgs/nn/params.h"
#include "vcgs/scene/sampling.h"

namespace fs = std::filesystem;
using namespace vcgs;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int run_cli(const std::string& args) {
  const std::string cmd = fmt::format("\"{}\" {} 2>/dev/null", VCGS_CLI_PATH, args);
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// Settings shared by the learning criteria (7, 8, 9).
struct LearningPlan {
  std::uint64_t seed = 11;
  std::size_t n_objects = 16;
  std::size_t renders = 8;
  std::size_t n_points = 256;
  std::size_t queries = 10;
  double test_fraction = 0.25;
  std::size_t bench_renders = 2;
  std::size_t bench_areas = 10;
};

SamplerConfig sampler_config(std::uint64_t seed, bool unconstrained) {
  SamplerConfig cfg;
  cfg.trunk_widths = {32, 64, 128};
  cfg.head_widths = {128, 64};
  cfg.alpha = 0.01;
  cfg.lr = 1e-3;
  cfg.epochs = 30;
  cfg.examples_per_epoch = 2000;
  cfg.batch_size = 8;
  cfg.unconstrained = unconstrained;
  cfg.seed = seed;
  return cfg;
}

EvaluatorConfig evaluator_config(std::uint64_t seed) {
  EvaluatorConfig cfg;
  cfg.trunk_widths = {32, 64, 128};
  cfg.head_widths = {128, 64};
  cfg.lr = 1e-3;
  cfg.epochs = 15;
  cfg.examples_per_epoch = 2000;
  cfg.batch_size = 16;
  cfg.seed = seed;
  return cfg;
}

/// Trained models and benchmark reports, built once and shared by 7-10.
struct Learned {
  std::vector<CorpusObject> test_objects;
  std::vector<DatasetRecord> train, test;
  SamplerModel constrained, unconstrained;
  EvaluatorModel evaluator;
  BenchReport bench_constrained, bench_unconstrained, bench_random_top;
  double evaluator_auc = 0.0;
  double build_seconds = 0.0;
};

class Acceptance {
 public:
  explicit Acceptance(fs::path work) : work_(std::move(work)) {}

  Outcome dataset_soundness() {
    const auto t0 = Clock::now();
    const fs::path corpus = work_ / "c1_corpus";
    const fs::path data = work_ / "c1.cong";
    if (run_cli(fmt::format("corpus --seed 1 --objects 12 --out \"{}\"", corpus.string())) != 0) {
      return {false, "corpus command failed"};
    }
    const int curate = run_cli(fmt::format(
        "curate --seed 1 --corpus \"{}\" --renders 8 --n-points 512 --queries 10 --out \"{}\"",
        corpus.string(), data.string()));
    if (curate != 0) return {false, fmt::format("curate exited {}", curate)};
    const fs::path report = work_ / "c1_verify.json";
    const int verify = run_cli(fmt::format("verify-dataset --dataset \"{}\" --corpus \"{}\" --out \"{}\"",
                                           data.string(), corpus.string(), report.string()));
    const double t = seconds_since(t0);
    const auto j = nlohmann::json::parse(slurp(report));
    const std::size_t grasps = j.at("grasps");
    const bool ok = verify == 0 && j.at("ok").get<bool>() && grasps > 0 && t < 180.0;
    return {ok, fmt::format("{} records, {} grasps, {} off-target, {} unstable, {:.1f} s (limit 180 s)",
                            j.at("records").get<std::size_t>(), grasps,
                            j.at("off_target").get<std::size_t>(),
                            j.at("unstable").get<std::size_t>(), t)};
  }

  Outcome h_equivariance() {
    Rng rng(2);
    const GripperModel gm = GripperModel::canonical();
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const GraspPose g = testing::random_pose(rng);
      const GraspPose t = testing::random_pose(rng);
      const ControlPoints direct = grasp_to_points(t * g, gm);
      ControlPoints mapped = grasp_to_points(g, gm);
      for (int r = 0; r < 6; ++r) mapped.row(r) = t.apply(mapped.row(r).transpose()).transpose();
      worst = std::max(worst, (direct - mapped).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-9, fmt::format("max deviation {:.3e} over 1000 pairs (limit 1e-9)", worst)};
  }

  Outcome gradients() {
    Rng rng(3);
    double worst = 0.0;
    std::string worst_case;
    std::size_t n_cases = 0;
    std::size_t redraws = 0;
    bool kinked = false;
    for (const auto& c : testing::gradient_cases()) {
      ++n_cases;
      for (int i = 0; i < 25; ++i) {
        const testing::GradCheck r = testing::run_smooth(c, rng, &redraws);
        kinked = kinked || r.kinked;
        if (r.max_rel_error > worst) {
          worst = r.max_rel_error;
          worst_case = c.name + " / " + r.detail;
        }
      }
    }
    return {worst <= 1e-4 && !kinked,
            fmt::format("{} cases x 25 instances, worst relative error {:.3e} ({}) (limit 1e-4); {} instances redrawn at a kink",
                        n_cases, worst, worst_case, redraws)};
  }

  Outcome fps_equivalence() {
    Rng rng(4);
    int mismatches = 0;
    for (int t = 0; t < 100; ++t) {
      const auto n = std::uniform_int_distribution<Eigen::Index>(1, 200)(rng);
      const Points pts = testing::random_points(rng, n);
      const auto k = std::uniform_int_distribution<std::size_t>(1, static_cast<std::size_t>(n))(rng);
      const auto seed = std::uniform_int_distribution<std::size_t>(0, static_cast<std::size_t>(n) - 1)(rng);
      if (fps(pts, k, seed) != testing::brute_force_fps(pts, k, seed)) ++mismatches;
    }
    return {mismatches == 0, fmt::format("{} of 100 random clouds differ from brute force", mismatches)};
  }

  Outcome kl_monte_carlo() {
    Rng rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    double worst_z = 0.0;
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd mu(2), log_var(2);
      for (int j = 0; j < 2; ++j) {
        mu(j) = u(rng);
        log_var(j) = u(rng);
      }
      const double closed = nn::kl_standard_normal(mu, log_var);
      const int n = 100000;
      double s = 0.0, s2 = 0.0;
      for (int i = 0; i < n; ++i) {
        // log q(z) - log p(z) for z ~ q.
        double term = 0.0;
        for (int j = 0; j < 2; ++j) {
          const double eps = normal(rng);
          const double z = mu(j) + std::exp(0.5 * log_var(j)) * eps;
          term += -0.5 * log_var(j) - 0.5 * eps * eps + 0.5 * z * z;
        }
        s += term;
        s2 += term * term;
      }
      const double mean = s / n;
      const double se = std::sqrt(std::max(0.0, s2 / n - mean * mean) / n);
      worst_z = std::max(worst_z, std::abs(mean - closed) / se);
    }
    return {worst_z <= 3.0, fmt::format("worst |closed - MC| = {:.2f} standard errors over 20 draws (limit 3)", worst_z)};
  }

  Outcome sampler_training() {
    const auto t0 = Clock::now();
    const GripperModel gm = GripperModel::canonical();
    CorpusConfig cc;
    cc.n_objects = 4;
    cc.families = {PrimitiveKind::kBox};
    cc.seed = 6;
    CurationConfig cur;
    cur.renders_per_object = 4;
    cur.n_points = 128;
    cur.n_queries = 5;
    cur.seed = 6;
    const auto records = curate_corpus(generate_corpus(cc), cur, gm).records;
    if (records.empty()) return {false, "toy corpus produced no records"};

    SamplerConfig sc = sampler_config(6, false);
    // One epoch is one pass over the toy records.
    sc.examples_per_epoch = records.size();
    sc.epochs = std::max<std::size_t>(60, 8000 / records.size());
    const SamplerTraining toy = train_sampler(records, sc, gm);
    const double first = toy.log.front().recon;
    const double last = toy.log.back().recon;

    // Memorization: one record holding one grasp.
    std::vector<DatasetRecord> single{records.front()};
    single.front().grasps.resize(1);
    SamplerConfig oc = sampler_config(7, false);
    oc.epochs = 1500;
    oc.examples_per_epoch = 16;
    const SamplerTraining over = train_sampler(single, oc, gm);
    const double over_recon = over.log.back().recon;
    const double t = seconds_since(t0);
    const bool ok = last <= 0.5 * first && over_recon < 0.02 && t < 600.0;
    return {ok, fmt::format("toy recon ({} records) {:.4f} -> {:.4f} (ratio {:.2f}, limit 0.5); single-record recon {:.4f} (limit 0.02); {:.0f} s",
                            records.size(), first, last, last / first, over_recon, t)};
  }

  Learned& learned() {
    if (learned_) return *learned_;
    learned_.emplace();
    Learned& L = *learned_;
    const auto t0 = Clock::now();
    const GripperModel gm = GripperModel::canonical();
    const LearningPlan plan;
    CorpusConfig cc;
    cc.n_objects = plan.n_objects;
    cc.seed = plan.seed;
    const auto corpus = generate_corpus(cc);
    CurationConfig cur;
    cur.renders_per_object = plan.renders;
    cur.n_points = plan.n_points;
    cur.n_queries = plan.queries;
    cur.seed = derive_seed(plan.seed, "curation");
    const auto records = curate_corpus(corpus, cur, gm).records;
    std::tie(L.train, L.test) = split(records, plan.test_fraction, derive_seed(plan.seed, "split"));
    L.test_objects = objects_in(corpus, L.test);
    log::info("learning corpus: {} train / {} test records, {} test objects", L.train.size(),
              L.test.size(), L.test_objects.size());

    L.constrained = train_sampler(L.train, sampler_config(derive_seed(plan.seed, "c"), false), gm).model;
    L.unconstrained = train_sampler(L.train, sampler_config(derive_seed(plan.seed, "u"), true), gm).model;

    NegativeConfig neg;
    neg.seed = derive_seed(plan.seed, "negatives");
    const auto examples = build_eval_examples(L.train, corpus, neg, gm, 16);
    L.evaluator = train_evaluator(L.train, examples, evaluator_config(derive_seed(plan.seed, "e")), gm).model;
    neg.seed = derive_seed(plan.seed, "holdout-negatives");
    const auto held = build_eval_examples(L.test, corpus, neg, gm, 16);
    std::vector<double> scores;
    std::vector<bool> labels;
    for (const auto& ex : held) {
      scores.push_back(evaluate_grasp(L.evaluator, L.test[ex.record].cloud, ex.grasp, gm));
      labels.push_back(ex.stable);
    }
    L.evaluator_auc = roc_auc(scores, labels);

    BenchConfig bc;
    bc.n_points = plan.n_points;
    bc.renders_per_object = plan.bench_renders;
    bc.areas_per_object = plan.bench_areas;
    bc.seed = derive_seed(plan.seed, "bench");
    const GraspScorer scorer = evaluator_scorer(L.evaluator, gm);
    L.bench_constrained = run_benchmark(sampler_source(L.constrained), scorer, L.test_objects, bc, gm);
    BenchConfig random_top = bc;
    random_top.use_scorer = false;
    L.bench_random_top = run_benchmark(sampler_source(L.constrained), scorer, L.test_objects, random_top, gm);
    BenchConfig uc = bc;
    uc.mode = BenchMode::kUnconstrained;
    L.bench_unconstrained = run_benchmark(sampler_source(L.unconstrained), scorer, L.test_objects, uc, gm);
    L.build_seconds = seconds_since(t0);
    log::info("learning stage took {:.0f} s", L.build_seconds);
    return L;
  }

  Outcome constrained_efficacy() {
    const Learned& L = learned();
    const double c = L.bench_constrained.aggregate.ratio_kept;
    const double u = L.bench_unconstrained.aggregate.ratio_kept;
    const bool ok = c >= 70.0 && c >= 2.0 * u;
    return {ok, fmt::format("on-target ratio constrained {:.1f}% (limit 70%), unconstrained+filter {:.1f}%, factor {:.2f} (limit 2); {} held-out trials",
                            c, u, u > 0 ? c / u : INFINITY, L.bench_constrained.trials.size())};
  }

  Outcome sample_efficiency() {
    const Learned& L = learned();
    const double c = L.bench_constrained.aggregate.mean_draws;
    const double u = L.bench_unconstrained.aggregate.mean_draws;
    const std::size_t trials = L.bench_constrained.trials.size();
    const bool ok = trials >= 40 && c <= 0.5 * u;
    return {ok, fmt::format("mean draws to 10 on-target: constrained {:.2f}, unconstrained {:.2f}, ratio {:.3f} (limit 0.5); {} trials (min 40)",
                            c, u, c / u, trials)};
  }

  Outcome evaluator_quality() {
    const Learned& L = learned();
    const double scored = L.bench_constrained.aggregate.success_rate;
    const double random = L.bench_random_top.aggregate.success_rate;
    const bool ok = L.evaluator_auc >= 0.85 && scored >= random;
    return {ok, fmt::format("held-out AUC {:.4f} (limit 0.85); top-10 success scored {:.1f}% vs random-10 {:.1f}%",
                            L.evaluator_auc, scored, random)};
  }

  Outcome determinism() {
    const fs::path corpus = work_ / "c10_corpus";
    if (run_cli(fmt::format("corpus --seed 10 --objects 4 --out \"{}\"", corpus.string())) != 0) {
      return {false, "corpus command failed"};
    }
    std::vector<std::string> curated;
    for (const char* workers : {"1", "1", "2"}) {
      const fs::path out = work_ / fmt::format("c10_{}.cong", curated.size());
      if (run_cli(fmt::format("curate --seed 10 --workers {} --corpus \"{}\" --renders 3 --n-points 256 --queries 5 --out \"{}\"",
                              workers, corpus.string(), out.string())) != 0) {
        return {false, "curate failed"};
      }
      curated.push_back(slurp(out));
    }
    // A briefly trained sampler checkpoint for the bench runs.
    const GripperModel gm = GripperModel::canonical();
    const auto records = read_dataset_file(work_ / "c10_0.cong");
    SamplerConfig sc = sampler_config(10, false);
    sc.epochs = 1;
    sc.examples_per_epoch = 64;
    const fs::path ckpt = work_ / "c10_sampler.vcgm";
    nn::write_checkpoint_file(ckpt, train_sampler(records, sc, gm).model.params);
    std::vector<std::string> reports;
    for (const char* workers : {"1", "1", "2"}) {
      const fs::path out = work_ / fmt::format("c10_bench_{}.json", reports.size());
      if (run_cli(fmt::format("bench --seed 10 --workers {} --sampler \"{}\" --corpus \"{}\" --samples 20 --top-k 5 --out \"{}\"",
                              workers, ckpt.string(), corpus.string(), out.string())) != 0) {
        return {false, "bench failed"};
      }
      reports.push_back(slurp(out));
    }
    const bool curate_same = !curated[0].empty() && curated[0] == curated[1];
    const bool bench_same = !reports[0].empty() && reports[0] == reports[1];
    const bool parallel_same = curated[0] == curated[2] && reports[0] == reports[2];
    return {curate_same && bench_same && parallel_same,
            fmt::format("curate rerun identical: {}, bench rerun identical: {}, 2-worker runs identical: {}",
                        curate_same, bench_same, parallel_same)};
  }

 private:
  fs::path work_;
  std::optional<Learned> learned_;
};

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  log::set_threshold(log::Level::kWarn);
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  const fs::path work = fs::temp_directory_path() / fmt::format("vcgs-acceptance-{}", getpid());
  fs::create_directories(work);
  Acceptance acc(work);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"dataset soundness", [&] { return acc.dataset_soundness(); }},
      {"h-map equivariance", [&] { return acc.h_equivariance(); }},
      {"gradient correctness", [&] { return acc.gradients(); }},
      {"FPS oracle equivalence", [&] { return acc.fps_equivalence(); }},
      {"KL correctness", [&] { return acc.kl_monte_carlo(); }},
      {"sampler training", [&] { return acc.sampler_training(); }},
      {"constrained-sampling efficacy", [&] { return acc.constrained_efficacy(); }},
      {"sample efficiency", [&] { return acc.sample_efficiency(); }},
      {"evaluator quality", [&] { return acc.evaluator_quality(); }},
      {"determinism", [&] { return acc.determinism(); }},
  };
  int failures = 0;
  const auto t0 = Clock::now();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    Outcome o;
    const auto ti = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    failures += !o.pass;
    fmt::print("[{}] {:>2}. {}: {} [{:.1f} s]\n", o.pass ? "PASS" : "FAIL", number,
               criteria[i].first, o.detail, seconds_since(ti));
    std::fflush(stdout);
  }
  fmt::print("acceptance: {} failure(s), {:.0f} s total\n", failures, seconds_since(t0));
  std::error_code ec;
  fs::remove_all(work, ec);
  return failures == 0 ? 0 : 1;
}
