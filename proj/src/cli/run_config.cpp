#include "vcgs/cli/run_config.h"

#include <fstream>
#include <set>

#include "vcgs/common/error.h"

namespace vcgs {

namespace {

using nlohmann::json;

/// Reads keys of one JSON object into fields, rejecting anything unknown.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
  }

  template <typename T>
  Section& get(const char* key, T& field) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return *this;
    try {
      field = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + name_ + "." + key + "': " + e.what());
    }
    return *this;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("config: unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_camera(const json& j, CameraSampling& c) {
  Section s(j, "curation.camera");
  s.get("min_radius", c.min_radius)
      .get("max_radius", c.max_radius)
      .get("width", c.width)
      .get("height", c.height)
      .get("focal", c.focal);
  s.finish();
}

json camera_json(const CameraSampling& c) {
  return {{"min_radius", c.min_radius},
          {"max_radius", c.max_radius},
          {"width", c.width},
          {"height", c.height},
          {"focal", c.focal}};
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  corpus.seed = derive_seed(s, "corpus");
  curation.seed = derive_seed(s, "curation");
  sampler.seed = derive_seed(s, "sampler");
  evaluator.seed = derive_seed(s, "evaluator");
  negatives.seed = derive_seed(s, "negatives");
  bench.seed = derive_seed(s, "bench");
}

void RunConfig::validate() const {
  if (workers < 1) throw ConfigError("config: workers must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("config: test_fraction must lie in (0, 1)");
  }
  if (corpus.n_objects < 1) throw ConfigError("config: corpus.n_objects must be >= 1");
  curation.validate();
  sampler.validate();
  evaluator.validate();
  negatives.validate();
  bench.validate();
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  Section top(j, "config");
  std::uint64_t seed = 0;
  top.get("seed", seed).get("workers", cfg.workers).get("test_fraction", cfg.test_fraction);
  top.get("evaluator_positives_per_record", cfg.evaluator_positives_per_record);
  cfg.apply_seed(seed);

  if (const json* c = top.child("corpus")) {
    Section s(*c, "corpus");
    std::vector<std::string> families;
    s.get("n_objects", cfg.corpus.n_objects).get("families", families);
    s.finish();
    for (const auto& f : families) cfg.corpus.families.push_back(primitive_kind_from_string(f));
  }
  if (const json* c = top.child("curation")) {
    Section s(*c, "curation");
    s.get("renders_per_object", cfg.curation.renders_per_object)
        .get("n_points", cfg.curation.n_points)
        .get("n_queries", cfg.curation.n_queries)
        .get("assoc_distance", cfg.curation.assoc_distance)
        .get("mu", cfg.curation.mu)
        .get("candidates_per_object", cfg.curation.candidates_per_object);
    if (const json* cam = s.child("camera")) read_camera(*cam, cfg.curation.camera);
    s.finish();
  }
  if (const json* c = top.child("sampler")) {
    Section s(*c, "sampler");
    s.get("latent_dim", cfg.sampler.latent_dim)
        .get("alpha", cfg.sampler.alpha)
        .get("alpha_warmup", cfg.sampler.alpha_warmup)
        .get("trunk_widths", cfg.sampler.trunk_widths)
        .get("head_widths", cfg.sampler.head_widths)
        .get("lr", cfg.sampler.lr)
        .get("epochs", cfg.sampler.epochs)
        .get("batch_size", cfg.sampler.batch_size)
        .get("examples_per_epoch", cfg.sampler.examples_per_epoch)
        .get("unconstrained", cfg.sampler.unconstrained);
    s.finish();
  }
  if (const json* c = top.child("evaluator")) {
    Section s(*c, "evaluator");
    s.get("trunk_widths", cfg.evaluator.trunk_widths)
        .get("head_widths", cfg.evaluator.head_widths)
        .get("lr", cfg.evaluator.lr)
        .get("epochs", cfg.evaluator.epochs)
        .get("batch_size", cfg.evaluator.batch_size)
        .get("examples_per_epoch", cfg.evaluator.examples_per_epoch);
    s.finish();
  }
  if (const json* c = top.child("negatives")) {
    Section s(*c, "negatives");
    s.get("max_rotation_deg", cfg.negatives.max_rotation_deg)
        .get("max_translation", cfg.negatives.max_translation)
        .get("perturbed_fraction", cfg.negatives.perturbed_fraction)
        .get("negatives_per_record", cfg.negatives.negatives_per_record)
        .get("candidates_per_object", cfg.negatives.candidates_per_object)
        .get("max_attempts", cfg.negatives.max_attempts)
        .get("mu", cfg.negatives.mu);
    s.finish();
  }
  if (const json* c = top.child("bench")) {
    Section s(*c, "bench");
    std::string mode = to_string(cfg.bench.mode);
    s.get("mode", mode)
        .get("n_sampled", cfg.bench.n_sampled)
        .get("top_k", cfg.bench.top_k)
        .get("areas_per_object", cfg.bench.areas_per_object)
        .get("renders_per_object", cfg.bench.renders_per_object)
        .get("n_points", cfg.bench.n_points)
        .get("d", cfg.bench.d)
        .get("mu", cfg.bench.mu)
        .get("filter_unconstrained", cfg.bench.filter_unconstrained)
        .get("use_scorer", cfg.bench.use_scorer)
        .get("draws_k", cfg.bench.draws_k)
        .get("draws_batch", cfg.bench.draws_batch)
        .get("draws_max", cfg.bench.draws_max)
        .get("timing", cfg.bench.timing);
    s.finish();
    cfg.bench.mode = bench_mode_from_string(mode);
  }
  top.finish();
  cfg.validate();
  return cfg;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  std::vector<std::string> families;
  for (auto f : cfg.corpus.families) families.push_back(to_string(f));
  const auto& c = cfg.curation;
  const auto& s = cfg.sampler;
  const auto& e = cfg.evaluator;
  const auto& n = cfg.negatives;
  const auto& b = cfg.bench;
  return {{"seed", cfg.seed},
          {"workers", cfg.workers},
          {"test_fraction", cfg.test_fraction},
          {"evaluator_positives_per_record", cfg.evaluator_positives_per_record},
          {"corpus", {{"n_objects", cfg.corpus.n_objects}, {"families", families}}},
          {"curation",
           {{"renders_per_object", c.renders_per_object},
            {"n_points", c.n_points},
            {"n_queries", c.n_queries},
            {"assoc_distance", c.assoc_distance},
            {"mu", c.mu},
            {"candidates_per_object", c.candidates_per_object},
            {"camera", camera_json(c.camera)}}},
          {"sampler",
           {{"latent_dim", s.latent_dim},
            {"alpha", s.alpha},
            {"alpha_warmup", s.alpha_warmup},
            {"trunk_widths", s.trunk_widths},
            {"head_widths", s.head_widths},
            {"lr", s.lr},
            {"epochs", s.epochs},
            {"batch_size", s.batch_size},
            {"examples_per_epoch", s.examples_per_epoch},
            {"unconstrained", s.unconstrained}}},
          {"evaluator",
           {{"trunk_widths", e.trunk_widths},
            {"head_widths", e.head_widths},
            {"lr", e.lr},
            {"epochs", e.epochs},
            {"batch_size", e.batch_size},
            {"examples_per_epoch", e.examples_per_epoch}}},
          {"negatives",
           {{"max_rotation_deg", n.max_rotation_deg},
            {"max_translation", n.max_translation},
            {"perturbed_fraction", n.perturbed_fraction},
            {"negatives_per_record", n.negatives_per_record},
            {"candidates_per_object", n.candidates_per_object},
            {"max_attempts", n.max_attempts},
            {"mu", n.mu}}},
          {"bench",
           {{"mode", to_string(b.mode)},
            {"n_sampled", b.n_sampled},
            {"top_k", b.top_k},
            {"areas_per_object", b.areas_per_object},
            {"renders_per_object", b.renders_per_object},
            {"n_points", b.n_points},
            {"d", b.d},
            {"mu", b.mu},
            {"filter_unconstrained", b.filter_unconstrained},
            {"use_scorer", b.use_scorer},
            {"draws_k", b.draws_k},
            {"draws_batch", b.draws_batch},
            {"draws_max", b.draws_max},
            {"timing", b.timing}}}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace vcgs
