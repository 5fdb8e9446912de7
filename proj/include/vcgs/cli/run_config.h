#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

#include "vcgs/bench/benchmark.h"
#include "vcgs/dataset/dataset.h"
#include "vcgs/models/evaluator.h"
#include "vcgs/models/sampler.h"
#include "vcgs/scene/corpus.h"

namespace vcgs {

/// Everything a pipeline run needs. Loaded from JSON with every section
/// optional; unknown keys are rejected with ConfigError.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  CorpusConfig corpus;
  CurationConfig curation;
  /// Share of objects held out by `curate --test-out`.
  double test_fraction = 0.25;
  SamplerConfig sampler;
  EvaluatorConfig evaluator;
  NegativeConfig negatives;
  /// Positives per record used for evaluator training; 0 keeps all.
  std::size_t evaluator_positives_per_record = 16;
  BenchConfig bench;

  /// Pushes the global seed into every section.
  void apply_seed(std::uint64_t s);
  void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);
/// Throws ConfigError for unreadable or malformed files.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace vcgs
