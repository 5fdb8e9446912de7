#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "vcgs/common/rng.h"
#include "vcgs/nn/tape.h"

namespace vcgs::nn {

struct Parameter {
  Matrix value;
  Matrix grad;
  /// Adam first and second moments.
  Matrix m;
  Matrix v;
};

/// Named trainable arrays with optimizer state. Iteration order is by name,
/// which fixes the checkpoint layout.
class ParamStore {
 public:
  /// Throws InvariantError on a duplicate name.
  Parameter& add(const std::string& name, Matrix init);
  /// Throws ConfigError for unknown names.
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }

  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t step) { step_ = step; }

  void zero_grad();

  std::map<std::string, Parameter>& entries() { return params_; }
  const std::map<std::string, Parameter>& entries() const { return params_; }

  /// Same names, shapes and values (moments and step ignored).
  bool same_values(const ParamStore& other) const;

 private:
  std::map<std::string, Parameter> params_;
  std::uint64_t step_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update over every parameter, then zeroes the
/// gradients and increments the step counter. Throws TrainingDiverged naming
/// the first parameter with a non-finite gradient, before touching any value.
void adam_step(ParamStore& store, const AdamConfig& cfg);

/// He-normal weights (in x out) and zero bias (1 x out) under
/// `<prefix>.w` / `<prefix>.b`.
void init_linear(ParamStore& store, const std::string& prefix, Eigen::Index in,
                 Eigen::Index out, Rng& rng);

/// "VCGM" checkpoint, version 1, little-endian. Per parameter: u32 name
/// length, name, u32 rank, u64 dims, f64 values (row-major), then the two
/// Adam moments in the same layout. A trailing u64 holds the step counter.
void write_checkpoint(std::ostream& os, const ParamStore& store);
ParamStore read_checkpoint(std::istream& is);
void write_checkpoint_file(const std::filesystem::path& path, const ParamStore& store);
ParamStore read_checkpoint_file(const std::filesystem::path& path);

}  // namespace vcgs::nn
