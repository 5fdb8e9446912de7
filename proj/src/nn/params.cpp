#include "vcgs/nn/params.h"

#include <fmt/core.h>

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "vcgs/common/error.h"

namespace vcgs::nn {

Parameter& ParamStore::add(const std::string& name, Matrix init) {
  if (contains(name)) throw InvariantError("duplicate parameter name: " + name);
  Parameter p;
  p.grad = Matrix::Zero(init.rows(), init.cols());
  p.m = Matrix::Zero(init.rows(), init.cols());
  p.v = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.setZero(p.value.rows(), p.value.cols());
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto it = other.params_.begin();
  for (const auto& [name, p] : params_) {
    if (it->first != name) return false;
    if (it->second.value.rows() != p.value.rows() || it->second.value.cols() != p.value.cols()) {
      return false;
    }
    if (it->second.value != p.value) return false;
    ++it;
  }
  return true;
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  for (auto& [name, p] : store.entries()) {
    if (p.grad.size() != p.value.size()) {
      throw InvariantError("gradient shape mismatch for parameter " + name);
    }
    if (!p.grad.allFinite()) throw TrainingDiverged("non-finite gradient in parameter " + name);
  }
  const std::uint64_t t = store.step() + 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (auto& [name, p] : store.entries()) {
    p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * p.grad;
    p.v = cfg.beta2 * p.v + (1.0 - cfg.beta2) * p.grad.cwiseAbs2();
    p.value.array() -=
        cfg.lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + cfg.eps);
    p.grad.setZero();
  }
  store.set_step(t);
}

void init_linear(ParamStore& store, const std::string& prefix, Eigen::Index in,
                 Eigen::Index out, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(in)));
  Matrix w(in, out);
  // Row-major fill so the draw order does not depend on Eigen's storage.
  for (Eigen::Index r = 0; r < in; ++r) {
    for (Eigen::Index c = 0; c < out; ++c) w(r, c) = normal(rng);
  }
  store.add(prefix + ".w", std::move(w));
  store.add(prefix + ".b", Matrix::Zero(1, out));
}

namespace {

constexpr std::array<char, 4> kMagic = {'V', 'C', 'G', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  std::array<unsigned char, sizeof(T)> b;
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b.data()), sizeof(T));
}

void put_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put(os, std::bit_cast<std::uint64_t>(m(r, c)));
  }
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  std::uint64_t offset() const { return offset_; }

  void bytes(void* out, std::size_t n, const char* what) {
    is_.read(static_cast<char*>(out), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(is_.gcount());
    if (got != n) {
      throw FormatError(fmt::format("VCGM: truncated while reading {}", what), offset_ + got);
    }
    offset_ += n;
  }
  template <typename T>
  T get(const char* what) {
    std::array<unsigned char, sizeof(T)> b;
    bytes(b.data(), sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
    return v;
  }
  Matrix matrix(Eigen::Index rows, Eigen::Index cols, const char* what) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        const std::uint64_t at = offset_;
        m(r, c) = std::bit_cast<double>(get<std::uint64_t>(what));
        if (!std::isfinite(m(r, c))) {
          throw FormatError(fmt::format("VCGM: non-finite {}", what), at);
        }
      }
    }
    return m;
  }

 private:
  std::istream& is_;
  std::uint64_t offset_ = 0;
};

// Parameters are stored as matrices; rank 1 is written for 1 x n rows.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 28;

}  // namespace

void write_checkpoint(std::ostream& os, const ParamStore& store) {
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, store.size());
  for (const auto& [name, p] : store.entries()) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    const bool row = p.value.rows() == 1;
    put<std::uint32_t>(os, row ? 1 : 2);
    if (!row) put<std::uint64_t>(os, static_cast<std::uint64_t>(p.value.rows()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(p.value.cols()));
    put_matrix(os, p.value);
    put_matrix(os, p.m);
    put_matrix(os, p.v);
  }
  put<std::uint64_t>(os, store.step());
  if (!os) throw ConfigError("VCGM: write failed");
}

ParamStore read_checkpoint(std::istream& is) {
  Reader rd(is);
  std::array<char, 4> magic;
  rd.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw FormatError("VCGM: bad magic", 0);
  const auto version = rd.get<std::uint32_t>("version");
  if (version != kVersion) throw FormatError(fmt::format("VCGM: unsupported version {}", version), 4);
  const auto count = rd.get<std::uint64_t>("parameter count");
  ParamStore store;
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::uint64_t name_at = rd.offset();
    const auto len = rd.get<std::uint32_t>("name length");
    if (len == 0 || len > 1024) throw FormatError("VCGM: invalid name length", name_at);
    std::string name(len, '\0');
    rd.bytes(name.data(), len, "name");
    const std::uint64_t rank_at = rd.offset();
    const auto rank = rd.get<std::uint32_t>("rank");
    if (rank != 1 && rank != 2) throw FormatError("VCGM: unsupported rank", rank_at);
    const std::uint64_t dims_at = rd.offset();
    const std::uint64_t rows = rank == 2 ? rd.get<std::uint64_t>("dims") : 1;
    const std::uint64_t cols = rd.get<std::uint64_t>("dims");
    if (rows == 0 || cols == 0 || rows > kMaxElements || cols > kMaxElements ||
        rows * cols > kMaxElements) {
      throw FormatError("VCGM: invalid dims", dims_at);
    }
    const auto r = static_cast<Eigen::Index>(rows), c = static_cast<Eigen::Index>(cols);
    if (store.contains(name)) throw FormatError("VCGM: duplicate parameter " + name, name_at);
    Parameter& p = store.add(name, rd.matrix(r, c, "values"));
    p.m = rd.matrix(r, c, "first moment");
    p.v = rd.matrix(r, c, "second moment");
  }
  store.set_step(rd.get<std::uint64_t>("step"));
  return store;
}

void write_checkpoint_file(const std::filesystem::path& path, const ParamStore& store) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  write_checkpoint(os, store);
}

ParamStore read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint " + path.string());
  return read_checkpoint(is);
}

}  // namespace vcgs::nn
