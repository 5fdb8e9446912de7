#include "vcgs/scene/corpus.h"

#include <fmt/core.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <cmath>
#include <cctype>

#include "vcgs/common/error.h"
#include "vcgs/common/rng.h"

namespace vcgs {

namespace fs = std::filesystem;

void write_off(std::ostream& os, const TriMesh& mesh) {
  os << "OFF\n" << mesh.vertex_count() << ' ' << mesh.face_count() << " 0\n";
  const auto& v = mesh.vertices();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    os << fmt::format("{:.17g} {:.17g} {:.17g}\n", v(i, 0), v(i, 1), v(i, 2));
  }
  const auto& f = mesh.faces();
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    os << "3 " << f(i, 0) << ' ' << f(i, 1) << ' ' << f(i, 2) << '\n';
  }
}

TriMesh read_off(std::istream& is, const std::string& object_id) {
  // Strip comments and tokenize, remembering where each token started.
  std::vector<std::pair<std::string, std::uint64_t>> tokens;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    const std::string body = line.substr(0, hash);
    std::size_t pos = 0;
    while (pos < body.size()) {
      while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
      const std::size_t start = pos;
      while (pos < body.size() && !std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
      if (pos > start) tokens.emplace_back(body.substr(start, pos - start), offset + start);
    }
    offset += line.size() + 1;
  }
  std::size_t next = 0;
  auto take = [&](const char* what) -> const std::pair<std::string, std::uint64_t>& {
    if (next >= tokens.size()) {
      throw FormatError(std::string("OFF: truncated while reading ") + what, offset);
    }
    return tokens[next++];
  };
  auto take_number = [&](const char* what) {
    const auto& [tok, at] = take(what);
    try {
      std::size_t used = 0;
      const double value = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return value;
    } catch (const std::exception&) {
      throw FormatError(std::string("OFF: bad ") + what + " '" + tok + "'", at);
    }
  };
  auto take_count = [&](const char* what) {
    const std::uint64_t at = next < tokens.size() ? tokens[next].second : offset;
    const double v = take_number(what);
    if (v < 0 || v != std::floor(v)) throw FormatError(std::string("OFF: bad ") + what, at);
    return static_cast<long long>(v);
  };

  const auto& header = take("header");
  if (header.first != "OFF") throw FormatError("OFF: missing 'OFF' header", header.second);
  const long long nv = take_count("vertex count");
  const long long nf = take_count("face count");
  take_count("edge count");
  Points v(nv, 3);
  for (long long i = 0; i < nv; ++i) {
    for (int k = 0; k < 3; ++k) v(i, k) = take_number("vertex coordinate");
  }
  std::vector<std::array<int, 3>> tris;
  for (long long i = 0; i < nf; ++i) {
    const long long degree = take_count("face degree");
    if (degree < 3) throw FormatError("OFF: face with fewer than 3 vertices", offset);
    std::vector<int> poly(static_cast<std::size_t>(degree));
    for (auto& idx : poly) {
      const auto at = next < tokens.size() ? tokens[next].second : offset;
      const long long x = take_count("face index");
      if (x >= nv) throw FormatError("OFF: face index out of range", at);
      idx = static_cast<int>(x);
    }
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) tris.push_back({poly[0], poly[k], poly[k + 1]});
  }
  Faces f(static_cast<Eigen::Index>(tris.size()), 3);
  for (std::size_t i = 0; i < tris.size(); ++i) {
    f.row(static_cast<Eigen::Index>(i)) << tris[i][0], tris[i][1], tris[i][2];
  }
  return TriMesh(std::move(v), std::move(f), object_id);
}

void write_off_file(const fs::path& path, const TriMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  write_off(os, mesh);
}

TriMesh read_off_file(const fs::path& path, const std::string& object_id) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open mesh file " + path.string());
  return read_off(is, object_id);
}

namespace {

double draw(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<double> draw_dims(PrimitiveKind kind, Rng& rng) {
  switch (kind) {
    case PrimitiveKind::kBox:
      return {draw(rng, 0.03, 0.065), draw(rng, 0.03, 0.065), draw(rng, 0.08, 0.20)};
    case PrimitiveKind::kCylinder:
      return {draw(rng, 0.02, 0.034), draw(rng, 0.08, 0.20)};
    case PrimitiveKind::kSphere:
      return {draw(rng, 0.02, 0.034)};
    case PrimitiveKind::kCapsule:
      return {draw(rng, 0.02, 0.032), draw(rng, 0.08, 0.18)};
    case PrimitiveKind::kMugLike:
      return {draw(rng, 0.03, 0.038), draw(rng, 0.07, 0.11)};
    case PrimitiveKind::kBottleLike:
      return {draw(rng, 0.025, 0.036), draw(rng, 0.12, 0.24)};
  }
  return {};
}

}  // namespace

std::vector<CorpusObject> generate_corpus(const CorpusConfig& cfg) {
  std::vector<PrimitiveKind> families = cfg.families;
  if (families.empty()) {
    families = {PrimitiveKind::kBox,     PrimitiveKind::kCylinder,
                PrimitiveKind::kSphere,  PrimitiveKind::kCapsule,
                PrimitiveKind::kMugLike, PrimitiveKind::kBottleLike};
  }
  std::vector<CorpusObject> out;
  out.reserve(cfg.n_objects);
  for (std::size_t i = 0; i < cfg.n_objects; ++i) {
    const PrimitiveKind kind = families[i % families.size()];
    const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, "corpus"), i);
    Rng rng(seed);
    PrimitiveSpec spec{kind, draw_dims(kind, rng), 0};
    const std::string id = fmt::format("{}_{:03d}", to_string(kind), i);
    CorpusEntry entry{id, id + ".off", to_string(kind), spec.dims, 1.0};
    out.push_back({entry, gen_primitive(spec, seed, id)});
  }
  return out;
}

void write_corpus(const fs::path& dir, const std::vector<CorpusObject>& objects) {
  fs::create_directories(dir);
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& obj : objects) {
    write_off_file(dir / obj.entry.file, obj.mesh);
    manifest.push_back({{"object_id", obj.entry.object_id},
                        {"file", obj.entry.file},
                        {"kind", obj.entry.kind},
                        {"dims", obj.entry.dims},
                        {"scale", obj.entry.scale}});
  }
  std::ofstream os(dir / "manifest.json");
  if (!os) throw ConfigError("cannot write manifest in " + dir.string());
  os << manifest.dump(2) << '\n';
}

std::vector<CorpusObject> read_corpus(const fs::path& path) {
  const fs::path manifest_path = fs::is_directory(path) ? path / "manifest.json" : path;
  std::ifstream is(manifest_path);
  if (!is) throw ConfigError("cannot open corpus manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("manifest: ") + e.what(), e.byte);
  }
  if (!manifest.is_array()) throw FormatError("manifest must be a JSON array", 0);
  std::vector<CorpusObject> out;
  for (const auto& e : manifest) {
    CorpusEntry entry;
    try {
      entry.object_id = e.at("object_id").get<std::string>();
      entry.file = e.at("file").get<std::string>();
      entry.kind = e.value("kind", std::string("mesh"));
      entry.dims = e.value("dims", std::vector<double>{});
      entry.scale = e.value("scale", 1.0);
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(std::string("manifest entry: ") + ex.what(), 0);
    }
    TriMesh mesh = read_off_file(manifest_path.parent_path() / entry.file, entry.object_id);
    if (entry.scale != 1.0) {
      Points v = mesh.vertices() * entry.scale;
      mesh = TriMesh(std::move(v), mesh.faces(), entry.object_id);
    }
    out.push_back({std::move(entry), std::move(mesh)});
  }
  return out;
}

}  // namespace vcgs
