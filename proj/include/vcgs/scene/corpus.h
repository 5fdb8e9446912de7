#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vcgs/scene/mesh.h"
#include "vcgs/scene/primitives.h"

namespace vcgs {

/// OFF text format: "OFF", counts line, vertex lines, face lines. Polygons
/// with more than three vertices are fan-triangulated on read.
void write_off(std::ostream& os, const TriMesh& mesh);
TriMesh read_off(std::istream& is, const std::string& object_id);
void write_off_file(const std::filesystem::path& path, const TriMesh& mesh);
TriMesh read_off_file(const std::filesystem::path& path, const std::string& object_id);

/// One manifest entry. `kind` is a primitive name, or "mesh" for external
/// models with no parametric description.
struct CorpusEntry {
  std::string object_id;
  std::string file;
  std::string kind;
  std::vector<double> dims;
  double scale = 1.0;
};

struct CorpusObject {
  CorpusEntry entry;
  TriMesh mesh;
};

struct CorpusConfig {
  std::size_t n_objects = 12;
  /// Primitive families to cycle through; empty means all six.
  std::vector<PrimitiveKind> families;
  std::uint64_t seed = 0;
};

/// Procedural objects with dims drawn from per-family graspable ranges.
std::vector<CorpusObject> generate_corpus(const CorpusConfig& cfg);

/// Writes one OFF file per object plus manifest.json into `dir`.
void write_corpus(const std::filesystem::path& dir,
                  const std::vector<CorpusObject>& objects);
/// Reads manifest.json (a directory or the manifest path itself) and every
/// mesh it lists, applying `scale`.
std::vector<CorpusObject> read_corpus(const std::filesystem::path& path);

}  // namespace vcgs
