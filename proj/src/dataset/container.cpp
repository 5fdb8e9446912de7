#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "vcgs/common/error.h"
#include "vcgs/dataset/dataset.h"

// CONG container, little-endian:
//   "CONG" u32 version u64 record_count
//   per record:
//     u32 id_len, id bytes, u32 render_index, u64 seed,
//     f32[7] camera pose (qw qx qy qz px py pz), f32 bbox_diagonal,
//     u32 n_points, f32[3 n] cloud, u8[ceil(n/8)] mask (LSB first),
//     u32 query_index, f32 radius, u32 grasp_count, f32[7 g] grasps

namespace vcgs {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'O', 'N', 'G'};
constexpr std::uint32_t kVersion = 1;
// Guards against allocating absurd sizes from corrupted counts.
constexpr std::uint32_t kMaxPoints = 1u << 24;
constexpr std::uint32_t kMaxGrasps = 1u << 24;
constexpr std::uint32_t kMaxIdLength = 4096;

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void bytes(const void* data, std::size_t n) {
    os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  template <typename T>
  void uint(T v) {
    std::array<unsigned char, sizeof(T)> b;
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b.data(), b.size());
  }
  void f32(double v) { uint(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void pose(const GraspPose& g) {
    f32(g.rotation.w);
    f32(g.rotation.x);
    f32(g.rotation.y);
    f32(g.rotation.z);
    for (int k = 0; k < 3; ++k) f32(g.position[k]);
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::uint64_t offset() const { return offset_; }

  void bytes(void* data, std::size_t n, const char* what) {
    is_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(is_.gcount());
    if (got != n) {
      throw FormatError(std::string("CONG: truncated while reading ") + what, offset_ + got);
    }
    offset_ += n;
  }
  template <typename T>
  T uint(const char* what) {
    std::array<unsigned char, sizeof(T)> b;
    bytes(b.data(), b.size(), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
    return v;
  }
  double f32(const char* what) {
    const std::uint64_t at = offset_;
    const float v = std::bit_cast<float>(uint<std::uint32_t>(what));
    if (!std::isfinite(v)) throw FormatError(std::string("CONG: non-finite ") + what, at);
    return static_cast<double>(v);
  }
  GraspPose pose(const char* what) {
    GraspPose g;
    g.rotation.w = f32(what);
    g.rotation.x = f32(what);
    g.rotation.y = f32(what);
    g.rotation.z = f32(what);
    for (int k = 0; k < 3; ++k) g.position[k] = f32(what);
    return g;
  }

 private:
  std::istream& is_;
  std::uint64_t offset_ = 0;
};

}  // namespace

void write_dataset(std::ostream& os, const std::vector<DatasetRecord>& records) {
  Writer w(os);
  w.bytes(kMagic.data(), kMagic.size());
  w.uint<std::uint32_t>(kVersion);
  w.uint<std::uint64_t>(records.size());
  for (const auto& r : records) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(r.object_id.size()));
    w.bytes(r.object_id.data(), r.object_id.size());
    w.uint<std::uint32_t>(r.render_index);
    w.uint<std::uint64_t>(r.seed);
    w.pose(r.camera_pose);
    w.f32(r.bbox_diagonal);
    const auto n = static_cast<std::uint32_t>(r.cloud.size());
    w.uint<std::uint32_t>(n);
    for (Eigen::Index i = 0; i < r.cloud.points.rows(); ++i) {
      for (int k = 0; k < 3; ++k) w.f32(r.cloud.points(i, k));
    }
    std::vector<unsigned char> bits((n + 7) / 8, 0);
    for (std::uint32_t i = 0; i < n; ++i) {
      if (r.mask.member.at(i)) bits[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
    }
    w.bytes(bits.data(), bits.size());
    w.uint<std::uint32_t>(r.query_index);
    w.f32(r.radius);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(r.grasps.size()));
    for (const auto& g : r.grasps) w.pose(g);
  }
  if (!os) throw ConfigError("CONG: write failed");
}

std::vector<DatasetRecord> read_dataset(std::istream& is) {
  Reader rd(is);
  std::array<char, 4> magic;
  rd.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw FormatError("CONG: bad magic", 0);
  const std::uint32_t version = rd.uint<std::uint32_t>("version");
  if (version != kVersion) {
    throw FormatError("CONG: unsupported version " + std::to_string(version), 4);
  }
  const std::uint64_t count = rd.uint<std::uint64_t>("record count");
  std::vector<DatasetRecord> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 16)));
  for (std::uint64_t rec = 0; rec < count; ++rec) {
    DatasetRecord r;
    const std::uint64_t id_at = rd.offset();
    const std::uint32_t id_len = rd.uint<std::uint32_t>("object id length");
    if (id_len > kMaxIdLength) throw FormatError("CONG: object id too long", id_at);
    r.object_id.resize(id_len);
    rd.bytes(r.object_id.data(), id_len, "object id");
    r.render_index = rd.uint<std::uint32_t>("render index");
    r.seed = rd.uint<std::uint64_t>("seed");
    r.camera_pose = rd.pose("camera pose");
    r.bbox_diagonal = rd.f32("bbox diagonal");
    const std::uint64_t n_at = rd.offset();
    const std::uint32_t n = rd.uint<std::uint32_t>("point count");
    if (n == 0 || n > kMaxPoints) throw FormatError("CONG: invalid point count", n_at);
    r.cloud.frame = CloudFrame::kCamera;
    r.cloud.points.resize(n, 3);
    for (std::uint32_t i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) r.cloud.points(i, k) = rd.f32("cloud");
    }
    std::vector<unsigned char> bits((n + 7) / 8);
    rd.bytes(bits.data(), bits.size(), "mask");
    r.mask.member.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) r.mask.member[i] = (bits[i / 8] >> (i % 8)) & 1u;
    const std::uint64_t q_at = rd.offset();
    r.query_index = rd.uint<std::uint32_t>("query index");
    if (r.query_index >= n) throw FormatError("CONG: query index out of range", q_at);
    r.radius = rd.f32("radius");
    const std::uint64_t g_at = rd.offset();
    const std::uint32_t g = rd.uint<std::uint32_t>("grasp count");
    if (g > kMaxGrasps) throw FormatError("CONG: invalid grasp count", g_at);
    r.grasps.reserve(g);
    for (std::uint32_t i = 0; i < g; ++i) r.grasps.push_back(rd.pose("grasp"));
    out.push_back(std::move(r));
  }
  return out;
}

void write_dataset_file(const std::filesystem::path& path,
                        const std::vector<DatasetRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  write_dataset(os, records);
}

std::vector<DatasetRecord> read_dataset_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open dataset " + path.string());
  return read_dataset(is);
}

}  // namespace vcgs
