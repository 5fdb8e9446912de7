#include "vcgs/scene/sampling.h"

#include <limits>
#include <random>
#include <string>

#include "vcgs/common/error.h"
#include "vcgs/common/rng.h"

namespace vcgs {

namespace {

inline double sq_dist(const Points& p, Eigen::Index a, Eigen::Index b) {
  const double dx = p(a, 0) - p(b, 0);
  const double dy = p(a, 1) - p(b, 1);
  const double dz = p(a, 2) - p(b, 2);
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

std::vector<std::size_t> fps(const Points& points, std::size_t k,
                             std::size_t seed_index) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k < 1 || k > n) {
    throw SizeError("fps: k = " + std::to_string(k) + " not in [1, " +
                    std::to_string(n) + "]");
  }
  if (seed_index >= n) throw SizeError("fps: seed index out of range");
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  std::size_t current = seed_index;
  for (std::size_t step = 0; step < k; ++step) {
    chosen.push_back(current);
    taken[current] = 1;
    const auto c = static_cast<Eigen::Index>(current);
    std::size_t best = 0;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = sq_dist(points, static_cast<Eigen::Index>(i), c);
      if (d < nearest[i]) nearest[i] = d;
      if (!taken[i] && nearest[i] > best_dist) {
        best_dist = nearest[i];
        best = i;
      }
    }
    current = best;
  }
  return chosen;
}

std::size_t fps_seed_index(const Points& points) {
  if (points.rows() == 0) throw EmptyCloud("fps seed of empty cloud");
  const Eigen::RowVector3d c = points.colwise().mean();
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double d = (points.row(i) - c).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

PointCloud downsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  cloud.validate();
  if (n < 1) throw SizeError("downsample: n must be >= 1");
  PointCloud out;
  out.frame = cloud.frame;
  out.points.resize(static_cast<Eigen::Index>(n), 3);
  const std::size_t size = cloud.size();
  if (size >= n) {
    const auto idx = fps(cloud.points, n, fps_seed_index(cloud.points));
    for (std::size_t i = 0; i < n; ++i) {
      out.points.row(static_cast<Eigen::Index>(i)) =
          cloud.points.row(static_cast<Eigen::Index>(idx[i]));
    }
    return out;
  }
  out.points.topRows(static_cast<Eigen::Index>(size)) = cloud.points;
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, size - 1);
  for (std::size_t i = size; i < n; ++i) {
    out.points.row(static_cast<Eigen::Index>(i)) =
        cloud.points.row(static_cast<Eigen::Index>(pick(rng)));
  }
  return out;
}

}  // namespace vcgs
