#pragma once

#include <cstdint>
#include <vector>

#include "vcgs/geometry/geometry.h"

namespace vcgs {

/// Greedy farthest point sampling. The first index is `seed_index`; each
/// following index maximizes the distance to the chosen set, ties going to
/// the lowest index. Throws SizeError unless 1 <= k <= N.
std::vector<std::size_t> fps(const Points& points, std::size_t k,
                             std::size_t seed_index);

/// Lowest index among the points nearest to the centroid.
std::size_t fps_seed_index(const Points& points);

/// Exactly n points. Clouds with at least n points are reduced by FPS from
/// fps_seed_index; smaller clouds keep every point and are topped up by
/// drawing with replacement from an rng seeded with `seed`.
PointCloud downsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

}  // namespace vcgs
