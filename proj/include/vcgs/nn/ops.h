#pragma once

#include <vector>

#include "vcgs/nn/tape.h"

// Differentiable primitives. Every op checks shapes (ShapeError naming both
// shapes) and records one tape node. All inputs must share a tape.
namespace vcgs::nn {

Var matmul(Var a, Var b);
/// a + b, with b either the same shape as a or a 1 x cols row broadcast over
/// the rows of a.
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product of equal shapes.
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double c);

Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
/// Natural log; inputs must be positive.
Var log(Var a);
/// Elementwise clamp; the gradient is zero where the bound is active.
Var clamp(Var a, double lo, double hi);

Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
/// Repeats a 1 x C row (or a B x C block, one row per set) so each input row
/// fills `times` consecutive output rows.
Var tile_rows(Var a, Eigen::Index times);

/// Column-wise max over consecutive groups of `set_size` rows:
/// (B * set_size) x C -> B x C. The gradient goes to the first row attaining
/// the maximum.
Var max_pool_over_set(Var a, Eigen::Index set_size);

/// Scalar mean / sum / L1 norm over all elements.
Var mean(Var a);
Var sum(Var a);
Var abs_sum(Var a);

/// Each row scaled to unit Euclidean norm. A zero row maps to `fallback`'s
/// direction (its normalized copy) with zero gradient.
Var normalize_rows(Var a, const Eigen::RowVectorXd& fallback);

/// x W + b for x: R x in, W: in x out, b: 1 x out.
Var linear(Var x, Var weight, Var bias);

/// Images of fixed points under a batch of rigid poses. `quat` is B x 4
/// (w,x,y,z), used through the unit-quaternion rotation formula; `pos` is
/// B x 3; `points` is k x 3. Output row b holds R_b p_i + t_b for every point,
/// flattened row-major (B x 3k).
Var rigid_points(Var quat, Var pos, const Matrix& points);

}  // namespace vcgs::nn
