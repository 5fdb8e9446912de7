#include "vcgs/nn/ops.h"

#include <fmt/core.h>

#include <array>
#include <cmath>
#include <memory>

#include "vcgs/common/error.h"

namespace vcgs::nn {

namespace {

std::string shape_of(const Matrix& m) { return fmt::format("{}x{}", m.rows(), m.cols()); }

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(fmt::format("{}: incompatible shapes {} and {}", op, shape_of(a), shape_of(b)));
}

Tape& tape_of(Var a) {
  if (a.tape() == nullptr) throw InvariantError("op on an unbound Var");
  return *a.tape();
}

}  // namespace

Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  const int ia = a.id(), ib = b.id();
  return tape_of(a).push("matmul", av * bv, {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.accumulate_expr(ia, g * t.value(ib).transpose());
    if (t.requires_grad(ib)) t.accumulate_expr(ib, t.value(ia).transpose() * g);
  });
}

Var add(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const int ia = a.id(), ib = b.id();
  if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
    return tape_of(a).push("add", av + bv, {a, b}, [ia, ib](Tape& t, int self) {
      t.accumulate(ia, t.grad(self));
      t.accumulate(ib, t.grad(self));
    });
  }
  if (bv.rows() != 1 || bv.cols() != av.cols()) shape_error("add", av, bv);
  Matrix out = av.rowwise() + bv.row(0);
  return tape_of(a).push("add", std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    t.accumulate(ia, g);
    t.accumulate_expr(ib, g.colwise().sum());
  });
}

Var sub(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_error("sub", av, bv);
  const int ia = a.id(), ib = b.id();
  return tape_of(a).push("sub", av - bv, {a, b}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate_expr(ib, -t.grad(self));
  });
}

Var mul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_error("mul", av, bv);
  const int ia = a.id(), ib = b.id();
  return tape_of(a).push("mul", av.cwiseProduct(bv), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.accumulate_expr(ia, g.cwiseProduct(t.value(ib)));
    if (t.requires_grad(ib)) t.accumulate_expr(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var scale(Var a, double s) {
  const int ia = a.id();
  return tape_of(a).push("scale", a.value() * s, {a}, [ia, s](Tape& t, int self) {
    t.accumulate_expr(ia, t.grad(self) * s);
  });
}

Var add_scalar(Var a, double c) {
  const int ia = a.id();
  Matrix out = a.value().array() + c;
  return tape_of(a).push("add_scalar", std::move(out), {a}, [ia](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
  });
}

Var relu(Var a) {
  const int ia = a.id();
  return tape_of(a).push("relu", a.value().cwiseMax(0.0), {a}, [ia](Tape& t, int self) {
    const Matrix& x = t.value(ia);
    t.accumulate_expr(ia, (x.array() > 0.0).select(t.grad(self), 0.0));
  });
}

Var sigmoid(Var a) {
  const int ia = a.id();
  Matrix out = a.value().unaryExpr([](double x) {
    // Split by sign so exp never overflows.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return tape_of(a).push("sigmoid", std::move(out), {a}, [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    t.accumulate_expr(ia, t.grad(self).array() * y.array() * (1.0 - y.array()));
  });
}

Var exp(Var a) {
  const int ia = a.id();
  Matrix out = a.value().array().exp();
  return tape_of(a).push("exp", std::move(out), {a}, [ia](Tape& t, int self) {
    t.accumulate_expr(ia, t.grad(self).cwiseProduct(t.value(self)));
  });
}

Var log(Var a) {
  const Matrix& av = a.value();
  if ((av.array() <= 0.0).any()) throw InvariantError("log: non-positive input");
  const int ia = a.id();
  Matrix out = av.array().log();
  return tape_of(a).push("log", std::move(out), {a}, [ia](Tape& t, int self) {
    t.accumulate_expr(ia, t.grad(self).array() / t.value(ia).array());
  });
}

Var clamp(Var a, double lo, double hi) {
  if (!(lo <= hi)) throw InvariantError("clamp: lo > hi");
  const int ia = a.id();
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return tape_of(a).push("clamp", std::move(out), {a}, [ia, lo, hi](Tape& t, int self) {
    const auto x = t.value(ia).array();
    t.accumulate_expr(ia, (x >= lo && x <= hi).select(t.grad(self), 0.0));
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvariantError("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts.front().value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  return tape_of(parts.front())
      .push("concat_cols", std::move(out), parts, [ids, widths](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        Eigen::Index at = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (t.requires_grad(ids[k])) t.accumulate_expr(ids[k], g.middleCols(at, widths[k]));
          at += widths[k];
        }
      });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError(fmt::format("slice_cols: columns [{}, {}) outside {}", start, start + count,
                                 shape_of(a.value())));
  }
  const int ia = a.id();
  const Eigen::Index rows = a.rows(), cols = a.cols();
  Matrix out = a.value().middleCols(start, count);
  return tape_of(a).push("slice_cols", std::move(out), {a},
                         [ia, start, count, rows, cols](Tape& t, int self) {
                           Matrix g = Matrix::Zero(rows, cols);
                           g.middleCols(start, count) = t.grad(self);
                           t.accumulate(ia, g);
                         });
}

Var tile_rows(Var a, Eigen::Index times) {
  if (times < 1) throw ShapeError("tile_rows: times must be >= 1");
  const Matrix& av = a.value();
  const int ia = a.id();
  Matrix out(av.rows() * times, av.cols());
  for (Eigen::Index r = 0; r < av.rows(); ++r) {
    out.middleRows(r * times, times).rowwise() = av.row(r);
  }
  return tape_of(a).push("tile_rows", std::move(out), {a}, [ia, times](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix ga(g.rows() / times, g.cols());
    for (Eigen::Index r = 0; r < ga.rows(); ++r) {
      ga.row(r) = g.middleRows(r * times, times).colwise().sum();
    }
    t.accumulate(ia, ga);
  });
}

Var max_pool_over_set(Var a, Eigen::Index set_size) {
  const Matrix& av = a.value();
  if (set_size < 1 || av.rows() % set_size != 0 || av.rows() == 0) {
    throw ShapeError(fmt::format("max_pool_over_set: {} rows is not a multiple of set size {}",
                                 av.rows(), set_size));
  }
  const Eigen::Index sets = av.rows() / set_size;
  const Eigen::Index cols = av.cols();
  Matrix out(sets, cols);
  auto argmax = std::make_shared<std::vector<Eigen::Index>>(static_cast<std::size_t>(sets * cols));
  for (Eigen::Index s = 0; s < sets; ++s) {
    const Eigen::Index base = s * set_size;
    for (Eigen::Index c = 0; c < cols; ++c) {
      Eigen::Index best = base;
      double best_v = av(base, c);
      for (Eigen::Index r = base + 1; r < base + set_size; ++r) {
        if (av(r, c) > best_v) {
          best_v = av(r, c);
          best = r;
        }
      }
      out(s, c) = best_v;
      (*argmax)[static_cast<std::size_t>(s * cols + c)] = best;
    }
  }
  const int ia = a.id();
  const Eigen::Index rows = av.rows();
  return tape_of(a).push("max_pool_over_set", std::move(out), {a},
                         [ia, argmax, rows, cols](Tape& t, int self) {
                           const Matrix& g = t.grad(self);
                           Matrix ga = Matrix::Zero(rows, cols);
                           for (Eigen::Index s = 0; s < g.rows(); ++s) {
                             for (Eigen::Index c = 0; c < cols; ++c) {
                               ga((*argmax)[static_cast<std::size_t>(s * cols + c)], c) += g(s, c);
                             }
                           }
                           t.accumulate(ia, ga);
                         });
}

Var mean(Var a) {
  const Matrix& av = a.value();
  if (av.size() == 0) throw ShapeError("mean: empty input");
  const int ia = a.id();
  const double n = static_cast<double>(av.size());
  Matrix out(1, 1);
  out(0, 0) = av.sum() / n;
  return tape_of(a).push("mean", std::move(out), {a}, [ia, n](Tape& t, int self) {
    const Matrix& x = t.value(ia);
    t.accumulate_expr(ia, Matrix::Constant(x.rows(), x.cols(), t.grad(self)(0, 0) / n));
  });
}

Var sum(Var a) {
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return tape_of(a).push("sum", std::move(out), {a}, [ia](Tape& t, int self) {
    const Matrix& x = t.value(ia);
    t.accumulate_expr(ia, Matrix::Constant(x.rows(), x.cols(), t.grad(self)(0, 0)));
  });
}

Var abs_sum(Var a) {
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().cwiseAbs().sum();
  return tape_of(a).push("abs_sum", std::move(out), {a}, [ia](Tape& t, int self) {
    // Subgradient 0 at exactly zero.
    t.accumulate_expr(ia, t.value(ia).array().sign() * t.grad(self)(0, 0));
  });
}

Var normalize_rows(Var a, const Eigen::RowVectorXd& fallback) {
  const Matrix& av = a.value();
  if (fallback.size() != av.cols()) {
    throw ShapeError(fmt::format("normalize_rows: fallback has {} entries for {}",
                                 fallback.size(), shape_of(av)));
  }
  const Eigen::RowVectorXd fb = fallback.normalized();
  Matrix out(av.rows(), av.cols());
  auto norms = std::make_shared<Eigen::VectorXd>(av.rows());
  for (Eigen::Index r = 0; r < av.rows(); ++r) {
    const double n = av.row(r).norm();
    (*norms)(r) = n;
    out.row(r) = n > 0.0 ? Eigen::RowVectorXd(av.row(r) / n) : fb;
  }
  const int ia = a.id();
  return tape_of(a).push("normalize_rows", std::move(out), {a}, [ia, norms](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    Matrix ga = Matrix::Zero(g.rows(), g.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const double n = (*norms)(r);
      if (n <= 0.0) continue;
      ga.row(r) = (g.row(r) - y.row(r) * y.row(r).dot(g.row(r))) / n;
    }
    t.accumulate(ia, ga);
  });
}

Var linear(Var x, Var weight, Var bias) {
  if (bias.rows() != 1 || bias.cols() != weight.cols()) {
    shape_error("linear", weight.value(), bias.value());
  }
  return add(matmul(x, weight), bias);
}

namespace {

// Partial derivatives of the unit-quaternion rotation formula with respect
// to w, x, y, z.
std::array<Eigen::Matrix3d, 4> rotation_partials(double w, double x, double y, double z) {
  std::array<Eigen::Matrix3d, 4> d;
  d[0] << 0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0;
  d[1] << 0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x;
  d[2] << -4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y;
  d[3] << -4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0;
  return d;
}

Eigen::Matrix3d rotation_formula(double w, double x, double y, double z) {
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

}  // namespace

Var rigid_points(Var quat, Var pos, const Matrix& points) {
  const Matrix& qv = quat.value();
  const Matrix& pv = pos.value();
  if (qv.cols() != 4 || pv.cols() != 3 || qv.rows() != pv.rows()) {
    shape_error("rigid_points", qv, pv);
  }
  if (points.rows() < 1 || points.cols() != 3) {
    throw ShapeError(fmt::format("rigid_points: points must be k x 3, got {}", shape_of(points)));
  }
  const Eigen::Index k = points.rows();
  const Eigen::Index batch = qv.rows();
  Matrix out(batch, 3 * k);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Eigen::Matrix3d r = rotation_formula(qv(b, 0), qv(b, 1), qv(b, 2), qv(b, 3));
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Vector3d c = points.row(i).transpose();
      out.block(b, 3 * i, 1, 3) = (r * c + pv.row(b).transpose()).transpose();
    }
  }
  const int iq = quat.id(), ip = pos.id();
  return tape_of(quat).push(
      "rigid_points", std::move(out), {quat, pos}, [iq, ip, points](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        const Matrix& q = t.value(iq);
        Matrix gq(g.rows(), 4);
        Matrix gp(g.rows(), 3);
        for (Eigen::Index b = 0; b < g.rows(); ++b) {
          // s = sum_i g_i c_i^T, so dL/dq_j = <dR/dq_j, s>.
          Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
          Eigen::RowVector3d gsum = Eigen::RowVector3d::Zero();
          for (Eigen::Index i = 0; i < points.rows(); ++i) {
            const Eigen::RowVector3d gi = g.block(b, 3 * i, 1, 3);
            s += gi.transpose() * points.row(i);
            gsum += gi;
          }
          const auto d = rotation_partials(q(b, 0), q(b, 1), q(b, 2), q(b, 3));
          for (int j = 0; j < 4; ++j) gq(b, j) = d[j].cwiseProduct(s).sum();
          gp.row(b) = gsum;
        }
        if (t.requires_grad(iq)) t.accumulate(iq, gq);
        if (t.requires_grad(ip)) t.accumulate(ip, gp);
      });
}

}  // namespace vcgs::nn
