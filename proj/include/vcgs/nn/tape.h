#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace vcgs::nn {

using Matrix = Eigen::MatrixXd;

class Tape;
class ParamStore;

/// Handle to one node of a tape: a dense float64 array with a gradient of the
/// same shape. Valid while its tape is alive and not cleared.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Gradient after Tape::backward; zeros if the node does not require one.
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;
  bool requires_grad() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape. Ops append nodes; backward() walks them in reverse.
/// Single-owner: not safe for concurrent use.
class Tape {
 public:
  /// Accumulates upstream gradient into the node's inputs.
  using Backward = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf that receives a gradient.
  Var variable(Matrix value);
  /// Leaf holding a copy of a stored parameter; backward() adds its gradient
  /// into the store's gradient buffer.
  Var parameter(ParamStore& store, const std::string& name);

  /// Appends an op node. Throws TrainingDiverged if `value` is not finite.
  Var push(const char* op, Matrix value, const std::vector<Var>& inputs, Backward backward);

  /// Fills gradients of every node reachable from a 1x1 `loss`, flushes
  /// parameter gradients into their stores, then releases the backward
  /// closures. Values and gradients stay readable until clear().
  void backward(Var loss);
  void clear();
  std::size_t size() const { return nodes_.size(); }

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad(int id) const;
  bool requires_grad(int id) const {
    return nodes_[static_cast<std::size_t>(id)].requires_grad;
  }
  /// grad(id) += g, allocating on first use; no-op for constants.
  void accumulate(int id, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(int id, const Expr& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g.matrix();
    } else {
      n.grad.array() += g.array();
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };
  struct Binding {
    int id;
    ParamStore* store;
    std::string name;
  };

  int add_node(Matrix value, bool requires_grad);

  std::vector<Node> nodes_;
  std::vector<Binding> bindings_;
  bool consumed_ = false;
};

}  // namespace vcgs::nn
