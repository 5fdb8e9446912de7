#include "vcgs/nn/tape.h"

#include <fmt/core.h>

#include "vcgs/common/error.h"
#include "vcgs/nn/params.h"

namespace vcgs::nn {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw InvariantError("use of an unbound Var");
  return tape_->value(id_);
}

const Matrix& Var::grad() const {
  if (tape_ == nullptr) throw InvariantError("use of an unbound Var");
  return tape_->grad(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError(fmt::format("expected a 1x1 value, got {}x{}", v.rows(), v.cols()));
  }
  return v(0, 0);
}

bool Var::requires_grad() const {
  if (tape_ == nullptr) throw InvariantError("use of an unbound Var");
  return tape_->requires_grad(id_);
}

int Tape::add_node(Matrix value, bool requires_grad) {
  if (consumed_) throw InvariantError("tape already consumed by backward(); call clear()");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::constant(Matrix value) { return {this, add_node(std::move(value), false)}; }

Var Tape::variable(Matrix value) { return {this, add_node(std::move(value), true)}; }

Var Tape::parameter(ParamStore& store, const std::string& name) {
  const int id = add_node(store.at(name).value, true);
  bindings_.push_back({id, &store, name});
  return {this, id};
}

Var Tape::push(const char* op, Matrix value, const std::vector<Var>& inputs,
               Backward backward) {
  if (!value.allFinite()) {
    throw TrainingDiverged(fmt::format("non-finite output from {}", op));
  }
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) throw InvariantError(fmt::format("{}: input from another tape", op));
    needs = needs || requires_grad(in.id());
  }
  const int id = add_node(std::move(value), needs);
  if (needs) nodes_.back().backward = std::move(backward);
  return {this, id};
}

const Matrix& Tape::grad(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0 && n.value.size() != 0) {
    auto& mut = const_cast<Node&>(n);
    mut.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::accumulate(int id, const Matrix& g) { accumulate_expr(id, g); }

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw InvariantError("backward: loss from another tape");
  if (consumed_) throw InvariantError("backward: tape already consumed");
  const Matrix& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw InvariantError(
        fmt::format("backward: loss must be 1x1, got {}x{}", lv.rows(), lv.cols()));
  }
  if (nodes_.empty()) throw InvariantError("backward: empty tape");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  accumulate(loss.id(), Matrix::Ones(1, 1));
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, id);
  }
  for (const Binding& b : bindings_) {
    const Matrix& g = grad(b.id);
    Parameter& p = b.store->at(b.name);
    if (p.grad.size() == 0) {
      p.grad = g;
    } else {
      p.grad += g;
    }
  }
  for (Node& n : nodes_) n.backward = nullptr;
  consumed_ = true;
}

void Tape::clear() {
  nodes_.clear();
  bindings_.clear();
  consumed_ = false;
}

}  // namespace vcgs::nn
