#pragma once

// Define-by-run reverse-mode autodiff over DenseMatrix values.
//
// A Tape records every node created during one forward pass in creation
// order, which is a valid topological order because an op's parents always
// exist before the op. Var is a cheap handle (tape pointer + node index).
// The tape is single-writer; one training step owns one tape.

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "stgcast/matrix.hpp"

namespace stgcast::ad {

enum class Rule {
  leaf,
  matmul,
  add,
  sub,
  hadamard,
  scale,
  affine,
  add_row_bias,
  sigmoid,
  tanh,
  relu,
  concat_cols,
  slice,
  reshape,
  graph_propagate,
  block_mean_pool,
  sum,
  mean_squared_error,
  abs_sum,
};

std::string_view rule_name(Rule r);

class Tape;

class Var {
 public:
  Var() = default;

  const DenseMatrix& value() const;
  const DenseMatrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Called after each node's backward rule has pushed its contribution into
/// the parents' gradients. Used by diagnostics and sensitivity tests.
using BackwardObserver = std::function<void(Tape& tape, std::size_t node)>;

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(DenseMatrix value);
  Var push(DenseMatrix value, Rule rule, std::vector<std::size_t> parents, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and accumulates d(loss)/d(node) into every
  /// node's gradient. Calling twice without reset_grads() accumulates.
  void backward(const Var& loss);
  void reset_grads();

  std::size_t size() const noexcept { return nodes_.size(); }
  const DenseMatrix& value(std::size_t id) const { return nodes_[id].value; }
  const DenseMatrix& grad(std::size_t id) const;
  DenseMatrix& mutable_grad(std::size_t id);
  Rule rule(std::size_t id) const { return nodes_[id].rule; }
  const std::vector<std::size_t>& parents(std::size_t id) const { return nodes_[id].parents; }

  void set_backward_observer(BackwardObserver obs) { observer_ = std::move(obs); }

 private:
  struct Node {
    DenseMatrix value;
    mutable DenseMatrix grad;  // allocated on first use
    std::vector<std::size_t> parents;
    Rule rule = Rule::leaf;
    BackwardFn backward;
  };

  static void ensure_grad(const Node& n);

  std::deque<Node> nodes_;  // stable references across push
  BackwardObserver observer_;
  bool grads_dirty_ = false;
};

// Differentiable operations. Binary ops require both Vars on the same tape.
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double alpha);
/// alpha * a + beta, entrywise.
Var affine(const Var& a, double alpha, double beta);
/// x (r x c) plus a 1 x c bias broadcast over rows.
Var add_row_bias(const Var& x, const Var& bias);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var concat_cols(const Var& a, const Var& b);
Var concat_cols(std::span<const Var> parts);
Var slice(const Var& a, std::size_t row0, std::size_t nrows, std::size_t col0, std::size_t ncols);
/// Same row-major data viewed with a new shape.
Var reshape(const Var& a, std::size_t rows, std::size_t cols);
/// Applies a fixed square matrix independently to each consecutive block of
/// `adj.rows()` rows of x: out_block = adj * x_block.
Var graph_propagate(std::shared_ptr<const DenseMatrix> adj, const Var& x);
/// Mean over each consecutive block of `block_rows` rows: (B*block) x c -> B x c.
Var block_mean_pool(const Var& x, std::size_t block_rows);
Var sum(const Var& a);
/// mean((pred - target)^2) as a 1x1 Var; target is a constant.
Var mean_squared_error(const Var& pred, const DenseMatrix& target);
/// sum |a| with subgradient 0 at 0.
Var abs_sum(const Var& a);

double sigmoid_value(double x);

}  // namespace stgcast::ad
