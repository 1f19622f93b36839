#include "stgcast/autodiff.hpp"

#include <cmath>

#include "stgcast/error.hpp"
#include "stgcast/simd/kernels.hpp"

namespace stgcast::ad {

namespace {

const simd::KernelTable& K() { return simd::active_kernels(); }

Tape& same_tape(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw ContractError("tensor", "operation on an unbound Var");
  if (&a.tape() != &b.tape()) throw ContractError("tensor", "operands live on different tapes");
  return a.tape();
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError("tensor", std::string(op) + " shape mismatch " + a.value().shape_string() + " vs " +
                                   b.value().shape_string());
  }
}

}  // namespace

std::string_view rule_name(Rule r) {
  switch (r) {
    case Rule::leaf: return "leaf";
    case Rule::matmul: return "matmul";
    case Rule::add: return "add";
    case Rule::sub: return "sub";
    case Rule::hadamard: return "hadamard";
    case Rule::scale: return "scale";
    case Rule::affine: return "affine";
    case Rule::add_row_bias: return "add_row_bias";
    case Rule::sigmoid: return "sigmoid";
    case Rule::tanh: return "tanh";
    case Rule::relu: return "relu";
    case Rule::concat_cols: return "concat_cols";
    case Rule::slice: return "slice";
    case Rule::reshape: return "reshape";
    case Rule::graph_propagate: return "graph_propagate";
    case Rule::block_mean_pool: return "block_mean_pool";
    case Rule::sum: return "sum";
    case Rule::mean_squared_error: return "mean_squared_error";
    case Rule::abs_sum: return "abs_sum";
  }
  return "unknown";
}

const DenseMatrix& Var::value() const { return tape_->value(id_); }
const DenseMatrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::leaf(DenseMatrix value) { return push(std::move(value), Rule::leaf, {}, nullptr); }

Var Tape::push(DenseMatrix value, Rule rule, std::vector<std::size_t> parents, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.rule = rule;
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(const Var& loss) {
  if (&loss.tape() != this) throw ContractError("tensor", "loss belongs to a different tape");
  const DenseMatrix& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("tensor", "backward needs a scalar (1x1) loss, got " + lv.shape_string());
  }

  // Run this pass into zeroed buffers, then fold earlier gradients back in, so
  // a second call adds exactly one more d(loss)/d(node) per node.
  for (auto& n : nodes_) ensure_grad(n);
  std::vector<DenseMatrix> previous;
  if (grads_dirty_) {
    previous.reserve(nodes_.size());
    for (auto& n : nodes_) {
      previous.push_back(n.grad);
      n.grad.fill(0.0);
    }
  }

  nodes_[loss.id()].grad(0, 0) = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward) continue;
    n.backward(*this, i);
    if (observer_) observer_(*this, i);
  }

  if (!previous.empty()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      K().axpy(1.0, previous[i].data(), nodes_[i].grad.data(), previous[i].size());
    }
  }
  grads_dirty_ = true;
}

void Tape::ensure_grad(const Node& n) {
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = DenseMatrix(n.value.rows(), n.value.cols());
  }
}

const DenseMatrix& Tape::grad(std::size_t id) const {
  ensure_grad(nodes_[id]);
  return nodes_[id].grad;
}

DenseMatrix& Tape::mutable_grad(std::size_t id) {
  ensure_grad(nodes_[id]);
  return nodes_[id].grad;
}

void Tape::reset_grads() {
  for (auto& n : nodes_) n.grad = DenseMatrix();
  grads_dirty_ = false;
}

Var matmul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  const DenseMatrix& av = a.value();
  const DenseMatrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("tensor", "matmul shape mismatch " + av.shape_string() + " * " + bv.shape_string());
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  DenseMatrix out(m, n);
  K().gemm_nn(av.data(), bv.data(), out.data(), m, k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), Rule::matmul, {ia, ib}, [ia, ib, m, k, n](Tape& tp, std::size_t self) {
    const DenseMatrix& g = tp.grad(self);
    // dA += G * B^T ; dB += A^T * G
    K().gemm_nt(g.data(), tp.value(ib).data(), tp.mutable_grad(ia).data(), m, n, k);
    K().gemm_tn(tp.value(ia).data(), g.data(), tp.mutable_grad(ib).data(), k, m, n);
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape("add", a, b);
  DenseMatrix out(a.rows(), a.cols());
  K().add(a.value().data(), b.value().data(), out.data(), out.size());
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), Rule::add, {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const DenseMatrix& g = tp.grad(self);
    K().axpy(1.0, g.data(), tp.mutable_grad(ia).data(), g.size());
    K().axpy(1.0, g.data(), tp.mutable_grad(ib).data(), g.size());
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape("sub", a, b);
  DenseMatrix out(a.rows(), a.cols());
  K().sub(a.value().data(), b.value().data(), out.data(), out.size());
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), Rule::sub, {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const DenseMatrix& g = tp.grad(self);
    K().axpy(1.0, g.data(), tp.mutable_grad(ia).data(), g.size());
    K().axpy(-1.0, g.data(), tp.mutable_grad(ib).data(), g.size());
  });
}

Var hadamard(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape("hadamard", a, b);
  DenseMatrix out(a.rows(), a.cols());
  K().mul(a.value().data(), b.value().data(), out.data(), out.size());
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), Rule::hadamard, {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const DenseMatrix& g = tp.grad(self);
    K().mul_acc(g.data(), tp.value(ib).data(), tp.mutable_grad(ia).data(), g.size());
    K().mul_acc(g.data(), tp.value(ia).data(), tp.mutable_grad(ib).data(), g.size());
  });
}

Var scale(const Var& a, double alpha) {
  DenseMatrix out(a.rows(), a.cols());
  K().scale(a.value().data(), alpha, out.data(), out.size());
  const std::size_t ia = a.id();
  return a.tape().push(std::move(out), Rule::scale, {ia}, [ia, alpha](Tape& tp, std::size_t self) {
    const DenseMatrix& g = tp.grad(self);
    K().axpy(alpha, g.data(), tp.mutable_grad(ia).data(), g.size());
  });
}

Var affine(const Var& a, double alpha, double beta) {
  DenseMatrix out(a.rows(), a.cols());
  const auto in = a.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = alpha * in[i] + beta;
  const std::size_t ia = a.id();
  return a.tape().push(std::move(out), Rule::affine, {ia}, [ia, alpha](Tape& tp, std::size_t self) {
    const DenseMatrix& g = tp.grad(self);
    K().axpy(alpha, g.data(), tp.mutable_grad(ia).data(), g.size());
  });
}

Var add_row_bias(const Var& x, const Var& bias) {
  Tape& t = same_tape(x, bias);
  const DenseMatrix& xv = x.value();
  const DenseMatrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw ShapeError("tensor", "bias " + bv.shape_string() + " does not broadcast over " + xv.shape_string());
  }
  DenseMatrix out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    K().add(xv.row(r).data(), bv.data(), out.row(r).data(), xv.cols());
  }
  const std::size_t ix = x.id(), ib = bias.id();
  return t.push(std::move(out), Rule::add_row_bias, {ix, ib}, [ix, ib](Tape& tp, std::size_t self) {
    const DenseMatrix& g = tp.grad(self);
    K().axpy(1.0, g.data(), tp.mutable_grad(ix).data(), g.size());
    DenseMatrix& gb = tp.mutable_grad(ib);
    for (std::size_t r = 0; r < g.rows(); ++r) K().axpy(1.0, g.row(r).data(), gb.data(), g.cols());
  });
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var sigmoid(const Var& a) {
  DenseMatrix out(a.rows(), a.cols());
  const auto in = a.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = sigmoid_value(in[i]);
  const std::size_t ia = a.id();
  return a.tape().push(std::move(out), Rule::sigmoid, {ia}, [ia](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self).values();
    const auto y = tp.value(self).values();
    auto ga = tp.mutable_grad(ia).values();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (y[i] * (1.0 - y[i]));
  });
}

Var tanh(const Var& a) {
  DenseMatrix out(a.rows(), a.cols());
  const auto in = a.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = std::tanh(in[i]);
  const std::size_t ia = a.id();
  return a.tape().push(std::move(out), Rule::tanh, {ia}, [ia](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self).values();
    const auto y = tp.value(self).values();
    auto ga = tp.mutable_grad(ia).values();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var relu(const Var& a) {
  DenseMatrix out(a.rows(), a.cols());
  const auto in = a.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = in[i] > 0.0 ? in[i] : 0.0;
  const std::size_t ia = a.id();
  return a.tape().push(std::move(out), Rule::relu, {ia}, [ia](Tape& tp, std::size_t self) {
    const auto g = tp.grad(self).values();
    const auto x = tp.value(ia).values();
    auto ga = tp.mutable_grad(ia).values();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  });
}

Var concat_cols(const Var& a, const Var& b) {
  const Var parts[] = {a, b};
  return concat_cols(parts);
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("tensor", "concat_cols of zero operands");
  Tape& t = parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    same_tape(parts.front(), p);
    if (p.rows() != rows) {
      throw ShapeError("tensor", "concat_cols row mismatch " + parts.front().value().shape_string() + " vs " +
                                     p.value().shape_string());
    }
    cols += p.cols();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  DenseMatrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double* dst = out.row(r).data();
    for (const Var& p : parts) {
      auto src = p.value().row(r);
      std::copy(src.begin(), src.end(), dst);
      dst += src.size();
    }
  }
  auto parents = ids;
  return t.push(std::move(out), Rule::concat_cols, std::move(parents),
                [ids, widths, rows, cols](Tape& tp, std::size_t self) {
                  const DenseMatrix& g = tp.grad(self);
                  std::size_t offset = 0;
                  for (std::size_t p = 0; p < ids.size(); ++p) {
                    DenseMatrix& gp = tp.mutable_grad(ids[p]);
                    for (std::size_t r = 0; r < rows; ++r) {
                      K().axpy(1.0, g.data() + r * cols + offset, gp.row(r).data(), widths[p]);
                    }
                    offset += widths[p];
                  }
                });
}

Var slice(const Var& a, std::size_t row0, std::size_t nrows, std::size_t col0, std::size_t ncols) {
  const DenseMatrix& av = a.value();
  if (row0 + nrows > av.rows() || col0 + ncols > av.cols()) {
    throw ShapeError("tensor", "slice [" + std::to_string(row0) + "+" + std::to_string(nrows) + ", " +
                                   std::to_string(col0) + "+" + std::to_string(ncols) + "] out of " +
                                   av.shape_string());
  }
  DenseMatrix out(nrows, ncols);
  for (std::size_t r = 0; r < nrows; ++r) {
    const double* src = av.data() + (row0 + r) * av.cols() + col0;
    std::copy(src, src + ncols, out.row(r).data());
  }
  const std::size_t ia = a.id();
  const std::size_t stride = av.cols();
  return a.tape().push(std::move(out), Rule::slice, {ia},
                       [ia, row0, nrows, col0, ncols, stride](Tape& tp, std::size_t self) {
                         const DenseMatrix& g = tp.grad(self);
                         DenseMatrix& ga = tp.mutable_grad(ia);
                         for (std::size_t r = 0; r < nrows; ++r) {
                           K().axpy(1.0, g.row(r).data(), ga.data() + (row0 + r) * stride + col0, ncols);
                         }
                       });
}

Var reshape(const Var& a, std::size_t rows, std::size_t cols) {
  if (rows * cols != a.value().size()) {
    throw ShapeError("tensor", "cannot reshape " + a.value().shape_string() + " to " + std::to_string(rows) + "x" +
                                   std::to_string(cols));
  }
  auto v = a.value().values();
  DenseMatrix out(rows, cols, std::vector<double>(v.begin(), v.end()));
  const std::size_t ia = a.id();
  return a.tape().push(std::move(out), Rule::reshape, {ia}, [ia](Tape& tp, std::size_t self) {
    const DenseMatrix& g = tp.grad(self);
    K().axpy(1.0, g.data(), tp.mutable_grad(ia).data(), g.size());
  });
}

Var graph_propagate(std::shared_ptr<const DenseMatrix> adj, const Var& x) {
  if (!adj || adj->rows() != adj->cols()) throw ShapeError("tensor", "graph_propagate needs a square matrix");
  const std::size_t d = adj->rows();
  const DenseMatrix& xv = x.value();
  if (d == 0 || xv.rows() % d != 0) {
    throw ShapeError("tensor", "graph_propagate: " + xv.shape_string() + " rows are not a multiple of " +
                                   std::to_string(d));
  }
  const std::size_t blocks = xv.rows() / d;
  const std::size_t f = xv.cols();
  DenseMatrix out(xv.rows(), f);
  for (std::size_t b = 0; b < blocks; ++b) {
    K().gemm_nn(adj->data(), xv.data() + b * d * f, out.data() + b * d * f, d, d, f);
  }
  const std::size_t ix = x.id();
  return x.tape().push(std::move(out), Rule::graph_propagate, {ix},
                       [adj = std::move(adj), ix, blocks, d, f](Tape& tp, std::size_t self) {
                         const DenseMatrix& g = tp.grad(self);
                         DenseMatrix& gx = tp.mutable_grad(ix);
                         for (std::size_t b = 0; b < blocks; ++b) {
                           K().gemm_tn(adj->data(), g.data() + b * d * f, gx.data() + b * d * f, d, d, f);
                         }
                       });
}

Var block_mean_pool(const Var& x, std::size_t block_rows) {
  const DenseMatrix& xv = x.value();
  if (block_rows == 0 || xv.rows() % block_rows != 0) {
    throw ShapeError("tensor", "block_mean_pool: " + xv.shape_string() + " rows are not a multiple of " +
                                   std::to_string(block_rows));
  }
  const std::size_t blocks = xv.rows() / block_rows;
  const std::size_t c = xv.cols();
  const double inv = 1.0 / static_cast<double>(block_rows);
  DenseMatrix out(blocks, c);
  for (std::size_t b = 0; b < blocks; ++b) {
    double* dst = out.row(b).data();
    for (std::size_t r = 0; r < block_rows; ++r) K().axpy(1.0, xv.row(b * block_rows + r).data(), dst, c);
    K().scale(dst, inv, dst, c);
  }
  const std::size_t ix = x.id();
  return x.tape().push(std::move(out), Rule::block_mean_pool, {ix},
                       [ix, blocks, block_rows, c, inv](Tape& tp, std::size_t self) {
                         const DenseMatrix& g = tp.grad(self);
                         DenseMatrix& gx = tp.mutable_grad(ix);
                         for (std::size_t b = 0; b < blocks; ++b)
                           for (std::size_t r = 0; r < block_rows; ++r)
                             K().axpy(inv, g.row(b).data(), gx.row(b * block_rows + r).data(), c);
                       });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return a.tape().push(DenseMatrix(1, 1, s), Rule::sum, {ia}, [ia](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)(0, 0);
    for (double& v : tp.mutable_grad(ia).values()) v += g;
  });
}

Var mean_squared_error(const Var& pred, const DenseMatrix& target) {
  const DenseMatrix& pv = pred.value();
  if (!pv.same_shape(target)) {
    throw ShapeError("tensor", "mse shape mismatch " + pv.shape_string() + " vs " + target.shape_string());
  }
  if (pv.empty()) throw ContractError("tensor", "mse over zero elements");
  DenseMatrix diff(pv.rows(), pv.cols());
  K().sub(pv.data(), target.data(), diff.data(), diff.size());
  double s = 0.0;
  for (double e : diff.values()) s += e * e;
  const double n = static_cast<double>(diff.size());
  const std::size_t ip = pred.id();
  return pred.tape().push(DenseMatrix(1, 1, s / n), Rule::mean_squared_error, {ip},
                          [ip, diff = std::move(diff), n](Tape& tp, std::size_t self) {
                            const double g = tp.grad(self)(0, 0);
                            K().axpy(2.0 * g / n, diff.data(), tp.mutable_grad(ip).data(), diff.size());
                          });
}

Var abs_sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += std::abs(v);
  const std::size_t ia = a.id();
  return a.tape().push(DenseMatrix(1, 1, s), Rule::abs_sum, {ia}, [ia](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)(0, 0);
    const auto x = tp.value(ia).values();
    auto ga = tp.mutable_grad(ia).values();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > 0.0) ga[i] += g;
      else if (x[i] < 0.0) ga[i] -= g;
    }
  });
}

}  // namespace stgcast::ad
