#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stgcast/autodiff.hpp"
#include "stgcast/graph.hpp"
#include "stgcast/matrix.hpp"

namespace stgcast::nn {

struct ModelDims {
  std::size_t d = 0;
  std::size_t t_in = 36;
  std::size_t t_out = 12;
  std::size_t hidden = 64;
  std::size_t gc_hidden = 16;
  std::size_t gc_out = 8;
};

struct ParamRef {
  std::string name;
  DenseMatrix* value;
  bool is_weight;
};

struct ConstParamRef {
  std::string name;
  const DenseMatrix* value;
  bool is_weight;
};

// Two-layer graph convolution weights: node features -> gc_hidden -> gc_out.
struct GCParams {
  DenseMatrix w0;
  DenseMatrix w1;
};

// GRU gates over [input, h]; weights (F + H) x H, biases 1 x H.
struct GRUParams {
  DenseMatrix w_u, w_r, w_c;
  DenseMatrix b_u, b_r, b_c;
};

struct LSTMParams {
  DenseMatrix w_i, w_f, w_o, w_c;
  DenseMatrix b_i, b_f, b_o, b_c;
};

struct GCVars {
  ad::Var w0, w1;
};

struct GRUVars {
  ad::Var w_u, w_r, w_c, b_u, b_r, b_c;
};

struct LSTMVars {
  ad::Var w_i, w_f, w_o, w_c, b_i, b_f, b_o, b_c;
};

/// relu(A x w0) then A L w1, with A applied per block of A.rows() node rows,
/// so x may stack several samples: (B*D) x F_in -> (B*D) x F_gc.
ad::Var gc_forward(const ad::Var& x, const std::shared_ptr<const DenseMatrix>& a_hat, const GCVars& p);

/// u = sig([g,h]Wu+bu); r = sig([g,h]Wr+br); c = tanh([g, r*h]Wc+bc);
/// h' = (1-u)*c + u*h.
ad::Var gru_step(const ad::Var& g, const ad::Var& h_prev, const GRUVars& p);

struct LSTMState {
  ad::Var h;
  ad::Var c;
};

LSTMState lstm_step(const ad::Var& x, const ad::Var& h_prev, const ad::Var& c_prev, const LSTMVars& p);

/// Common surface of the trainable forecasters: parameters in a fixed order
/// and a batched forward on a tape.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  virtual std::string_view kind() const = 0;
  virtual const ModelDims& dims() const = 0;
  virtual std::vector<ParamRef> parameters() = 0;
  std::vector<ConstParamRef> parameters() const;

  /// batch (B, t_in, d) -> B x (t_out * d), each row a row-major t_out x d
  /// forecast. `params` are tape leaves in parameters() order.
  virtual ad::Var forward(ad::Tape& tape, std::span<const ad::Var> params, const Tensor3& batch) const = 0;

  virtual std::unique_ptr<SequenceModel> clone() const = 0;
};

std::vector<ad::Var> bind_parameters(ad::Tape& tape, const SequenceModel& model);

/// Inference over a batch, chunked; output (n, t_out, d).
Tensor3 model_forward(const SequenceModel& model, const Tensor3& batch, std::size_t chunk = 64);

/// Frames t of every sample stacked as a (B*d) x 1 column.
DenseMatrix frame_column(const Tensor3& batch, std::size_t t);

/// Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
double glorot_limit(std::size_t fan_in, std::size_t fan_out);

/// Graph-convolution encoder/decoder with GRU cells and a sigmoid head.
///
/// Encoder: every input frame goes through the encoder GC and GRU, per-node
/// hidden state (d x H) starting at zero. Decoder: starts from the encoder
/// state, fed the last observed frame, then its own previous prediction.
/// Each decoder state is mean-pooled over nodes to 1 x H; the pooled states
/// are flattened and passed through the dense sigmoid head. The head is
/// block lower-triangular (frame j reads pooled states 1..j only) so the
/// frame fed back at step j+1 is exactly the emitted prediction for j.
class GCGRUModel final : public SequenceModel {
 public:
  GCGRUModel(ModelDims dims, graph::NormalizedAdjacency a_hat);

  /// All parameters zero.
  static GCGRUModel zeros(ModelDims dims, graph::NormalizedAdjacency a_hat);
  /// Glorot-uniform weights, zero biases, seeded.
  static GCGRUModel initialize(ModelDims dims, graph::NormalizedAdjacency a_hat, std::uint64_t seed);

  std::string_view kind() const override { return "gcgru"; }
  const ModelDims& dims() const override { return dims_; }
  using SequenceModel::parameters;
  std::vector<ParamRef> parameters() override;
  ad::Var forward(ad::Tape& tape, std::span<const ad::Var> params, const Tensor3& batch) const override;
  std::unique_ptr<SequenceModel> clone() const override { return std::make_unique<GCGRUModel>(*this); }

  struct Vars {
    GCVars enc_gc, dec_gc;
    GRUVars enc_gru, dec_gru;
    ad::Var w_out, b_out;
  };
  Vars unpack(std::span<const ad::Var> params) const;

  /// Final encoder state, (B*d) x H.
  ad::Var encode(ad::Tape& tape, const Vars& v, const Tensor3& batch) const;
  /// B x (t_out*d) sigmoid forecasts from an encoder state and the last
  /// observed frame ((B*d) x 1).
  ad::Var decode(const Vars& v, const ad::Var& h_enc, const ad::Var& last_frame) const;

  graph::NormalizedAdjacency a_hat;
  GCParams enc_gc, dec_gc;
  GRUParams enc_gru, dec_gru;
  DenseMatrix w_out;
  DenseMatrix b_out;

 private:
  ModelDims dims_;
};

/// Plain LSTM encoder/decoder over whole frames (B x d inputs) with a linear
/// causal head of the same layout as GCGRUModel's.
class LSTMModel final : public SequenceModel {
 public:
  explicit LSTMModel(ModelDims dims);

  static LSTMModel zeros(ModelDims dims);
  static LSTMModel initialize(ModelDims dims, std::uint64_t seed);

  std::string_view kind() const override { return "lstm"; }
  const ModelDims& dims() const override { return dims_; }
  using SequenceModel::parameters;
  std::vector<ParamRef> parameters() override;
  ad::Var forward(ad::Tape& tape, std::span<const ad::Var> params, const Tensor3& batch) const override;
  std::unique_ptr<SequenceModel> clone() const override { return std::make_unique<LSTMModel>(*this); }

  LSTMParams cell;
  DenseMatrix w_out;
  DenseMatrix b_out;

 private:
  ModelDims dims_;
};

}  // namespace stgcast::nn
