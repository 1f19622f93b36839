#include "stgcast/nn.hpp"

#include <cmath>
#include <random>

#include "stgcast/error.hpp"
#include "stgcast/rng.hpp"

namespace stgcast::nn {

namespace {

constexpr std::size_t kFeatureIn = 1;

DenseMatrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-glorot_limit(rows, cols), glorot_limit(rows, cols));
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

GRUParams gru_zeros(std::size_t in, std::size_t h) {
  return GRUParams{DenseMatrix(in + h, h), DenseMatrix(in + h, h), DenseMatrix(in + h, h),
                   DenseMatrix(1, h),      DenseMatrix(1, h),      DenseMatrix(1, h)};
}

GRUParams gru_init(std::size_t in, std::size_t h, std::mt19937_64& rng) {
  GRUParams p = gru_zeros(in, h);
  p.w_u = glorot(in + h, h, rng);
  p.w_r = glorot(in + h, h, rng);
  p.w_c = glorot(in + h, h, rng);
  return p;
}

GCParams gc_zeros(const ModelDims& d) {
  return GCParams{DenseMatrix(kFeatureIn, d.gc_hidden), DenseMatrix(d.gc_hidden, d.gc_out)};
}

GCParams gc_init(const ModelDims& d, std::mt19937_64& rng) {
  return GCParams{glorot(kFeatureIn, d.gc_hidden, rng), glorot(d.gc_hidden, d.gc_out, rng)};
}

// Zeroes head blocks that read pooled states from later decoder steps.
void mask_future_blocks(DenseMatrix& w_out, const ModelDims& d) {
  for (std::size_t s = 0; s < d.t_out; ++s)
    for (std::size_t j = 0; j < s; ++j)
      for (std::size_t r = 0; r < d.hidden; ++r)
        for (std::size_t c = 0; c < d.d; ++c) w_out(s * d.hidden + r, j * d.d + c) = 0.0;
}

void check_dims(const ModelDims& d) {
  if (d.d == 0 || d.t_in == 0 || d.t_out == 0 || d.hidden == 0 || d.gc_hidden == 0 || d.gc_out == 0) {
    throw ContractError("nn", "model dimensions must all be positive");
  }
}

void check_batch(const ModelDims& d, const Tensor3& batch) {
  if (batch.t() != d.t_in || batch.d() != d.d) {
    throw ShapeError("nn", "batch " + batch.shape_string() + " does not match model (t_in=" + std::to_string(d.t_in) +
                               ", d=" + std::to_string(d.d) + ")");
  }
}

// Frame j of the causal head: reads pooled states 0..j.
ad::Var head_frame(std::span<const ad::Var> pooled, std::size_t j, const ad::Var& w_out, const ad::Var& b_out,
                   std::size_t hidden, std::size_t d) {
  const ad::Var flat = j == 0 ? pooled[0] : ad::concat_cols(pooled.subspan(0, j + 1));
  const ad::Var w = ad::slice(w_out, 0, (j + 1) * hidden, j * d, d);
  const ad::Var b = ad::slice(b_out, 0, 1, j * d, d);
  return ad::add_row_bias(ad::matmul(flat, w), b);
}

}  // namespace

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

ad::Var gc_forward(const ad::Var& x, const std::shared_ptr<const DenseMatrix>& a_hat, const GCVars& p) {
  const ad::Var layer1 = ad::relu(ad::matmul(ad::graph_propagate(a_hat, x), p.w0));
  return ad::matmul(ad::graph_propagate(a_hat, layer1), p.w1);
}

ad::Var gru_step(const ad::Var& g, const ad::Var& h_prev, const GRUVars& p) {
  if (g.rows() != h_prev.rows()) {
    throw ShapeError("nn", "gru_step row mismatch " + g.value().shape_string() + " vs " +
                               h_prev.value().shape_string());
  }
  const ad::Var gh = ad::concat_cols(g, h_prev);
  const ad::Var u = ad::sigmoid(ad::add_row_bias(ad::matmul(gh, p.w_u), p.b_u));
  const ad::Var r = ad::sigmoid(ad::add_row_bias(ad::matmul(gh, p.w_r), p.b_r));
  const ad::Var c = ad::tanh(ad::add_row_bias(ad::matmul(ad::concat_cols(g, ad::hadamard(r, h_prev)), p.w_c), p.b_c));
  return ad::add(ad::hadamard(ad::affine(u, -1.0, 1.0), c), ad::hadamard(u, h_prev));
}

LSTMState lstm_step(const ad::Var& x, const ad::Var& h_prev, const ad::Var& c_prev, const LSTMVars& p) {
  if (x.rows() != h_prev.rows() || h_prev.rows() != c_prev.rows()) {
    throw ShapeError("nn", "lstm_step row mismatch");
  }
  const ad::Var xh = ad::concat_cols(x, h_prev);
  auto gate = [&xh](const ad::Var& w, const ad::Var& b) { return ad::add_row_bias(ad::matmul(xh, w), b); };
  const ad::Var i = ad::sigmoid(gate(p.w_i, p.b_i));
  const ad::Var f = ad::sigmoid(gate(p.w_f, p.b_f));
  const ad::Var o = ad::sigmoid(gate(p.w_o, p.b_o));
  const ad::Var cand = ad::tanh(gate(p.w_c, p.b_c));
  const ad::Var c = ad::add(ad::hadamard(f, c_prev), ad::hadamard(i, cand));
  const ad::Var h = ad::hadamard(o, ad::tanh(c));
  return {h, c};
}

std::vector<ConstParamRef> SequenceModel::parameters() const {
  std::vector<ConstParamRef> out;
  for (auto& p : const_cast<SequenceModel*>(this)->parameters()) out.push_back({p.name, p.value, p.is_weight});
  return out;
}

std::vector<ad::Var> bind_parameters(ad::Tape& tape, const SequenceModel& model) {
  std::vector<ad::Var> vars;
  for (const auto& p : model.parameters()) vars.push_back(tape.leaf(*p.value));
  return vars;
}

DenseMatrix frame_column(const Tensor3& batch, std::size_t t) {
  DenseMatrix col(batch.n() * batch.d(), 1);
  for (std::size_t b = 0; b < batch.n(); ++b)
    for (std::size_t k = 0; k < batch.d(); ++k) col(b * batch.d() + k, 0) = batch(b, t, k);
  return col;
}

Tensor3 model_forward(const SequenceModel& model, const Tensor3& batch, std::size_t chunk) {
  const ModelDims& d = model.dims();
  check_batch(d, batch);
  Tensor3 out(batch.n(), d.t_out, d.d);
  if (chunk == 0) chunk = 1;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < batch.n(); start += chunk) {
    const std::size_t len = std::min(chunk, batch.n() - start);
    idx.resize(len);
    for (std::size_t i = 0; i < len; ++i) idx[i] = start + i;
    const Tensor3 part = batch.gather(idx);
    ad::Tape tape;
    const auto params = bind_parameters(tape, model);
    const ad::Var pred = model.forward(tape, params, part);
    const auto v = pred.value().values();
    std::copy(v.begin(), v.end(), out.slice_span(start).begin());
  }
  return out;
}

// ---- GCGRUModel ----

GCGRUModel::GCGRUModel(ModelDims dims, graph::NormalizedAdjacency adj) : a_hat(std::move(adj)), dims_(dims) {
  check_dims(dims_);
  if (a_hat.size() != dims_.d) {
    throw ShapeError("nn", "adjacency side " + std::to_string(a_hat.size()) + " does not match d=" +
                               std::to_string(dims_.d));
  }
  enc_gc = gc_zeros(dims_);
  dec_gc = gc_zeros(dims_);
  enc_gru = gru_zeros(dims_.gc_out, dims_.hidden);
  dec_gru = gru_zeros(dims_.gc_out, dims_.hidden);
  w_out = DenseMatrix(dims_.t_out * dims_.hidden, dims_.t_out * dims_.d);
  b_out = DenseMatrix(1, dims_.t_out * dims_.d);
}

GCGRUModel GCGRUModel::zeros(ModelDims dims, graph::NormalizedAdjacency a_hat) {
  return GCGRUModel(dims, std::move(a_hat));
}

GCGRUModel GCGRUModel::initialize(ModelDims dims, graph::NormalizedAdjacency a_hat, std::uint64_t seed) {
  GCGRUModel m(dims, std::move(a_hat));
  auto rng = SeedStreams(seed).stream("init");
  m.enc_gc = gc_init(dims, rng);
  m.enc_gru = gru_init(dims.gc_out, dims.hidden, rng);
  m.dec_gc = gc_init(dims, rng);
  m.dec_gru = gru_init(dims.gc_out, dims.hidden, rng);
  m.w_out = glorot(dims.t_out * dims.hidden, dims.t_out * dims.d, rng);
  mask_future_blocks(m.w_out, dims);
  return m;
}

std::vector<ParamRef> GCGRUModel::parameters() {
  return {
      {"enc_gc.w0", &enc_gc.w0, true},    {"enc_gc.w1", &enc_gc.w1, true},    {"enc_gru.w_u", &enc_gru.w_u, true},
      {"enc_gru.w_r", &enc_gru.w_r, true}, {"enc_gru.w_c", &enc_gru.w_c, true}, {"enc_gru.b_u", &enc_gru.b_u, false},
      {"enc_gru.b_r", &enc_gru.b_r, false}, {"enc_gru.b_c", &enc_gru.b_c, false}, {"dec_gc.w0", &dec_gc.w0, true},
      {"dec_gc.w1", &dec_gc.w1, true},    {"dec_gru.w_u", &dec_gru.w_u, true}, {"dec_gru.w_r", &dec_gru.w_r, true},
      {"dec_gru.w_c", &dec_gru.w_c, true}, {"dec_gru.b_u", &dec_gru.b_u, false}, {"dec_gru.b_r", &dec_gru.b_r, false},
      {"dec_gru.b_c", &dec_gru.b_c, false}, {"w_out", &w_out, true},           {"b_out", &b_out, false},
  };
}

GCGRUModel::Vars GCGRUModel::unpack(std::span<const ad::Var> p) const {
  if (p.size() != 18) throw ContractError("nn", "gcgru expects 18 parameter vars, got " + std::to_string(p.size()));
  return Vars{GCVars{p[0], p[1]},
              GCVars{p[8], p[9]},
              GRUVars{p[2], p[3], p[4], p[5], p[6], p[7]},
              GRUVars{p[10], p[11], p[12], p[13], p[14], p[15]},
              p[16],
              p[17]};
}

ad::Var GCGRUModel::encode(ad::Tape& tape, const Vars& v, const Tensor3& batch) const {
  check_batch(dims_, batch);
  ad::Var h = tape.leaf(DenseMatrix(batch.n() * dims_.d, dims_.hidden));
  for (std::size_t t = 0; t < dims_.t_in; ++t) {
    const ad::Var frame = tape.leaf(frame_column(batch, t));
    h = gru_step(gc_forward(frame, a_hat.matrix, v.enc_gc), h, v.enc_gru);
  }
  return h;
}

ad::Var GCGRUModel::decode(const Vars& v, const ad::Var& h_enc, const ad::Var& last_frame) const {
  const std::size_t d = dims_.d;
  if (last_frame.cols() != 1 || last_frame.rows() % d != 0 || h_enc.rows() != last_frame.rows() ||
      h_enc.cols() != dims_.hidden) {
    throw ShapeError("nn", "decode: state " + h_enc.value().shape_string() + " / frame " +
                               last_frame.value().shape_string() + " inconsistent with d=" + std::to_string(d));
  }
  const std::size_t batch = last_frame.rows() / d;
  ad::Var h = h_enc;
  ad::Var input = last_frame;
  std::vector<ad::Var> pooled;
  std::vector<ad::Var> frames;
  for (std::size_t j = 0; j < dims_.t_out; ++j) {
    h = gru_step(gc_forward(input, a_hat.matrix, v.dec_gc), h, v.dec_gru);
    pooled.push_back(ad::block_mean_pool(h, d));
    const ad::Var frame = ad::sigmoid(head_frame(pooled, j, v.w_out, v.b_out, dims_.hidden, d));
    frames.push_back(frame);
    if (j + 1 < dims_.t_out) input = ad::reshape(frame, batch * d, 1);
  }
  return frames.size() == 1 ? frames[0] : ad::concat_cols(frames);
}

ad::Var GCGRUModel::forward(ad::Tape& tape, std::span<const ad::Var> params, const Tensor3& batch) const {
  const Vars v = unpack(params);
  const ad::Var h = encode(tape, v, batch);
  const ad::Var last = tape.leaf(frame_column(batch, dims_.t_in - 1));
  return decode(v, h, last);
}

// ---- LSTMModel ----

LSTMModel::LSTMModel(ModelDims dims) : dims_(dims) {
  check_dims(dims_);
  const std::size_t in = dims_.d + dims_.hidden;
  const std::size_t h = dims_.hidden;
  cell = LSTMParams{DenseMatrix(in, h), DenseMatrix(in, h), DenseMatrix(in, h), DenseMatrix(in, h),
                    DenseMatrix(1, h),  DenseMatrix(1, h),  DenseMatrix(1, h),  DenseMatrix(1, h)};
  w_out = DenseMatrix(dims_.t_out * h, dims_.t_out * dims_.d);
  b_out = DenseMatrix(1, dims_.t_out * dims_.d);
}

LSTMModel LSTMModel::zeros(ModelDims dims) { return LSTMModel(dims); }

LSTMModel LSTMModel::initialize(ModelDims dims, std::uint64_t seed) {
  LSTMModel m(dims);
  auto rng = SeedStreams(seed).stream("init");
  const std::size_t in = dims.d + dims.hidden;
  m.cell.w_i = glorot(in, dims.hidden, rng);
  m.cell.w_f = glorot(in, dims.hidden, rng);
  m.cell.w_o = glorot(in, dims.hidden, rng);
  m.cell.w_c = glorot(in, dims.hidden, rng);
  m.w_out = glorot(dims.t_out * dims.hidden, dims.t_out * dims.d, rng);
  mask_future_blocks(m.w_out, dims);
  return m;
}

std::vector<ParamRef> LSTMModel::parameters() {
  return {
      {"lstm.w_i", &cell.w_i, true},  {"lstm.w_f", &cell.w_f, true},  {"lstm.w_o", &cell.w_o, true},
      {"lstm.w_c", &cell.w_c, true},  {"lstm.b_i", &cell.b_i, false}, {"lstm.b_f", &cell.b_f, false},
      {"lstm.b_o", &cell.b_o, false}, {"lstm.b_c", &cell.b_c, false}, {"w_out", &w_out, true},
      {"b_out", &b_out, false},
  };
}

ad::Var LSTMModel::forward(ad::Tape& tape, std::span<const ad::Var> p, const Tensor3& batch) const {
  check_batch(dims_, batch);
  if (p.size() != 10) throw ContractError("nn", "lstm expects 10 parameter vars, got " + std::to_string(p.size()));
  const LSTMVars cv{p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7]};
  const ad::Var& w_out_v = p[8];
  const ad::Var& b_out_v = p[9];
  const std::size_t n = batch.n();
  const std::size_t d = dims_.d;

  auto frame_rows = [&](std::size_t t) {
    DenseMatrix f(n, d);
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t k = 0; k < d; ++k) f(b, k) = batch(b, t, k);
    return f;
  };

  LSTMState s{tape.leaf(DenseMatrix(n, dims_.hidden)), tape.leaf(DenseMatrix(n, dims_.hidden))};
  for (std::size_t t = 0; t < dims_.t_in; ++t) s = lstm_step(tape.leaf(frame_rows(t)), s.h, s.c, cv);

  ad::Var input = tape.leaf(frame_rows(dims_.t_in - 1));
  std::vector<ad::Var> states;
  std::vector<ad::Var> frames;
  for (std::size_t j = 0; j < dims_.t_out; ++j) {
    s = lstm_step(input, s.h, s.c, cv);
    states.push_back(s.h);
    const ad::Var frame = head_frame(states, j, w_out_v, b_out_v, dims_.hidden, d);
    frames.push_back(frame);
    input = frame;
  }
  return frames.size() == 1 ? frames[0] : ad::concat_cols(frames);
}

}  // namespace stgcast::nn
