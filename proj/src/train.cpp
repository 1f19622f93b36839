#include "stgcast/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "stgcast/error.hpp"
#include "stgcast/eval.hpp"
#include "stgcast/gradcheck.hpp"
#include "stgcast/io.hpp"
#include "stgcast/log.hpp"
#include "stgcast/rng.hpp"
#include "stgcast/simd/kernels.hpp"

namespace stgcast::train {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<DenseMatrix> snapshot(const nn::SequenceModel& model) {
  std::vector<DenseMatrix> out;
  for (const auto& p : model.parameters()) out.push_back(*p.value);
  return out;
}

void restore(nn::SequenceModel& model, const std::vector<DenseMatrix>& values) {
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = values[i];
}

double objective(const nn::SequenceModel& model, const data::WindowedDataset& ds, const TrainConfig& cfg) {
  const Tensor3 pred = nn::model_forward(model, ds.x);
  return regularized_loss_value(ds.y, pred, penalized(model, cfg.regularize_biases), cfg.lambda_reg);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train", "learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("train", "batch_size must be positive");
  if (!(lambda_reg >= 0.0)) throw ConfigError("train", "lambda_reg must be non-negative");
  if (!(split > 0.0 && split < 1.0)) throw ConfigError("train", "split must lie in (0, 1)");
  if (hidden == 0 || gc_hidden == 0 || gc_out == 0) throw ConfigError("train", "layer widths must be positive");
  if (k_hops == 0) throw ConfigError("train", "k_hops must be at least 1");
  if (!(clip_norm > 0.0)) throw ConfigError("train", "clip_norm must be positive");
}

NormStats NormStats::from_values(std::span<const double> values) {
  if (values.empty()) throw DegenerateError("train", "normalization statistics from an empty split");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  NormStats s{*lo, *hi};
  s.validate();
  return s;
}

NormStats NormStats::from_training(const data::WindowedDataset& train) {
  if (train.size() == 0) throw DegenerateError("train", "normalization statistics from an empty split");
  const auto [xl, xh] = std::minmax_element(train.x.values().begin(), train.x.values().end());
  const auto [yl, yh] = std::minmax_element(train.y.values().begin(), train.y.values().end());
  NormStats s{std::min(*xl, *yl), std::max(*xh, *yh)};
  s.validate();
  return s;
}

void NormStats::validate() const {
  if (!(max_v > min_v)) {
    throw DegenerateError("train", "degenerate normalization range [" + io::format_double(min_v) + ", " +
                                       io::format_double(max_v) + "]");
  }
}

double normalize_value(double v, const NormStats& s) { return (v - s.min_v) / (s.max_v - s.min_v); }
double denormalize_value(double v, const NormStats& s) { return v * (s.max_v - s.min_v) + s.min_v; }

Tensor3 normalize(const Tensor3& x, const NormStats& s) {
  s.validate();
  Tensor3 out = x;
  for (double& v : out.values()) v = normalize_value(v, s);
  return out;
}

Tensor3 denormalize(const Tensor3& y, const NormStats& s) {
  s.validate();
  Tensor3 out = y;
  for (double& v : out.values()) v = denormalize_value(v, s);
  return out;
}

DenseMatrix normalize(const DenseMatrix& x, const NormStats& s) {
  s.validate();
  DenseMatrix out = x;
  for (double& v : out.values()) v = normalize_value(v, s);
  return out;
}

data::WindowedDataset normalize(const data::WindowedDataset& ds, const NormStats& s) {
  data::WindowedDataset out = ds;
  out.x = normalize(ds.x, s);
  out.y = normalize(ds.y, s);
  return out;
}

DenseMatrix flatten_targets(const Tensor3& y) {
  auto v = y.values();
  return DenseMatrix(y.n(), y.t() * y.d(), std::vector<double>(v.begin(), v.end()));
}

ad::Var regularized_loss(const ad::Var& pred, const DenseMatrix& target, std::span<const ad::Var> weights,
                         double lambda) {
  ad::Var loss = ad::mean_squared_error(pred, target);
  if (lambda != 0.0 && !weights.empty()) {
    ad::Var reg = ad::abs_sum(weights.front());
    for (std::size_t i = 1; i < weights.size(); ++i) reg = ad::add(reg, ad::abs_sum(weights[i]));
    loss = ad::add(loss, ad::scale(reg, lambda));
  }
  return loss;
}

double regularized_loss_value(const Tensor3& y_true, const Tensor3& y_pred, std::span<const DenseMatrix* const> weights,
                              double lambda) {
  if (!y_true.same_shape(y_pred)) {
    throw ShapeError("train", "loss shape mismatch " + y_true.shape_string() + " vs " + y_pred.shape_string());
  }
  if (y_true.size() == 0) throw ContractError("train", "loss over an empty batch");
  double sq = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_true.values()[i] - y_pred.values()[i];
    sq += e * e;
  }
  double l1 = 0.0;
  for (const DenseMatrix* w : weights)
    for (double v : w->values()) l1 += std::abs(v);
  return sq / static_cast<double>(y_true.size()) + lambda * l1;
}

std::vector<ad::Var> penalized(const nn::SequenceModel& model, std::span<const ad::Var> params, bool include_biases) {
  const auto refs = model.parameters();
  std::vector<ad::Var> out;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].is_weight || include_biases) out.push_back(params[i]);
  }
  return out;
}

std::vector<const DenseMatrix*> penalized(const nn::SequenceModel& model, bool include_biases) {
  std::vector<const DenseMatrix*> out;
  for (const auto& p : model.parameters()) {
    if (p.is_weight || include_biases) out.push_back(p.value);
  }
  return out;
}

void adam_step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix> grads, AdamState& state,
               double learning_rate, std::span<const std::string> names) {
  if (params.size() != grads.size()) throw ShapeError("train", "adam: parameter and gradient counts differ");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!params[i]->same_shape(grads[i])) {
      throw ShapeError("train", "adam: gradient " + grads[i].shape_string() + " vs parameter " +
                                    params[i]->shape_string());
    }
    if (!all_finite(grads[i].values())) {
      const std::string name = i < names.size() ? names[i] : "#" + std::to_string(i);
      throw NumericFault("train", "non-finite gradient for parameter " + name + " at optimizer step " +
                                      std::to_string(state.step + 1));
    }
  }
  if (state.m.empty()) {
    for (const auto& g : grads) {
      state.m.emplace_back(g.rows(), g.cols());
      state.v.emplace_back(g.rows(), g.cols());
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto p = params[i]->values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    const auto g = grads[i].values();
    for (std::size_t k = 0; k < g.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

double clip_global_norm(std::span<DenseMatrix> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g.values()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (auto& g : grads) simd::active_kernels().scale(g.data(), f, g.data(), g.size());
  }
  return norm;
}

FitResult fit(nn::SequenceModel& model, const data::WindowedDataset& train, const data::WindowedDataset& val,
              const TrainConfig& cfg) {
  cfg.validate();
  if (train.size() == 0) throw ContractError("train", "cannot fit on an empty training set");
  FitResult result;
  const auto fit_start = Clock::now();
  if (cfg.epochs == 0) return result;

  const bool have_val = val.size() > 0;
  auto rng = SeedStreams(cfg.seed).stream("shuffle");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto refs = model.parameters();
  std::vector<DenseMatrix*> param_ptrs;
  std::vector<std::string> names;
  for (auto& r : refs) {
    param_ptrs.push_back(r.value);
    names.push_back(r.name);
  }
  AdamState adam;

  double best = have_val ? objective(model, val, cfg) : objective(model, train, cfg);
  if (!std::isfinite(best)) best = std::numeric_limits<double>::infinity();
  std::vector<DenseMatrix> best_params = snapshot(model);
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(start + len));
      const Tensor3 bx = train.x.gather(idx);
      const DenseMatrix by = flatten_targets(train.y.gather(idx));

      ad::Tape tape;
      const auto params = nn::bind_parameters(tape, model);
      const ad::Var pred = model.forward(tape, params, bx);
      const auto weights = penalized(model, params, cfg.regularize_biases);
      const ad::Var loss = regularized_loss(pred, by, weights, cfg.lambda_reg);
      tape.backward(loss);

      std::vector<DenseMatrix> grads;
      grads.reserve(params.size());
      for (const auto& p : params) grads.push_back(p.grad());
      for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!all_finite(grads[i].values())) {
          throw NumericFault("train", "epoch " + std::to_string(epoch) + ": non-finite gradient in " + names[i]);
        }
      }
      clip_global_norm(grads, cfg.clip_norm);
      adam_step(param_ptrs, grads, adam, cfg.learning_rate, names);
      loss_sum += loss.value()(0, 0) * static_cast<double>(len);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_loss = have_val ? objective(model, val, cfg) : rec.train_loss;
    rec.seconds = seconds_since(epoch_start);
    result.history.push_back(rec);
    if (!std::isfinite(rec.train_loss)) {
      throw NumericFault("train", "epoch " + std::to_string(epoch) + ": training loss is not finite");
    }

    if (rec.val_loss < best) {
      best = rec.val_loss;
      best_params = snapshot(model);
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      log::info("train", "early stop after epoch " + std::to_string(epoch));
      break;
    }
  }
  restore(model, best_params);
  result.best_val_loss = best;
  result.train_seconds = seconds_since(fit_start);
  return result;
}

std::string format_history_csv(const std::vector<EpochRecord>& history, bool record_seconds) {
  std::string out = "epoch,train_loss,val_loss,seconds\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "," + io::format_double(r.train_loss) + "," + io::format_double(r.val_loss) + ",";
    if (record_seconds) out += io::format_double(r.seconds);
    out += "\n";
  }
  return out;
}

GradCheckReport gradient_check_model(const nn::SequenceModel& model, const Tensor3& x, const Tensor3& y,
                                     const GradCheckOptions& opts) {
  const auto& dims = model.dims();
  if (dims.d > 5 || dims.t_in > 4 || dims.t_out > 2 || dims.hidden > 4) {
    throw ContractError("train", "gradient check is limited to toy dims (d<=5, t_in<=4, t_out<=2, hidden<=4)");
  }
  if (x.n() != y.n() || y.t() != dims.t_out || y.d() != dims.d) {
    throw ShapeError("train", "gradient check sample " + x.shape_string() + " / " + y.shape_string() +
                                  " does not fit the model");
  }
  const DenseMatrix target = flatten_targets(y);

  auto run_pass = [&](const nn::SequenceModel& m, double lambda) {
    GradCheckPass pass;
    pass.lambda = lambda;
    ad::Tape tape;
    if (opts.observer) tape.set_backward_observer(opts.observer);
    const auto params = nn::bind_parameters(tape, m);
    const ad::Var loss = regularized_loss(m.forward(tape, params, x), target, penalized(m, params), lambda);
    tape.backward(loss);

    const auto refs = m.parameters();
    for (std::size_t p = 0; p < refs.size(); ++p) {
      auto probe = m.clone();
      DenseMatrix* slot = probe->parameters()[p].value;
      auto f = [&](const DenseMatrix& w) {
        *slot = w;
        ad::Tape t;
        const auto pv = nn::bind_parameters(t, *probe);
        return regularized_loss(probe->forward(t, pv, x), target, penalized(*probe, pv), lambda).value()(0, 0);
      };
      const DenseMatrix numeric = finite_difference_gradient(f, *refs[p].value, opts.step);
      const double err = max_relative_error(params[p].grad(), numeric);
      pass.params.push_back({refs[p].name, err, numeric.size()});
      pass.max_rel_error = std::max(pass.max_rel_error, err);
    }
    return pass;
  };

  GradCheckReport report;
  report.tolerance = opts.tolerance;
  report.passes.push_back(run_pass(model, 0.0));
  if (opts.lambda > 0.0) {
    auto shifted = model.clone();
    for (auto& p : shifted->parameters()) {
      for (double& v : p.value->values()) {
        if (std::abs(v) < opts.kink_margin) v = v < 0.0 ? -opts.kink_margin : opts.kink_margin;
      }
    }
    report.passes.push_back(run_pass(*shifted, opts.lambda));
  }
  for (const auto& p : report.passes) report.max_rel_error = std::max(report.max_rel_error, p.max_rel_error);
  report.passed = report.max_rel_error < opts.tolerance;
  return report;
}

TrainConfig apply_grid_values(const TrainConfig& base, const std::vector<std::string>& keys,
                              const std::vector<double>& values) {
  if (keys.size() != values.size()) throw ConfigError("train", "grid keys and values differ in length");
  TrainConfig cfg = base;
  auto as_count = [](const std::string& key, double v) {
    if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError("train", "grid value for " + key + " must be a whole number");
    return static_cast<std::size_t>(v);
  };
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::string& k = keys[i];
    const double v = values[i];
    if (k == "learning_rate") cfg.learning_rate = v;
    else if (k == "lambda_reg") cfg.lambda_reg = v;
    else if (k == "clip_norm") cfg.clip_norm = v;
    else if (k == "epochs") cfg.epochs = as_count(k, v);
    else if (k == "batch_size") cfg.batch_size = as_count(k, v);
    else if (k == "hidden") cfg.hidden = as_count(k, v);
    else if (k == "gc_hidden") cfg.gc_hidden = as_count(k, v);
    else if (k == "gc_out") cfg.gc_out = as_count(k, v);
    else if (k == "k_hops") cfg.k_hops = as_count(k, v);
    else if (k == "early_stop_patience") cfg.early_stop_patience = as_count(k, v);
    else throw ConfigError("train", "unsupported grid hyperparameter '" + k + "'");
  }
  cfg.validate();
  return cfg;
}

HoldoutScores score_holdout(const nn::SequenceModel& model, const data::WindowedDataset& val_norm,
                            const NormStats& stats, double mape_epsilon) {
  Tensor3 pred = nn::model_forward(model, val_norm.x);
  if (model.kind() == "lstm") pred = eval::clip(pred, 0.0, 1.0);
  const Tensor3 p = denormalize(pred, stats);
  const Tensor3 y = denormalize(val_norm.y, stats);
  return {eval::mae(y, p, val_norm.y_mask), eval::rmse(y, p, val_norm.y_mask),
          eval::mape(y, p, val_norm.y_mask, mape_epsilon).percent};
}

GridResult grid_search(const Grid& grid, const data::WindowedDataset& train, const data::WindowedDataset& val,
                       const NormStats& stats, const TrainConfig& base, const ModelFactory& factory, std::size_t jobs,
                       double mape_epsilon) {
  if (grid.empty()) throw ContractError("train", "empty hyperparameter grid");
  std::size_t combos = 1;
  GridResult result;
  for (const auto& [key, vals] : grid) {
    if (vals.empty()) throw ContractError("train", "grid entry '" + key + "' has no values");
    combos *= vals.size();
    if (combos > kMaxGridCombos) {
      throw ContractError("train", "grid exceeds " + std::to_string(kMaxGridCombos) + " combinations");
    }
    result.keys.push_back(key);
  }
  if (val.size() == 0) throw ContractError("train", "grid search needs a validation split");

  std::vector<std::vector<double>> assignments(combos);
  for (std::size_t c = 0; c < combos; ++c) {
    std::size_t rem = c;
    std::vector<double> vals(grid.size());
    for (std::size_t k = grid.size(); k-- > 0;) {
      vals[k] = grid[k].second[rem % grid[k].second.size()];
      rem /= grid[k].second.size();
    }
    assignments[c] = std::move(vals);
  }
  // Validate every combo before spending time on training.
  std::vector<TrainConfig> configs;
  for (const auto& a : assignments) configs.push_back(apply_grid_values(base, result.keys, a));

  std::vector<GridRow> rows(combos);
  std::vector<std::exception_ptr> errors(combos);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < combos; c = next++) {
      try {
        auto model = factory(configs[c]);
        const FitResult fr = fit(*model, train, val, configs[c]);
        const HoldoutScores s = score_holdout(*model, val, stats, mape_epsilon);
        rows[c] = GridRow{c, assignments[c], s.mape, s.mae, s.rmse, fr.train_seconds};
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, combos));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::stable_sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
    if (a.val_mape != b.val_mape) return a.val_mape < b.val_mape;
    return a.combo_id < b.combo_id;
  });
  result.rows = std::move(rows);
  return result;
}

std::string format_grid_csv(const GridResult& result) {
  std::string out = "combo_id";
  for (const auto& k : result.keys) out += "," + k;
  out += ",val_mape,val_mae,val_rmse,train_seconds\n";
  for (const auto& r : result.rows) {
    out += std::to_string(r.combo_id);
    for (double v : r.values) out += "," + io::format_double(v);
    out += "," + io::format_double(r.val_mape) + "," + io::format_double(r.val_mae) + "," +
           io::format_double(r.val_rmse) + "," + io::format_double(r.train_seconds) + "\n";
  }
  return out;
}

}  // namespace stgcast::train
