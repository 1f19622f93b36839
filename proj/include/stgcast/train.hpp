#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stgcast/autodiff.hpp"
#include "stgcast/data.hpp"
#include "stgcast/matrix.hpp"
#include "stgcast/nn.hpp"

namespace stgcast::train {

inline constexpr double kDefaultLambda = 0.0015;

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lambda_reg = kDefaultLambda;
  double split = 0.8;
  std::size_t hidden = 64;
  std::size_t gc_hidden = 16;
  std::size_t gc_out = 8;
  std::size_t k_hops = 1;
  std::uint64_t seed = 42;
  std::size_t early_stop_patience = 10;
  double clip_norm = 5.0;
  bool regularize_biases = false;

  /// Throws ConfigError on non-positive sizes or a split outside (0, 1).
  void validate() const;
};

/// Global min/max of the training split.
struct NormStats {
  double min_v = 0.0;
  double max_v = 1.0;

  static NormStats from_values(std::span<const double> values);
  static NormStats from_training(const data::WindowedDataset& train);
  void validate() const;
};

double normalize_value(double v, const NormStats& s);
double denormalize_value(double v, const NormStats& s);
Tensor3 normalize(const Tensor3& x, const NormStats& s);
Tensor3 denormalize(const Tensor3& y, const NormStats& s);
DenseMatrix normalize(const DenseMatrix& x, const NormStats& s);
data::WindowedDataset normalize(const data::WindowedDataset& ds, const NormStats& s);

/// Tape loss: mean squared error over every cell plus lambda * sum |w| over
/// the given weight Vars.
ad::Var regularized_loss(const ad::Var& pred, const DenseMatrix& target, std::span<const ad::Var> weights,
                         double lambda);

/// Plain evaluation of the same objective on tensors.
double regularized_loss_value(const Tensor3& y_true, const Tensor3& y_pred, std::span<const DenseMatrix* const> weights,
                              double lambda);

/// The parameter Vars that carry the L1 penalty (weights; biases too when asked).
std::vector<ad::Var> penalized(const nn::SequenceModel& model, std::span<const ad::Var> params,
                               bool include_biases = false);
std::vector<const DenseMatrix*> penalized(const nn::SequenceModel& model, bool include_biases = false);

/// Targets of a batch flattened to B x (t_out * d).
DenseMatrix flatten_targets(const Tensor3& y);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  std::vector<DenseMatrix> m;
  std::vector<DenseMatrix> v;
};

/// One bias-corrected Adam update. Throws NumericFault on a non-finite gradient.
void adam_step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix> grads, AdamState& state,
               double learning_rate, std::span<const std::string> names = {});

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::span<DenseMatrix> grads, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct FitResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 = initial parameters kept
  double best_val_loss = 0.0;
  double train_seconds = 0.0;
};

/// Trains in place on normalized data and leaves the best-validation
/// parameters in the model. Batch order is reshuffled each epoch from the
/// "shuffle" stream of cfg.seed; validation targets are only read for the
/// per-epoch validation loss.
FitResult fit(nn::SequenceModel& model, const data::WindowedDataset& train, const data::WindowedDataset& val,
              const TrainConfig& cfg);

/// `epoch,train_loss,val_loss,seconds`. With record_seconds off the seconds
/// column is left empty so the file depends only on the inputs and seed.
std::string format_history_csv(const std::vector<EpochRecord>& history, bool record_seconds);

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t entries = 0;
};

struct GradCheckPass {
  double lambda = 0.0;
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckPass> passes;
  double tolerance = 1e-4;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  double lambda = kDefaultLambda;
  /// Entries closer than this to zero are moved out to +/- margin for the
  /// lambda > 0 pass, so central differences never straddle the |w| kink.
  double kink_margin = 0.05;
  ad::BackwardObserver observer;  // installed on every analytic tape
};

/// Tape gradients of regularized_loss against central differences for every
/// parameter matrix: one pass at lambda = 0, one at opts.lambda with
/// parameters bounded away from zero. Toy dimensions only.
GradCheckReport gradient_check_model(const nn::SequenceModel& model, const Tensor3& x, const Tensor3& y,
                                     const GradCheckOptions& opts = {});

using Grid = std::vector<std::pair<std::string, std::vector<double>>>;
using ModelFactory = std::function<std::unique_ptr<nn::SequenceModel>(const TrainConfig&)>;

inline constexpr std::size_t kMaxGridCombos = 256;

/// Returns a copy of base with the named hyperparameters replaced.
TrainConfig apply_grid_values(const TrainConfig& base, const std::vector<std::string>& keys,
                              const std::vector<double>& values);

struct GridRow {
  std::size_t combo_id = 0;
  std::vector<double> values;
  double val_mape = 0.0;
  double val_mae = 0.0;
  double val_rmse = 0.0;
  double train_seconds = 0.0;
};

struct GridResult {
  std::vector<std::string> keys;
  std::vector<GridRow> rows;  // ranked by val_mape, ties by combo_id
};

/// Trains every combination of the grid (same seed each), scores the
/// denormalized validation forecasts and ranks by MAPE. `jobs` > 1 trains
/// combos concurrently; results do not depend on it.
GridResult grid_search(const Grid& grid, const data::WindowedDataset& train, const data::WindowedDataset& val,
                       const NormStats& stats, const TrainConfig& base, const ModelFactory& factory,
                       std::size_t jobs = 1, double mape_epsilon = 1e-6);

std::string format_grid_csv(const GridResult& result);

/// Validation metrics in data units for a trained model.
struct HoldoutScores {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;
};
HoldoutScores score_holdout(const nn::SequenceModel& model, const data::WindowedDataset& val_norm,
                            const NormStats& stats, double mape_epsilon = 1e-6);

}  // namespace stgcast::train
