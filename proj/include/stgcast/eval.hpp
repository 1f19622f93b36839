#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stgcast/matrix.hpp"

namespace stgcast::eval {

/// Optional per-cell exclusion mask (1 = excluded), same layout as the
/// tensors it accompanies. Empty means nothing is excluded.
using Mask = std::span<const std::uint8_t>;

double mae(const Tensor3& y_true, const Tensor3& y_pred, Mask mask = {});
double rmse(const Tensor3& y_true, const Tensor3& y_pred, Mask mask = {});

struct MapeResult {
  double percent = 0.0;
  std::size_t excluded = 0;  // masked cells plus cells with |y| <= epsilon
};

/// mean |y - p| / |y| over unmasked cells with |y| > epsilon, in percent.
MapeResult mape(const Tensor3& y_true, const Tensor3& y_pred, Mask mask = {}, double epsilon = 1e-6);

/// Each detector's mean over the input window, repeated over t_out steps.
Tensor3 historical_average_forecast(const Tensor3& x, std::size_t t_out = 12);

/// Entrywise clamp, used for the linear-head baseline at metric time.
Tensor3 clip(const Tensor3& t, double lo, double hi);

struct HorizonRow {
  std::size_t minutes = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // percent; NaN when every cell is excluded
  std::size_t cells = 0;
  std::size_t mape_excluded = 0;
};

struct GroupRow {
  std::string label;  // "1h", "2h", "3h"
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;
};

struct DetectorRow {
  std::string detector_id;
  double mae = 0.0;
};

struct BoxStats {
  std::size_t minutes = 0;
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
  std::size_t n_outliers = 0;  // outside [q25 - 1.5 IQR, q75 + 1.5 IQR]
};

struct Overall {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;
};

struct MetricsReport {
  Overall overall;
  std::vector<HorizonRow> per_horizon;
  std::vector<GroupRow> groups;
  std::vector<DetectorRow> per_detector;
  std::vector<BoxStats> boxplot;  // distribution of per-detector MAE at each horizon
  std::size_t excluded_count = 0;
};

/// Linear-interpolated quantiles plus 1.5 IQR outlier count.
BoxStats box_stats(std::vector<double> values);

MetricsReport horizon_report(const Tensor3& y_true, const Tensor3& y_pred, const std::vector<std::string>& detector_ids,
                             Mask mask = {}, double epsilon = 1e-6, std::size_t step_minutes = 15);

std::string format_horizon_csv(const MetricsReport& r);
std::string format_detector_csv(const MetricsReport& r);
std::string format_boxplot_csv(const MetricsReport& r);

/// report_horizon.csv, report_detector.csv, report_boxplot.csv under dir.
void write_report(const std::filesystem::path& dir, const MetricsReport& r);

}  // namespace stgcast::eval
