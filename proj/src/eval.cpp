#include "stgcast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stgcast/error.hpp"
#include "stgcast/io.hpp"

namespace stgcast::eval {

namespace {

void check_pair(const Tensor3& a, const Tensor3& b, Mask mask) {
  if (!a.same_shape(b)) throw ShapeError("eval", "metric shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  if (!mask.empty() && mask.size() != a.size()) throw ShapeError("eval", "mask length does not match tensors");
}

bool masked(Mask mask, std::size_t i) { return !mask.empty() && mask[i] != 0; }

// Running sums for one group of cells.
struct Acc {
  double abs = 0.0;
  double sq = 0.0;
  std::size_t n = 0;
  double ape = 0.0;
  std::size_t n_ape = 0;
  std::size_t excluded = 0;

  void add(double y, double p, bool is_masked, double eps) {
    if (is_masked) {
      ++excluded;
      return;
    }
    const double e = y - p;
    abs += std::abs(e);
    sq += e * e;
    ++n;
    if (std::abs(y) > eps) {
      ape += std::abs(e) / std::abs(y);
      ++n_ape;
    } else {
      ++excluded;
    }
  }
  double mae() const { return n ? abs / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN(); }
  double rmse() const {
    return n ? std::sqrt(sq / static_cast<double>(n)) : std::numeric_limits<double>::quiet_NaN();
  }
  double mape() const {
    return n_ape ? 100.0 * ape / static_cast<double>(n_ape) : std::numeric_limits<double>::quiet_NaN();
  }
};

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

std::string fmt(double v) { return io::format_double(v); }

}  // namespace

double mae(const Tensor3& y_true, const Tensor3& y_pred, Mask mask) {
  check_pair(y_true, y_pred, mask);
  Acc acc;
  for (std::size_t i = 0; i < y_true.size(); ++i) acc.add(y_true.values()[i], y_pred.values()[i], masked(mask, i), 0.0);
  if (acc.n == 0) throw DegenerateError("eval", "MAE over zero unmasked cells is undefined");
  return acc.mae();
}

double rmse(const Tensor3& y_true, const Tensor3& y_pred, Mask mask) {
  check_pair(y_true, y_pred, mask);
  Acc acc;
  for (std::size_t i = 0; i < y_true.size(); ++i) acc.add(y_true.values()[i], y_pred.values()[i], masked(mask, i), 0.0);
  if (acc.n == 0) throw DegenerateError("eval", "RMSE over zero unmasked cells is undefined");
  return acc.rmse();
}

MapeResult mape(const Tensor3& y_true, const Tensor3& y_pred, Mask mask, double epsilon) {
  check_pair(y_true, y_pred, mask);
  Acc acc;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    acc.add(y_true.values()[i], y_pred.values()[i], masked(mask, i), epsilon);
  }
  if (acc.n_ape == 0) throw DegenerateError("eval", "MAPE undefined: every target cell is masked or near zero");
  return {acc.mape(), acc.excluded};
}

Tensor3 historical_average_forecast(const Tensor3& x, std::size_t t_out) {
  Tensor3 out(x.n(), t_out, x.d());
  if (x.t() == 0) return out;
  const double inv = 1.0 / static_cast<double>(x.t());
  for (std::size_t i = 0; i < x.n(); ++i) {
    for (std::size_t k = 0; k < x.d(); ++k) {
      double s = 0.0;
      for (std::size_t t = 0; t < x.t(); ++t) s += x(i, t, k);
      const double m = s * inv;
      for (std::size_t j = 0; j < t_out; ++j) out(i, j, k) = m;
    }
  }
  return out;
}

Tensor3 clip(const Tensor3& t, double lo, double hi) {
  Tensor3 out = t;
  for (double& v : out.values()) v = std::clamp(v, lo, hi);
  return out;
}

BoxStats box_stats(std::vector<double> values) {
  BoxStats b;
  if (values.empty()) return b;
  std::sort(values.begin(), values.end());
  b.min = values.front();
  b.max = values.back();
  b.q25 = quantile(values, 0.25);
  b.median = quantile(values, 0.5);
  b.q75 = quantile(values, 0.75);
  const double iqr = b.q75 - b.q25;
  const double lo = b.q25 - 1.5 * iqr;
  const double hi = b.q75 + 1.5 * iqr;
  b.n_outliers = static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [lo, hi](double v) { return v < lo || v > hi; }));
  return b;
}

MetricsReport horizon_report(const Tensor3& y_true, const Tensor3& y_pred, const std::vector<std::string>& detector_ids,
                             Mask mask, double epsilon, std::size_t step_minutes) {
  check_pair(y_true, y_pred, mask);
  const std::size_t n = y_true.n(), h = y_true.t(), d = y_true.d();
  if (detector_ids.size() != d) throw ShapeError("eval", "detector id count does not match tensor width");

  std::vector<Acc> per_h(h);
  std::vector<Acc> per_d(d);
  std::vector<Acc> per_hd(h * d);
  Acc all;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < h; ++j) {
      for (std::size_t k = 0; k < d; ++k) {
        const std::size_t idx = (i * h + j) * d + k;
        const double y = y_true.values()[idx];
        const double p = y_pred.values()[idx];
        const bool m = masked(mask, idx);
        per_h[j].add(y, p, m, epsilon);
        per_d[k].add(y, p, m, epsilon);
        per_hd[j * d + k].add(y, p, m, epsilon);
        all.add(y, p, m, epsilon);
      }
    }
  }

  MetricsReport r;
  r.overall = {all.mae(), all.rmse(), all.mape()};
  r.excluded_count = all.excluded;
  for (std::size_t j = 0; j < h; ++j) {
    r.per_horizon.push_back({(j + 1) * step_minutes, per_h[j].mae(), per_h[j].rmse(), per_h[j].mape(), per_h[j].n,
                             per_h[j].excluded});
    std::vector<double> det_mae;
    for (std::size_t k = 0; k < d; ++k) {
      if (per_hd[j * d + k].n) det_mae.push_back(per_hd[j * d + k].mae());
    }
    BoxStats b = box_stats(std::move(det_mae));
    b.minutes = (j + 1) * step_minutes;
    r.boxplot.push_back(b);
  }
  // Hour groups of four 15-minute steps each.
  const std::size_t per_group = 60 / step_minutes == 0 ? 1 : 60 / step_minutes;
  for (std::size_t g = 0; g * per_group < h; ++g) {
    Acc grp;
    for (std::size_t j = g * per_group; j < std::min(h, (g + 1) * per_group); ++j) {
      grp.abs += per_h[j].abs;
      grp.sq += per_h[j].sq;
      grp.n += per_h[j].n;
      grp.ape += per_h[j].ape;
      grp.n_ape += per_h[j].n_ape;
    }
    r.groups.push_back({std::to_string(g + 1) + "h", grp.mae(), grp.rmse(), grp.mape()});
  }
  for (std::size_t k = 0; k < d; ++k) r.per_detector.push_back({detector_ids[k], per_d[k].mae()});
  return r;
}

std::string format_horizon_csv(const MetricsReport& r) {
  std::string out = "minutes,mae,rmse,mape\n";
  for (const auto& row : r.per_horizon) {
    out += std::to_string(row.minutes) + "," + fmt(row.mae) + "," + fmt(row.rmse) + "," + fmt(row.mape) + "\n";
  }
  return out;
}

std::string format_detector_csv(const MetricsReport& r) {
  std::string out = "detector_id,mae\n";
  for (const auto& row : r.per_detector) out += row.detector_id + "," + fmt(row.mae) + "\n";
  return out;
}

std::string format_boxplot_csv(const MetricsReport& r) {
  std::string out = "minutes,min,q25,median,q75,max,n_outliers\n";
  for (const auto& b : r.boxplot) {
    out += std::to_string(b.minutes) + "," + fmt(b.min) + "," + fmt(b.q25) + "," + fmt(b.median) + "," + fmt(b.q75) +
           "," + fmt(b.max) + "," + std::to_string(b.n_outliers) + "\n";
  }
  return out;
}

void write_report(const std::filesystem::path& dir, const MetricsReport& r) {
  io::atomic_write(dir / "report_horizon.csv", format_horizon_csv(r));
  io::atomic_write(dir / "report_detector.csv", format_detector_csv(r));
  io::atomic_write(dir / "report_boxplot.csv", format_boxplot_csv(r));
}

}  // namespace stgcast::eval
