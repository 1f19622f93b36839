#include "stgcast/data.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "stgcast/error.hpp"
#include "stgcast/io.hpp"
#include "stgcast/log.hpp"
#include "stgcast/rng.hpp"

namespace stgcast::data {

namespace {

int parse_int(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole) {
  if (pos + len > s.size()) throw ParseError("data", "truncated timestamp '" + std::string(whole) + "'");
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') throw ParseError("data", "bad timestamp '" + std::string(whole) + "'");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

bool is_missing(std::string_view cell) {
  cell = io::trim(cell);
  return cell.empty() || cell == "none" || cell == "None" || cell == "NONE";
}

struct RawRows {
  std::vector<std::string> ids;
  std::vector<std::int64_t> stamps;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;
};

RawRows parse_rows(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("data", "speed table is empty");
  auto header = io::split_csv_line(line);
  if (header.size() < 2) throw ParseError("data", "header needs a timestamp column and at least one detector");
  RawRows raw;
  for (std::size_t i = 1; i < header.size(); ++i) raw.ids.emplace_back(io::trim(header[i]));
  const std::size_t d = raw.ids.size();

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (io::trim(line).empty()) continue;
    auto cells = io::split_csv_line(line);
    if (cells.size() != d + 1) {
      throw ParseError("data", "line " + std::to_string(line_no) + ": expected " + std::to_string(d + 1) +
                                   " fields, got " + std::to_string(cells.size()));
    }
    try {
      raw.stamps.push_back(parse_timestamp(io::trim(cells[0])));
    } catch (const ParseError& e) {
      throw ParseError("data", "line " + std::to_string(line_no) + ": " + e.what());
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (is_missing(cells[j + 1])) {
        raw.values.push_back(0.0);
        raw.mask.push_back(1);
        continue;
      }
      double v = 0.0;
      try {
        v = io::parse_double(cells[j + 1]);
      } catch (const ParseError&) {
        throw ParseError("data", "line " + std::to_string(line_no) + ": bad value '" + cells[j + 1] + "'");
      }
      if (!std::isfinite(v)) throw ParseError("data", "line " + std::to_string(line_no) + ": non-finite value");
      raw.values.push_back(v);
      raw.mask.push_back(0);
    }
  }
  if (raw.stamps.empty()) throw ParseError("data", "speed table has a header but no data rows");
  return raw;
}

}  // namespace

std::size_t SpeedTable::missing_count() const {
  return static_cast<std::size_t>(std::count(missing_mask.begin(), missing_mask.end(), std::uint8_t{1}));
}

std::int64_t parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  const std::string_view whole = s;
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') {
    throw ParseError("data", "bad timestamp '" + std::string(whole) + "'");
  }
  const int y = parse_int(s, 0, 4, whole);
  const int mo = parse_int(s, 5, 2, whole);
  const int dd = parse_int(s, 8, 2, whole);
  const int hh = parse_int(s, 11, 2, whole);
  const int mi = parse_int(s, 14, 2, whole);
  int ss = 0;
  if (s.size() > 16) {
    if (s[16] != ':' || s.size() < 19) throw ParseError("data", "bad timestamp '" + std::string(whole) + "'");
    ss = parse_int(s, 17, 2, whole);
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(dd)}};
  if (!ymd.ok() || hh > 23 || mi > 59 || ss > 59) {
    throw ParseError("data", "invalid calendar timestamp '" + std::string(whole) + "'");
  }
  if (ss != 0) throw ParseError("data", "timestamp '" + std::string(whole) + "' is not on a whole minute");
  const auto days_since = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days_since) * 1440 + hh * 60 + mi;
}

std::string format_timestamp(std::int64_t minutes) {
  using namespace std::chrono;
  std::int64_t day_count = minutes / 1440;
  std::int64_t rem = minutes % 1440;
  if (rem < 0) {
    rem += 1440;
    --day_count;
  }
  const year_month_day ymd{sys_days{days{day_count}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 60),
                static_cast<int>(rem % 60));
  return buf;
}

SpeedTable parse_speed_csv(const std::string& text, CsvOptions opts) {
  RawRows raw = parse_rows(text);
  const std::size_t d = raw.ids.size();
  if (opts.require_uniform_grid) {
    for (std::size_t i = 1; i < raw.stamps.size(); ++i) {
      const std::int64_t step = raw.stamps[i] - raw.stamps[i - 1];
      if (step != kSampleMinutes) {
        throw ParseError("data", "timestamp grid broken between " + format_timestamp(raw.stamps[i - 1]) + " and " +
                                     format_timestamp(raw.stamps[i]) + " (" + std::to_string(step) +
                                     " min, expected 15)");
      }
    }
  }
  SpeedTable t;
  t.detector_ids = std::move(raw.ids);
  t.values = DenseMatrix(raw.stamps.size(), d, std::move(raw.values));
  t.timestamps = std::move(raw.stamps);
  t.missing_mask = std::move(raw.mask);
  return t;
}

SpeedTable load_speed_csv(const std::filesystem::path& path, CsvOptions opts) {
  if (!std::filesystem::exists(path)) throw IoError("data", "speed file not found: " + path.string());
  SpeedTable t = parse_speed_csv(io::read_file(path), opts);
  log::info("data", "loaded " + std::to_string(t.rows()) + " rows x " + std::to_string(t.detectors()) +
                        " detectors (" + std::to_string(t.missing_count()) + " missing cells set to 0)");
  return t;
}

std::string format_speed_csv(const SpeedTable& table) {
  std::string out = "timestamp";
  for (const auto& id : table.detector_ids) out += "," + id;
  out += '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out += format_timestamp(table.timestamps[r]);
    for (std::size_t c = 0; c < table.detectors(); ++c) {
      out += ',';
      const std::size_t idx = r * table.detectors() + c;
      if (!table.missing_mask.empty() && table.missing_mask[idx]) {
        out += "none";
      } else {
        out += io::format_double(table.values(r, c));
      }
    }
    out += '\n';
  }
  return out;
}

WindowedDataset WindowedDataset::subset(std::size_t begin, std::size_t end) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = begin; i < end; ++i) idx.push_back(i);
  return gather(idx);
}

WindowedDataset WindowedDataset::gather(const std::vector<std::size_t>& indices) const {
  WindowedDataset out;
  out.x = x.gather(indices);
  out.y = y.gather(indices);
  out.t_in = t_in;
  out.t_out = t_out;
  out.detector_ids = detector_ids;
  const std::size_t cell = t_out * y.d();
  for (std::size_t i : indices) {
    out.starts.push_back(starts[i]);
    if (!y_mask.empty()) out.y_mask.insert(out.y_mask.end(), y_mask.begin() + i * cell, y_mask.begin() + (i + 1) * cell);
  }
  return out;
}

WindowedDataset make_windows(const SpeedTable& table, std::size_t t_in, std::size_t t_out) {
  if (t_in == 0 || t_out == 0) throw ContractError("data", "window lengths must be positive");
  const std::size_t rows = table.rows();
  if (rows < t_in + t_out) {
    throw ContractError("data", "need at least " + std::to_string(t_in + t_out) + " rows for one window, have " +
                                    std::to_string(rows));
  }
  const std::size_t n = rows - t_in - t_out + 1;
  const std::size_t d = table.detectors();
  WindowedDataset ds;
  ds.t_in = t_in;
  ds.t_out = t_out;
  ds.detector_ids = table.detector_ids;
  ds.x = Tensor3(n, t_in, d);
  ds.y = Tensor3(n, t_out, d);
  ds.y_mask.assign(n * t_out * d, 0);
  const double* src = table.values.data();
  for (std::size_t i = 0; i < n; ++i) {
    ds.starts.push_back(i);
    std::copy(src + i * d, src + (i + t_in) * d, ds.x.slice_span(i).begin());
    std::copy(src + (i + t_in) * d, src + (i + t_in + t_out) * d, ds.y.slice_span(i).begin());
    if (!table.missing_mask.empty()) {
      std::copy(table.missing_mask.begin() + static_cast<std::ptrdiff_t>((i + t_in) * d),
                table.missing_mask.begin() + static_cast<std::ptrdiff_t>((i + t_in + t_out) * d),
                ds.y_mask.begin() + static_cast<std::ptrdiff_t>(i * t_out * d));
    }
  }
  return ds;
}

Split chronological_split(const WindowedDataset& ds, double ratio, bool strict_no_leak) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ContractError("data", "split ratio must lie in (0, 1)");
  const std::size_t n = ds.size();
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  std::size_t holdout_begin = n_train;
  if (strict_no_leak) holdout_begin = std::min(n, n_train + ds.t_in + ds.t_out - 1);
  if (n_train == 0 || holdout_begin >= n) {
    throw ContractError("data", "split of " + std::to_string(n) + " windows at ratio " + std::to_string(ratio) +
                                    " leaves an empty side");
  }
  return Split{ds.subset(0, n_train), ds.subset(holdout_begin, n)};
}

TpsResult compute_tps(const TpsInput& input) {
  if (!(input.free_flow_speed > 0.0)) throw DegenerateError("data", "free-flow speed must be positive");
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : input.segments) {
    if (s.length <= 0.0 || s.speed < 0.0 || s.volume < 0.0) {
      throw ContractError("data", "TPS segments need length > 0 and non-negative speed and volume");
    }
    num += s.speed * s.volume * s.length;
    den += input.free_flow_speed * s.volume * s.length;
  }
  if (den <= 0.0) throw DegenerateError("data", "TPS denominator is zero (no volume on any segment)");
  const double raw = num / den * 100.0;
  if (raw > 100.0) {
    log::warn("data", "TPS " + std::to_string(raw) + "% exceeds 100% (speeds above free flow); reported as 100%");
    return {100.0, true, raw};
  }
  return {raw, false, raw};
}

DenseMatrix simulate_diffusion(std::size_t steps, const graph::DetectorGraph& g, std::uint64_t seed,
                               const SyntheticOptions& opts) {
  const std::size_t d = g.size();
  if (d < 2) throw ContractError("data", "synthetic generator needs at least 2 detectors");
  if (opts.period == 0) throw ContractError("data", "seasonal period must be positive");
  const auto a_hat = graph::normalized_adjacency(g, 1);
  auto rng = SeedStreams(seed).stream("synthetic");
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> phase(d);
  for (std::size_t i = 0; i < d; ++i) phase[i] = std::numbers::pi * static_cast<double>(i) / static_cast<double>(d);

  DenseMatrix x(d, 1);
  DenseMatrix out(steps, d);
  const std::size_t total = opts.burn_in + steps;
  for (std::size_t t = 0; t < total; ++t) {
    DenseMatrix next = matmul(*a_hat.matrix, x);
    for (std::size_t i = 0; i < d; ++i) {
      const double season =
          opts.flat_seasonal
              ? 1.0
              : std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(opts.period) + phase[i]);
      const double e = gauss(rng);
      next(i, 0) = opts.diffusion * next(i, 0) + opts.seasonal * season + opts.noise * e;
    }
    x = std::move(next);
    if (t >= opts.burn_in) {
      for (std::size_t i = 0; i < d; ++i) out(t - opts.burn_in, i) = x(i, 0);
    }
  }
  return out;
}

SpeedTable generate_synthetic(std::size_t steps, const graph::DetectorGraph& g, std::uint64_t seed,
                              const SyntheticOptions& opts) {
  if (steps < 96) throw ContractError("data", "synthetic series needs at least 96 steps");
  DenseMatrix raw = simulate_diffusion(steps, g, seed, opts);
  if (opts.rescale) {
    const auto [lo, hi] = std::minmax_element(raw.values().begin(), raw.values().end());
    const double min_v = *lo;
    const double span = *hi - *lo;
    for (double& v : raw.values()) v = span > 0.0 ? 20.0 + 50.0 * (v - min_v) / span : 45.0;
  }
  SpeedTable t;
  t.detector_ids = g.node_ids;
  for (std::size_t r = 0; r < steps; ++r) t.timestamps.push_back(opts.start_minutes + static_cast<std::int64_t>(r) * kSampleMinutes);
  t.values = std::move(raw);
  t.missing_mask.assign(t.values.size(), 0);
  return t;
}

std::vector<TestBlock> parse_test_blocks(const std::string& text, std::vector<std::string>* detector_ids,
                                         std::size_t t_in) {
  const SpeedTable table = parse_speed_csv(text, CsvOptions{.require_uniform_grid = false});
  if (detector_ids) *detector_ids = table.detector_ids;
  const std::size_t d = table.detectors();

  std::map<std::int64_t, std::vector<std::size_t>> by_day;
  std::vector<std::int64_t> order;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::int64_t day = table.timestamps[r] / 1440;
    if (table.timestamps[r] < 0 && table.timestamps[r] % 1440 != 0) --day;
    auto [it, inserted] = by_day.try_emplace(day);
    if (inserted) order.push_back(day);
    it->second.push_back(r);
  }

  std::vector<TestBlock> blocks;
  for (std::int64_t day : order) {
    const auto& rows = by_day[day];
    const std::string label = format_timestamp(day * 1440).substr(0, 10);
    if (rows.size() != t_in) {
      throw ShapeError("data", "test day " + label + " has " + std::to_string(rows.size()) + " rows, expected " +
                                      std::to_string(t_in));
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i] != rows[i - 1] + 1 || table.timestamps[rows[i]] - table.timestamps[rows[i - 1]] != kSampleMinutes) {
        throw ParseError("data", "test day " + label + " is not a contiguous 15-minute block");
      }
    }
    TestBlock b{label, DenseMatrix(t_in, d)};
    for (std::size_t i = 0; i < t_in; ++i)
      for (std::size_t c = 0; c < d; ++c) b.values(i, c) = table.values(rows[i], c);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

std::vector<TestBlock> load_test_blocks(const std::filesystem::path& path, std::vector<std::string>* detector_ids,
                                        std::size_t t_in) {
  if (!std::filesystem::exists(path)) throw IoError("data", "test file not found: " + path.string());
  return parse_test_blocks(io::read_file(path), detector_ids, t_in);
}

std::uint64_t checksum(std::span<const double> values) {
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(values.data()), values.size_bytes()));
}

double autocorrelation(std::span<const double> series, std::size_t lag) {
  if (lag >= series.size()) throw ContractError("data", "lag exceeds series length");
  const std::size_t n = series.size() - lag;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += series[i];
    mb += series[i + lag];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = series[i] - ma;
    const double b = series[i + lag] - mb;
    cov += a * b;
    va += a * a;
    vb += b * b;
  }
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace stgcast::data
