#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <string>
#include <utility>
#include <vector>

#include "stgcast/graph.hpp"
#include "stgcast/matrix.hpp"

namespace stgcast::data {

inline constexpr std::int64_t kSampleMinutes = 15;

/// Speed series on a uniform 15-minute grid, one column per detector.
/// Cells that were "none" or empty in the source are 0 with missing_mask set.
struct SpeedTable {
  std::vector<std::int64_t> timestamps;  // minutes since 1970-01-01T00:00
  std::vector<std::string> detector_ids;
  DenseMatrix values;                     // rows = timestamps, cols = detectors
  std::vector<std::uint8_t> missing_mask;  // same layout as values

  std::size_t rows() const noexcept { return timestamps.size(); }
  std::size_t detectors() const noexcept { return detector_ids.size(); }
  std::size_t missing_count() const;
};

/// Parses "YYYY-MM-DDTHH:MM[:SS]" (a space may replace the T).
std::int64_t parse_timestamp(std::string_view s);
std::string format_timestamp(std::int64_t minutes);

struct CsvOptions {
  bool require_uniform_grid = true;
};

SpeedTable parse_speed_csv(const std::string& text, CsvOptions opts = {});
SpeedTable load_speed_csv(const std::filesystem::path& path, CsvOptions opts = {});
std::string format_speed_csv(const SpeedTable& table);

/// Sliding windows of t_in inputs followed by t_out targets, stride 1.
struct WindowedDataset {
  Tensor3 x;                          // (N, t_in, D)
  Tensor3 y;                          // (N, t_out, D)
  std::vector<std::uint8_t> y_mask;   // 1 where the target cell was originally missing
  std::vector<std::size_t> starts;    // source row of each window
  std::vector<std::string> detector_ids;
  std::size_t t_in = 36;
  std::size_t t_out = 12;

  std::size_t size() const noexcept { return starts.size(); }
  WindowedDataset subset(std::size_t begin, std::size_t end) const;
  WindowedDataset gather(const std::vector<std::size_t>& indices) const;
};

WindowedDataset make_windows(const SpeedTable& table, std::size_t t_in = 36, std::size_t t_out = 12);

struct Split {
  WindowedDataset train;
  WindowedDataset holdout;
};

/// First floor(ratio * N) windows train, the rest holdout. With
/// strict_no_leak, holdout windows whose inputs overlap a training target row
/// are dropped (the first t_in + t_out - 1 holdout windows).
Split chronological_split(const WindowedDataset& ds, double ratio, bool strict_no_leak = false);

struct TpsSegment {
  double speed;
  double volume;
  double length;
};

struct TpsInput {
  std::vector<TpsSegment> segments;
  double free_flow_speed;
};

struct TpsResult {
  double percent;
  bool clamped;  // raw value exceeded 100% and was reported as 100
  double raw_percent;
};

/// Volume- and length-weighted speed over free-flow speed, in percent.
TpsResult compute_tps(const TpsInput& input);

struct SyntheticOptions {
  double diffusion = 0.6;
  double seasonal = 0.3;
  double noise = 0.1;
  std::size_t period = 96;
  bool flat_seasonal = false;  // seasonal term constant 1 for every node
  bool rescale = true;         // min-max to [20, 70]
  std::size_t burn_in = 96;
  std::int64_t start_minutes = 26297280;  // 2020-01-01T00:00
};

/// Raw state sequence x_{t+1} = diffusion * A x_t + seasonal * s(t) + noise * e_t,
/// rows = steps, before any rescaling.
DenseMatrix simulate_diffusion(std::size_t steps, const graph::DetectorGraph& g, std::uint64_t seed,
                               const SyntheticOptions& opts = {});

/// Synthetic speed table on a 15-minute grid, deterministic per seed.
SpeedTable generate_synthetic(std::size_t steps, const graph::DetectorGraph& g, std::uint64_t seed,
                              const SyntheticOptions& opts = {});

/// One forecast day of the challenge test file: t_in consecutive rows.
struct TestBlock {
  std::string day;
  DenseMatrix values;  // t_in x D
};

/// Same CSV format as the speed table; rows grouped by calendar date, each
/// group must hold exactly t_in rows on the 15-minute grid.
std::vector<TestBlock> parse_test_blocks(const std::string& text, std::vector<std::string>* detector_ids,
                                         std::size_t t_in = 36);
std::vector<TestBlock> load_test_blocks(const std::filesystem::path& path, std::vector<std::string>* detector_ids,
                                        std::size_t t_in = 36);

/// FNV-1a over the raw bytes of the doubles, for pipeline integrity checks.
std::uint64_t checksum(std::span<const double> values);

/// Pearson autocorrelation of a series at the given lag.
double autocorrelation(std::span<const double> series, std::size_t lag);

}  // namespace stgcast::data
