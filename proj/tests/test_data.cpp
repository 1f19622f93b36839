#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <sstream>

#include "oracles.hpp"
#include "stgcast/data.hpp"
#include "stgcast/error.hpp"
#include "stgcast/train.hpp"

using namespace stgcast;
using namespace stgcast::data;

namespace {

SpeedTable ramp_table(std::size_t rows, std::size_t d) {
  SpeedTable t;
  for (std::size_t c = 0; c < d; ++c) t.detector_ids.push_back("d" + std::to_string(c));
  t.values = DenseMatrix(rows, d);
  for (std::size_t r = 0; r < rows; ++r) {
    t.timestamps.push_back(26297280 + static_cast<std::int64_t>(r) * kSampleMinutes);
    for (std::size_t c = 0; c < d; ++c) t.values(r, c) = 20.0 + static_cast<double>(r % 97) + 0.25 * c;
  }
  t.missing_mask.assign(rows * d, 0);
  return t;
}

}  // namespace

TEST_CASE("timestamps") {
  CHECK(parse_timestamp("1970-01-01T00:00") == 0);
  CHECK(parse_timestamp("1970-01-02 00:15:00") == 1455);
  CHECK(parse_timestamp("2020-01-01T00:00") == 26297280);
  CHECK(format_timestamp(26297280) == "2020-01-01T00:00:00");
  CHECK_THROWS_AS(parse_timestamp("2020-13-01T00:00"), ParseError);
  CHECK_THROWS_AS(parse_timestamp("yesterday"), ParseError);
}

TEST_CASE("speed csv cleaning keeps a missing mask") {
  const auto t = parse_speed_csv(
      "timestamp,a,b\n2020-01-01T00:00,55.5,none\n2020-01-01T00:15,,61\n2020-01-01T00:30,50,60\n");
  CHECK(t.detectors() == 2);
  CHECK(t.rows() == 3);
  CHECK(t.values(0, 1) == 0.0);
  CHECK(t.values(1, 0) == 0.0);
  CHECK(t.missing_mask[1] == 1);
  CHECK(t.missing_mask[2] == 1);
  CHECK(t.missing_count() == 2);
  CHECK(t.values(0, 0) == 55.5);
  CHECK(parse_speed_csv(format_speed_csv(t)).values == t.values);

  CHECK_THROWS_AS(parse_speed_csv("timestamp,a,b\n2020-01-01T00:00,1\n"), ParseError);
  CHECK_THROWS_AS(parse_speed_csv("timestamp,a\n2020-01-01T00:00,1\n2020-01-01T00:45,1\n"), ParseError);
  CHECK_THROWS_AS(parse_speed_csv("timestamp,a\n2020-01-01T00:00,fast\n"), ParseError);
  CHECK_THROWS_AS(load_speed_csv("/nonexistent/speed.csv"), IoError);
}

TEST_CASE("header width sets the detector count") {
  std::ostringstream s;
  s << "timestamp";
  for (int i = 0; i < 87; ++i) s << ",d" << i;
  s << "\n2020-01-01T00:00";
  for (int i = 0; i < 87; ++i) s << ",50";
  s << "\n";
  CHECK(parse_speed_csv(s.str()).detectors() == 87);
}

TEST_CASE("windowing") {
  const auto t = ramp_table(14551, 2);
  const auto w = make_windows(t);
  CHECK(w.size() == 14504);
  CHECK(w.x.t() == 36);
  CHECK(w.y.t() == 12);
  for (std::size_t i : {std::size_t{0}, std::size_t{5000}, std::size_t{14503}}) {
    for (std::size_t s = 0; s < 36; ++s) CHECK(w.x(i, s, 1) == t.values(i + s, 1));
    for (std::size_t s = 0; s < 12; ++s) CHECK(w.y(i, s, 0) == t.values(i + 36 + s, 0));
  }
  // overlapping windows share rows
  for (std::size_t s = 1; s < 36; ++s) CHECK(w.x(7, s, 0) == w.x(8, s - 1, 0));
  CHECK(make_windows(ramp_table(48, 1)).size() == 1);
  CHECK_THROWS_AS(make_windows(ramp_table(47, 1)), ContractError);

  // reshaping never alters values
  const auto small = ramp_table(60, 3);
  const auto ws = make_windows(small, 36, 12);
  std::vector<double> rebuilt;
  for (std::size_t r = 0; r < 36; ++r)
    for (std::size_t c = 0; c < 3; ++c) rebuilt.push_back(ws.x(0, r, c));
  for (std::size_t i = 0; i < ws.size(); ++i)
    for (std::size_t c = 0; c < 3; ++c) rebuilt.push_back(ws.y(i, 0, c));
  for (std::size_t s = 1; s < 12; ++s)
    for (std::size_t c = 0; c < 3; ++c) rebuilt.push_back(ws.y(ws.size() - 1, s, c));
  CHECK(checksum(rebuilt) == checksum(small.values.values()));
}

TEST_CASE("chronological split") {
  const auto w = make_windows(ramp_table(500, 2), 36, 12);
  const auto s = chronological_split(w, 0.8);
  CHECK(s.train.size() == static_cast<std::size_t>(0.8 * w.size()));
  CHECK(s.train.size() + s.holdout.size() == w.size());
  std::set<std::size_t> seen(s.train.starts.begin(), s.train.starts.end());
  for (std::size_t st : s.holdout.starts) CHECK(seen.count(st) == 0);
  CHECK(s.train.starts.back() < s.holdout.starts.front());

  const auto strict = chronological_split(w, 0.8, true);
  CHECK(strict.holdout.size() == s.holdout.size() - 47);
  const std::size_t last_target = strict.train.starts.back() + 36 + 12 - 1;
  CHECK(strict.holdout.starts.front() > last_target);
  CHECK_THROWS_AS(chronological_split(w, 1.0), ContractError);
}

TEST_CASE("normalize and denormalize round trip on windows") {
  const auto w = make_windows(ramp_table(200, 3), 36, 12);
  const auto stats = train::NormStats::from_training(w);
  const auto n = train::normalize(w, stats);
  for (double v : n.x.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(max_abs_diff(train::denormalize(n.y, stats).values(), w.y.values()) < 1e-12);
}

TEST_CASE("traffic performance score") {
  const TpsInput free{{{60, 100, 1}, {60, 50, 2}}, 60};
  CHECK(compute_tps(free).percent == doctest::Approx(100.0).epsilon(1e-12));
  const TpsInput stopped{{{0, 100, 1}, {0, 50, 2}}, 60};
  CHECK(compute_tps(stopped).percent == 0.0);
  const TpsInput mixed{{{30, 100, 1}, {60, 50, 2}}, 60};
  CHECK(std::fabs(compute_tps(mixed).percent - 75.0) < 1e-12);

  for (double alpha : {0.001, 0.5, 3.0, 1e6}) {
    TpsInput scaled = mixed;
    for (auto& s : scaled.segments) s.volume *= alpha;
    CHECK(std::fabs(compute_tps(scaled).percent - 75.0) < 1e-12);
  }
  TpsInput faster = mixed;
  faster.segments[0].speed = 40;
  CHECK(compute_tps(faster).percent >= compute_tps(mixed).percent);

  const TpsInput over{{{80, 1, 1}}, 60};
  CHECK(compute_tps(over).clamped);
  CHECK(compute_tps(over).percent == 100.0);
  CHECK_THROWS_AS(compute_tps(TpsInput{{{50, 0, 1}}, 60}), DegenerateError);
}

TEST_CASE("synthetic generator") {
  const auto g = graph::ring_graph({"a", "b", "c", "d", "e", "f"});
  const auto a = generate_synthetic(400, g, 42), b = generate_synthetic(400, g, 42), c = generate_synthetic(400, g, 43);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.timestamps == b.timestamps);
  const auto [lo, hi] = std::minmax_element(a.values.values().begin(), a.values.values().end());
  CHECK(*lo == doctest::Approx(20.0));
  CHECK(*hi == doctest::Approx(70.0));
  CHECK(parse_speed_csv(format_speed_csv(a)).values == a.values);

  std::vector<double> col;
  for (std::size_t r = 0; r < a.rows(); ++r) col.push_back(a.values(r, 2));
  CHECK(autocorrelation(col, 96) > autocorrelation(col, 48));

  SyntheticOptions quiet;
  quiet.noise = 0.0;
  quiet.flat_seasonal = true;
  quiet.rescale = false;
  const DenseMatrix x = simulate_diffusion(300, g, 1, quiet);
  // fixed point of x = 0.6 A x + 0.3 on a regular graph is 0.3 / 0.4
  for (std::size_t c = 0; c < 6; ++c) CHECK(x(299, c) == doctest::Approx(0.75).epsilon(1e-9));
  CHECK_THROWS_AS(generate_synthetic(95, g, 1), ContractError);
}

TEST_CASE("test blocks group rows by day") {
  std::ostringstream s;
  s << "timestamp,a,b\n";
  for (int day = 1; day <= 15; ++day)
    for (int r = 0; r < 36; ++r) {
      char ts[32];
      std::snprintf(ts, sizeof ts, "2020-02-%02dT%02d:%02d", day, r / 4, (r % 4) * 15);
      s << ts << "," << 40 + r << ",none\n";
    }
  std::vector<std::string> ids;
  const auto blocks = parse_test_blocks(s.str(), &ids);
  CHECK(blocks.size() == 15);
  CHECK(ids == std::vector<std::string>{"a", "b"});
  CHECK(blocks[3].day == "2020-02-04");
  CHECK(blocks[0].values(35, 0) == 75.0);
  CHECK(blocks[0].values(0, 1) == 0.0);

  try {
    parse_test_blocks("timestamp,a\n2020-02-01T00:00,1\n2020-02-01T00:15,1\n", nullptr);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("2020-02-01") != std::string::npos);
  }
}
