#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "stgcast/error.hpp"
#include "stgcast/eval.hpp"

using namespace stgcast;
using namespace stgcast::eval;

namespace {

std::vector<double> vec(const Tensor3& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST_CASE("metrics match loop oracles") {
  std::mt19937_64 rng(44);
  for (int rep = 0; rep < 100; ++rep) {
    const Tensor3 y = oracle::random_tensor(rng, 3, 4, 5, 10, 70), p = oracle::random_tensor(rng, 3, 4, 5, 10, 70);
    const double a = mae(y, p), r = rmse(y, p);
    CHECK(std::fabs(a - oracle::mae(vec(y), vec(p))) < 1e-12);
    CHECK(std::fabs(r - oracle::rmse(vec(y), vec(p))) < 1e-12);
    CHECK(std::fabs(mape(y, p).percent - oracle::mape(vec(y), vec(p))) < 1e-12);
    CHECK(r >= a);
  }
}

TEST_CASE("mape hand case and exclusions") {
  const Tensor3 y(1, 1, 2, std::vector<double>{100, 100});
  const Tensor3 p(1, 1, 2, std::vector<double>{90, 110});
  CHECK(mape(y, p).percent == 10.0);
  CHECK(mae(y, p) == 10.0);
  CHECK(rmse(y, p) == 10.0);

  const Tensor3 yz(1, 1, 3, std::vector<double>{0, 50, 100});
  const Tensor3 pz(1, 1, 3, std::vector<double>{5, 55, 100});
  const auto m = mape(yz, pz);
  CHECK(m.excluded == 1);
  CHECK(m.percent == doctest::Approx(5.0));
  const std::vector<std::uint8_t> mask{0, 1, 0};
  CHECK(mape(yz, pz, mask).excluded == 2);
  CHECK(mape(yz, pz, mask).percent == 0.0);
  CHECK(mae(yz, pz, mask) == doctest::Approx(2.5));

  const std::vector<std::uint8_t> all{1, 1, 1};
  CHECK_THROWS_AS(mae(yz, pz, all), DegenerateError);
  CHECK_THROWS_AS(mae(Tensor3(0, 1, 3), Tensor3(0, 1, 3)), DegenerateError);
  CHECK_THROWS_AS(mae(yz, Tensor3(1, 1, 2)), ShapeError);
}

TEST_CASE("historical average and clipping") {
  Tensor3 x(1, 3, 2, std::vector<double>{1, 10, 2, 20, 3, 30});
  const Tensor3 h = historical_average_forecast(x, 4);
  CHECK(h.t() == 4);
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(h(0, s, 0) == 2.0);
    CHECK(h(0, s, 1) == 20.0);
  }
  const Tensor3 c = clip(Tensor3(1, 1, 3, std::vector<double>{-0.5, 0.5, 1.5}), 0.0, 1.0);
  CHECK(c.values()[0] == 0.0);
  CHECK(c.values()[1] == 0.5);
  CHECK(c.values()[2] == 1.0);
}

TEST_CASE("box statistics") {
  const BoxStats b = box_stats({1, 2, 3, 4, 5});
  CHECK(b.min == 1);
  CHECK(b.q25 == 2);
  CHECK(b.median == 3);
  CHECK(b.q75 == 4);
  CHECK(b.max == 5);
  CHECK(b.n_outliers == 0);
  CHECK(box_stats({1, 1, 1, 1, 100}).n_outliers == 1);
  CHECK(box_stats({1, 2, 3, 4}).median == 2.5);
}

TEST_CASE("horizon report") {
  std::mt19937_64 rng(7);
  const Tensor3 y = oracle::random_tensor(rng, 6, 12, 3, 20, 70), p = oracle::random_tensor(rng, 6, 12, 3, 20, 70);
  const auto r = horizon_report(y, p, {"a", "b", "c"});
  REQUIRE(r.per_horizon.size() == 12);
  CHECK(r.per_horizon[0].minutes == 15);
  CHECK(r.per_horizon[11].minutes == 180);
  CHECK(r.groups.size() == 3);
  CHECK(r.per_detector.size() == 3);
  CHECK(r.boxplot.size() == 12);
  CHECK(r.overall.mae == doctest::Approx(mae(y, p)).epsilon(1e-12));

  // per-horizon MAE equals the metric on that step alone
  for (std::size_t s = 0; s < 12; ++s) {
    std::vector<double> ys, ps;
    for (std::size_t n = 0; n < 6; ++n)
      for (std::size_t k = 0; k < 3; ++k) {
        ys.push_back(y(n, s, k));
        ps.push_back(p(n, s, k));
      }
    CHECK(std::fabs(r.per_horizon[s].mae - oracle::mae(ys, ps)) < 1e-12);
  }
  double g1 = 0.0;
  for (std::size_t s = 0; s < 4; ++s) g1 += r.per_horizon[s].mae / 4.0;
  CHECK(r.groups[0].label == "1h");
  CHECK(r.groups[0].mae == doctest::Approx(g1).epsilon(1e-12));

  CHECK(format_horizon_csv(r).rfind("minutes,mae,rmse,mape\n15,", 0) == 0);
  CHECK(format_detector_csv(r).rfind("detector_id,mae\na,", 0) == 0);
  CHECK(format_boxplot_csv(r).rfind("minutes,min,q25,median,q75,max,n_outliers\n", 0) == 0);

  const auto dir = std::filesystem::temp_directory_path() / "stgcast_eval_test";
  std::filesystem::remove_all(dir);
  write_report(dir, r);
  CHECK(std::filesystem::exists(dir / "report_horizon.csv"));
  CHECK(std::filesystem::exists(dir / "report_detector.csv"));
  CHECK(std::filesystem::exists(dir / "report_boxplot.csv"));
  std::filesystem::remove_all(dir);
}
