// Acceptance checks, one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unistd.h>

#include "oracles.hpp"
#include "permute.hpp"
#include "stgcast/cli.hpp"
#include "stgcast/data.hpp"
#include "stgcast/eval.hpp"
#include "stgcast/graph.hpp"
#include "stgcast/io.hpp"
#include "stgcast/log.hpp"
#include "stgcast/nn.hpp"
#include "stgcast/train.hpp"

namespace fs = std::filesystem;
using namespace stgcast;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

const fs::path& work_dir() {
  static const fs::path d = [] {
    const fs::path p = fs::temp_directory_path() / ("stgcast_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

std::vector<double> vec(const Tensor3& t) { return {t.values().begin(), t.values().end()}; }

// Toy gradient check with every parameter matrix compared to central differences.
Outcome ac1() {
  const nn::ModelDims dims{4, 3, 2, 3, 3, 2};
  const auto g = graph::ring_graph({"a", "b", "c", "d"});
  std::mt19937_64 rng(2024);
  const Tensor3 x = oracle::random_tensor(rng, 2, 3, 4), y = oracle::random_tensor(rng, 2, 2, 4);
  const auto m = nn::GCGRUModel::initialize(dims, graph::normalized_adjacency(g, 1), 7);
  const auto t0 = Clock::now();
  const auto report = train::gradient_check_model(m, x, y);
  const double secs = seconds_since(t0);
  std::size_t checked = 0;
  for (const auto& p : report.passes) checked += p.params.size();
  Outcome o;
  o.pass = report.passed && report.max_rel_error < 1e-4 && checked == 36 && secs < 30.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "max rel error %.3e over %zu parameter checks, %.2f s", report.max_rel_error, checked,
                secs);
  o.detail = buf;
  return o;
}

Outcome ac2() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> nd(1, 10), kd(1, 3);
  std::uniform_real_distribution<double> pd(0.1, 0.7);
  double worst = 0.0, radius = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = nd(rng), k = kd(rng);
    const oracle::Mat a = oracle::random_adjacency(rng, n, pd(rng));
    const oracle::Mat at = oracle::khop(a, k);
    const oracle::Mat ah = oracle::sym_normalize(at);
    worst = std::max(worst, max_abs_diff(graph::khop_clipped_adjacency(oracle::to(a), k), oracle::to(at)));
    const auto got = graph::symmetric_normalize(graph::khop_clipped_adjacency(oracle::to(a), k), k);
    worst = std::max(worst, max_abs_diff(*got.matrix, oracle::to(ah)));
    radius = std::max(radius, graph::spectral_radius(*got.matrix, 1000));
  }
  Outcome o;
  o.pass = worst <= 1e-12 && radius <= 1.0 + 1e-9;
  char buf[160];
  std::snprintf(buf, sizeof buf, "max entry diff %.3e, max spectral radius %.12f", worst, radius);
  o.detail = buf;
  return o;
}

Outcome ac3() {
  const std::size_t hd = 5, rows = 3, f = 2;
  ad::Tape t;
  const nn::GRUVars gv{t.leaf(DenseMatrix(f + hd, hd)), t.leaf(DenseMatrix(f + hd, hd)), t.leaf(DenseMatrix(f + hd, hd)),
                       t.leaf(DenseMatrix(1, hd)),      t.leaf(DenseMatrix(1, hd)),      t.leaf(DenseMatrix(1, hd))};
  const nn::LSTMVars lv{t.leaf(DenseMatrix(f + hd, hd)), t.leaf(DenseMatrix(f + hd, hd)),
                        t.leaf(DenseMatrix(f + hd, hd)), t.leaf(DenseMatrix(f + hd, hd)),
                        t.leaf(DenseMatrix(1, hd)),      t.leaf(DenseMatrix(1, hd)),
                        t.leaf(DenseMatrix(1, hd)),      t.leaf(DenseMatrix(1, hd))};
  std::mt19937_64 rng(3);
  const DenseMatrix h0 = oracle::random_matrix(rng, rows, hd, -4, 4), c0 = oracle::random_matrix(rng, rows, hd, -4, 4);
  ad::Var h = t.leaf(h0);
  nn::LSTMState s{t.leaf(oracle::random_matrix(rng, rows, hd)), t.leaf(c0)};
  double gru_err = 0.0, lstm_err = 0.0;
  for (int step = 1; step <= 20; ++step) {
    h = nn::gru_step(t.leaf(oracle::random_matrix(rng, rows, f)), h, gv);
    s = nn::lstm_step(t.leaf(oracle::random_matrix(rng, rows, f)), s.h, s.c, lv);
    const double p = std::pow(0.5, step);
    gru_err = std::max(gru_err, max_abs_diff(h.value(), p * h0));
    lstm_err = std::max(lstm_err, max_abs_diff(s.c.value(), p * c0));
  }
  Outcome o;
  o.pass = gru_err <= 1e-12 && lstm_err <= 1e-12;
  char buf[160];
  std::snprintf(buf, sizeof buf, "GRU max err %.3e, LSTM cell max err %.3e over 20 steps", gru_err, lstm_err);
  o.detail = buf;
  return o;
}

Outcome ac4() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> sz(1, 6);
  double worst = 0.0;
  bool ordered = true;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = sz(rng), t = sz(rng), d = sz(rng);
    const Tensor3 y = oracle::random_tensor(rng, n, t, d, 5, 80), p = oracle::random_tensor(rng, n, t, d, 5, 80);
    const DenseMatrix w1 = oracle::random_matrix(rng, sz(rng), sz(rng)), w2 = oracle::random_matrix(rng, sz(rng), 3);
    std::vector<double> ws(w1.values().begin(), w1.values().end());
    ws.insert(ws.end(), w2.values().begin(), w2.values().end());
    const DenseMatrix* weights[] = {&w1, &w2};
    const double lambda = 0.0015;
    worst = std::max(worst, std::fabs(train::regularized_loss_value(y, p, weights, lambda) -
                                      oracle::mse_l1(vec(y), vec(p), ws, lambda)));
    const double a = eval::mae(y, p), r = eval::rmse(y, p);
    worst = std::max(worst, std::fabs(a - oracle::mae(vec(y), vec(p))));
    worst = std::max(worst, std::fabs(r - oracle::rmse(vec(y), vec(p))));
    worst = std::max(worst, std::fabs(eval::mape(y, p).percent - oracle::mape(vec(y), vec(p))));
    ordered = ordered && r >= a;
  }
  const double hand = eval::mape(Tensor3(1, 1, 2, std::vector<double>{100, 100}),
                                 Tensor3(1, 1, 2, std::vector<double>{90, 110}))
                          .percent;
  Outcome o;
  o.pass = worst <= 1e-12 && ordered && hand == 10.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "max diff %.3e, rmse >= mae: %s, hand MAPE %.17g%%", worst, ordered ? "yes" : "no",
                hand);
  o.detail = buf;
  return o;
}

// Settings of the scaled synthetic experiment.
cli::RunConfig synthetic_config() {
  cli::RunConfig c;
  c.speed_csv = (work_dir() / "syn" / "speed.csv").string();
  c.adjacency_csv = (work_dir() / "syn" / "adjacency.csv").string();
  c.out_dir = (work_dir() / "syn_run").string();
  c.train.epochs = 200;
  c.train.split = 0.8;
  c.train.seed = 42;
  c.train.hidden = 16;
  c.train.learning_rate = 3e-3;
  c.train.lambda_reg = 0.0015 / (32.0 * 12.0 * 12.0);
  c.lstm_baseline = true;
  return c;
}

struct SyntheticRun {
  bool ok = false;
  std::string error;
  double seconds = 0.0;
  double model_mae = 0.0, lstm_mae = 0.0, ha_mae = 0.0;
  double mae_15 = 0.0, mae_180 = 0.0;
  std::size_t epochs = 0, lstm_epochs = 0;
};

const SyntheticRun& synthetic_run() {
  static const SyntheticRun run = [] {
    SyntheticRun r;
    try {
      cli::RunConfig gen;
      gen.out_dir = (work_dir() / "syn").string();
      gen.detectors = 12;
      gen.steps = 2000;
      gen.train.seed = 42;
      cli::cmd_gen_synthetic(gen);

      const cli::RunConfig c = synthetic_config();
      const auto t0 = Clock::now();
      const auto summary = cli::cmd_train(c);
      const auto models = cli::cmd_evaluate(c);
      r.seconds = seconds_since(t0);
      r.epochs = summary.model_fit.history.size();
      r.lstm_epochs = summary.lstm_fit.history.size();
      for (const auto& m : models) {
        if (m.name == "gcgru") {
          r.model_mae = m.report.overall.mae;
          r.mae_15 = m.report.per_horizon.front().mae;
          r.mae_180 = m.report.per_horizon.back().mae;
        } else if (m.name == "lstm") {
          r.lstm_mae = m.report.overall.mae;
        } else if (m.name == "ha") {
          r.ha_mae = m.report.overall.mae;
        }
      }
      r.ok = r.model_mae > 0.0 && r.lstm_mae > 0.0 && r.ha_mae > 0.0;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  }();
  return run;
}

Outcome ac5() {
  const SyntheticRun& r = synthetic_run();
  Outcome o;
  if (!r.ok) return {false, "synthetic run failed: " + r.error};
  o.pass = r.model_mae <= 0.6 * r.ha_mae && r.model_mae <= 1.0 * r.lstm_mae && r.epochs <= 200 && r.seconds < 600.0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "GC-GRU MAE %.4f, HA MAE %.4f (ratio %.3f), LSTM MAE %.4f (ratio %.3f), epochs %zu/%zu, %.1f s",
                r.model_mae, r.ha_mae, r.model_mae / r.ha_mae, r.lstm_mae, r.model_mae / r.lstm_mae, r.epochs,
                r.lstm_epochs, r.seconds);
  o.detail = buf;
  return o;
}

Outcome ac6() {
  const SyntheticRun& r = synthetic_run();
  if (!r.ok) return {false, "synthetic run failed: " + r.error};
  Outcome o;
  o.pass = r.mae_180 >= r.mae_15;
  char buf[160];
  std::snprintf(buf, sizeof buf, "MAE at 15 min %.4f, at 180 min %.4f", r.mae_15, r.mae_180);
  o.detail = buf;
  return o;
}

Outcome ac7() {
  const auto g = graph::ring_graph({"n0", "n1", "n2", "n3", "n4"});
  const fs::path data = work_dir() / "det";
  fs::create_directories(data);
  io::atomic_write(data / "speed.csv", data::format_speed_csv(data::generate_synthetic(400, g, 9)));
  io::atomic_write(data / "adjacency.csv", graph::format_adjacency_csv(g));
  auto config = [&](const std::string& out) {
    cli::RunConfig c;
    c.speed_csv = (data / "speed.csv").string();
    c.adjacency_csv = (data / "adjacency.csv").string();
    c.out_dir = (work_dir() / out).string();
    c.t_in = 6;
    c.t_out = 3;
    c.train.epochs = 3;
    c.train.hidden = 6;
    c.train.gc_hidden = 4;
    c.train.gc_out = 3;
    return c;
  };
  cli::cmd_train(config("det_a"));
  cli::cmd_train(config("det_b"));
  bool same = true;
  std::string diff;
  for (const char* f : {"model.ckpt", "history.csv", "lstm.ckpt", "lstm_history.csv"}) {
    const std::string a = io::read_file(work_dir() / "det_a" / f), b = io::read_file(work_dir() / "det_b" / f);
    if (a != b || a.empty()) {
      same = false;
      diff += std::string(" ") + f;
    }
  }
  return {same, same ? "checkpoints and histories byte-identical" : "differing:" + diff};
}

Outcome ac8() {
  const double all_free = data::compute_tps({{{60, 100, 1}, {60, 50, 2}}, 60}).percent;
  const double stopped = data::compute_tps({{{0, 100, 1}, {0, 50, 2}}, 60}).percent;
  const double mixed = data::compute_tps({{{30, 100, 1}, {60, 50, 2}}, 60}).percent;
  bool invariant = true;
  for (double alpha : {1e-3, 0.37, 2.0, 1e5}) {
    const double s = data::compute_tps({{{30, 100 * alpha, 1}, {60, 50 * alpha, 2}}, 60}).percent;
    invariant = invariant && std::fabs(s - 75.0) <= 1e-12;
  }
  Outcome o;
  o.pass = std::fabs(all_free - 100.0) <= 1e-12 && std::fabs(stopped) <= 1e-12 && std::fabs(mixed - 75.0) <= 1e-12 &&
           invariant;
  char buf[160];
  std::snprintf(buf, sizeof buf, "free %.15g%%, stopped %.15g%%, mixed %.15g%%, Q-scaling invariant: %s", all_free,
                stopped, mixed, invariant ? "yes" : "no");
  o.detail = buf;
  return o;
}

Outcome ac9() {
  data::SpeedTable t;
  const std::size_t rows = 14551, d = 3;
  t.detector_ids = {"a", "b", "c"};
  t.values = DenseMatrix(rows, d);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(5.0, 75.0);
  for (std::size_t r = 0; r < rows; ++r) {
    t.timestamps.push_back(26297280 + static_cast<std::int64_t>(r) * 15);
    for (std::size_t c = 0; c < d; ++c) t.values(r, c) = u(rng);
  }
  t.missing_mask.assign(rows * d, 0);
  const auto w = data::make_windows(t);
  const auto split = data::chronological_split(w, 0.8);
  std::set<std::size_t> train_starts(split.train.starts.begin(), split.train.starts.end());
  bool disjoint = split.train.size() + split.holdout.size() == w.size();
  for (std::size_t s : split.holdout.starts) disjoint = disjoint && train_starts.count(s) == 0;

  const auto stats = train::NormStats::from_training(split.train);
  const double round = max_abs_diff(train::denormalize(train::normalize(w.y, stats), stats).values(), w.y.values());

  cli::Submission sub;
  sub.model = "gcgru";
  sub.detector_ids = t.detector_ids;
  for (int day = 0; day < 15; ++day) {
    sub.days.push_back("2020-03-" + std::to_string(10 + day));
    sub.predictions.push_back(oracle::random_matrix(rng, 12, d, 0.0, 80.0));
  }
  sub.predictions[0](0, 0) = 1.0 / 3.0;
  sub.predictions[0](0, 1) = 5e-324;
  const cli::Submission back = cli::parse_submission(cli::format_submission(sub));
  bool exact = back.predictions.size() == sub.predictions.size() && back.days == sub.days;
  for (std::size_t i = 0; exact && i < sub.predictions.size(); ++i) exact = back.predictions[i] == sub.predictions[i];

  Outcome o;
  o.pass = w.size() == 14504 && disjoint && round <= 1e-12 && exact;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu windows, splits disjoint: %s, round-trip err %.3e, submission exact: %s",
                w.size(), disjoint ? "yes" : "no", round, exact ? "yes" : "no");
  o.detail = buf;
  return o;
}

Outcome ac10() {
  const nn::ModelDims dims{4, 3, 2, 3, 3, 2};
  std::mt19937_64 rng(10);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const graph::DetectorGraph g{{"a", "b", "c", "d"}, oracle::to(oracle::random_adjacency(rng, 4, 0.5))};
    const auto m = nn::GCGRUModel::initialize(dims, graph::normalized_adjacency(g, 1), 50 + rep);
    std::vector<std::size_t> perm(4);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Tensor3 x = oracle::random_tensor(rng, 3, 3, 4);
    const Tensor3 want = permute::nodes(nn::model_forward(m, x), perm);
    const Tensor3 got = nn::model_forward(permute::model(m, perm), permute::nodes(x, perm));
    worst = std::max(worst, max_abs_diff(got.values(), want.values()));
  }
  Outcome o;
  o.pass = worst <= 1e-10;
  char buf[120];
  std::snprintf(buf, sizeof buf, "max deviation %.3e over 20 random relabelings", worst);
  o.detail = buf;
  return o;
}

}  // namespace

int main() {
  log::set_level(log::Level::warn);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 gradient check", ac1},          {"AC2 graph normalization oracle", ac2},
      {"AC3 zero-parameter cell decay", ac3}, {"AC4 loss and metric oracles", ac4},
      {"AC5 learning beats baselines", ac5},  {"AC6 error grows with horizon", ac6},
      {"AC7 deterministic training", ac7},    {"AC8 TPS hand cases", ac8},
      {"AC9 pipeline integrity", ac9},        {"AC10 permutation equivariance", ac10},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(work_dir());
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
