#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "stgcast/checkpoint.hpp"
#include "stgcast/cli.hpp"
#include "stgcast/data.hpp"
#include "stgcast/error.hpp"
#include "stgcast/graph.hpp"
#include "stgcast/io.hpp"
#include "stgcast/log.hpp"
#include "stgcast/simd/kernels.hpp"

namespace stgcast::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Prepared {
  data::SpeedTable table;
  graph::DetectorGraph graph;  // pruned to the table's detectors; empty without an adjacency file
  graph::NormalizedAdjacency a_hat;
  data::Split raw;
  train::NormStats stats;
  data::WindowedDataset train_n;
  data::WindowedDataset holdout_n;
};

void require_path(const std::string& value, const char* key) {
  if (value.empty()) throw ConfigError("cli", std::string(key) + " is required");
  if (!fs::exists(value)) throw IoError("cli", std::string(key) + " not found: " + value);
}

Prepared prepare(const RunConfig& cfg, bool need_graph) {
  require_path(cfg.speed_csv, "speed_csv");
  Prepared p;
  p.table = data::load_speed_csv(cfg.speed_csv);
  if (need_graph || !cfg.adjacency_csv.empty()) {
    require_path(cfg.adjacency_csv, "adjacency_csv");
    graph::AdjacencyLoadReport rep;
    const graph::DetectorGraph full = graph::load_adjacency_csv(cfg.adjacency_csv, &rep);
    auto pruned = graph::prune_to_detectors(full, p.table.detector_ids);
    if (!pruned.dropped.empty()) {
      log::info("cli", std::to_string(pruned.dropped.size()) + " graph nodes without speed data dropped");
    }
    if (!pruned.missing.empty()) {
      log::warn("cli", std::to_string(pruned.missing.size()) + " detectors absent from the graph kept as isolated nodes");
    }
    p.graph = std::move(pruned.graph);
    p.a_hat = graph::normalized_adjacency(p.graph, cfg.train.k_hops);
  }
  const auto windows = data::make_windows(p.table, cfg.t_in, cfg.t_out);
  p.raw = data::chronological_split(windows, cfg.train.split, cfg.strict_no_leak);
  p.stats = train::NormStats::from_training(p.raw.train);
  p.train_n = train::normalize(p.raw.train, p.stats);
  p.holdout_n = train::normalize(p.raw.holdout, p.stats);
  log::info("cli", std::to_string(p.raw.train.size()) + " training windows, " + std::to_string(p.raw.holdout.size()) +
                       " holdout windows");
  return p;
}

nn::ModelDims model_dims(const RunConfig& cfg, const train::TrainConfig& tc, std::size_t d) {
  return nn::ModelDims{d, cfg.t_in, cfg.t_out, tc.hidden, tc.gc_hidden, tc.gc_out};
}

json environment() {
  return json{{"kernels", std::string(simd::active_kernels().name)},
              {"compiler", __VERSION__},
              {"hardware_threads", std::thread::hardware_concurrency()}};
}

// Forecasts in data units; the linear-head baseline is clipped to the
// normalized range first.
Tensor3 forecast(const nn::SequenceModel& model, const Tensor3& x_norm, const train::NormStats& stats) {
  Tensor3 pred = nn::model_forward(model, x_norm);
  if (model.kind() == "lstm") pred = eval::clip(pred, 0.0, 1.0);
  return train::denormalize(pred, stats);
}

std::string fit_line(const char* name, const train::FitResult& r) {
  return std::string(name) + ": " + std::to_string(r.history.size()) + " epochs, best epoch " +
         std::to_string(r.best_epoch) + ", best val loss " + io::format_double(r.best_val_loss);
}

train::Grid parse_grid(const std::string& grid_arg) {
  if (grid_arg.empty()) throw ConfigError("cli", "sweep needs a grid (JSON object of name -> list of values)");
  const std::string text = fs::exists(grid_arg) ? io::read_file(grid_arg) : grid_arg;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error&) {
    throw ConfigError("cli", "grid is neither a readable file nor valid JSON: " + grid_arg);
  }
  if (!doc.is_object() || doc.empty()) throw ConfigError("cli", "grid must be a non-empty JSON object");
  train::Grid grid;
  for (const auto& [key, vals] : doc.items()) {
    if (!vals.is_array()) throw ConfigError("cli", "grid entry '" + key + "' must be a list");
    std::vector<double> v;
    for (const auto& x : vals) {
      if (!x.is_number()) throw ConfigError("cli", "grid entry '" + key + "' must hold numbers");
      v.push_back(x.get<double>());
    }
    grid.emplace_back(key, std::move(v));
  }
  return grid;
}

}  // namespace

TrainSummary cmd_train(const RunConfig& cfg) {
  cfg.train.validate();
  Prepared p = prepare(cfg, true);
  const std::size_t d = p.table.detectors();
  const nn::ModelDims dims = model_dims(cfg, cfg.train, d);
  const fs::path out(cfg.out_dir);

  TrainSummary summary;
  auto model = nn::GCGRUModel::initialize(dims, p.a_hat, cfg.train.seed);
  summary.model_fit = train::fit(model, p.train_n, p.holdout_n, cfg.train);
  log::info("train", fit_line("gcgru", summary.model_fit));
  save_checkpoint(cfg.checkpoint_path(), model, p.stats, p.table.detector_ids, cfg.train.k_hops, cfg.train.seed);
  io::atomic_write(out / "history.csv", train::format_history_csv(summary.model_fit.history, cfg.record_seconds));

  if (cfg.lstm_baseline) {
    auto lstm = nn::LSTMModel::initialize(dims, cfg.train.seed);
    summary.lstm_fit = train::fit(lstm, p.train_n, p.holdout_n, cfg.train);
    summary.lstm_trained = true;
    log::info("train", fit_line("lstm", summary.lstm_fit));
    save_checkpoint(cfg.lstm_checkpoint_path(), lstm, p.stats, p.table.detector_ids, cfg.train.k_hops,
                    cfg.train.seed);
    io::atomic_write(out / "lstm_history.csv", train::format_history_csv(summary.lstm_fit.history, cfg.record_seconds));
  }

  json manifest;
  manifest["command"] = "train";
  manifest["config"] = json::parse(config_to_json(cfg));
  manifest["seed"] = cfg.train.seed;
  manifest["data"] = {{"speed_csv", io::file_checksum(cfg.speed_csv)},
                      {"adjacency_csv", io::file_checksum(cfg.adjacency_csv)},
                      {"rows", p.table.rows()},
                      {"detectors", d}};
  manifest["outputs"] = {{"checkpoint", io::file_checksum(cfg.checkpoint_path())}};
  manifest["train_seconds"] = {{"gcgru", summary.model_fit.train_seconds}};
  manifest["best_epoch"] = {{"gcgru", summary.model_fit.best_epoch}};
  if (summary.lstm_trained) {
    manifest["outputs"]["lstm_checkpoint"] = io::file_checksum(cfg.lstm_checkpoint_path());
    manifest["train_seconds"]["lstm"] = summary.lstm_fit.train_seconds;
    manifest["best_epoch"]["lstm"] = summary.lstm_fit.best_epoch;
  }
  manifest["environment"] = environment();
  io::atomic_write(out / "run_manifest.json", manifest.dump(2) + "\n");
  return summary;
}

std::vector<EvalModel> cmd_evaluate(const RunConfig& cfg) {
  Prepared p = prepare(cfg, false);
  const auto& ids = p.table.detector_ids;
  const data::WindowedDataset& hold = p.raw.holdout;
  const eval::Mask mask = hold.y_mask;

  std::vector<std::pair<std::string, Tensor3>> preds;
  std::vector<double> seconds;

  auto t0 = Clock::now();
  preds.emplace_back("ha", eval::historical_average_forecast(hold.x, cfg.t_out));
  seconds.push_back(seconds_since(t0));

  auto add_model = [&](const std::string& name, const std::string& path, bool required) {
    if (!fs::exists(path)) {
      if (required) throw IoError("cli", "checkpoint not found: " + path);
      log::info("cli", "no " + name + " checkpoint at " + path + ", skipped");
      return;
    }
    const Checkpoint ck = load_checkpoint(path);
    check_compatible(ck, ids);
    const auto& md = ck.model->dims();
    if (md.t_in != cfg.t_in || md.t_out != cfg.t_out) {
      throw ShapeError("cli", "checkpoint windows " + std::to_string(md.t_in) + "/" + std::to_string(md.t_out) +
                                  " do not match config " + std::to_string(cfg.t_in) + "/" + std::to_string(cfg.t_out));
    }
    const Tensor3 x_norm = train::normalize(hold.x, ck.stats);
    const auto t1 = Clock::now();
    Tensor3 pred = forecast(*ck.model, x_norm, ck.stats);
    seconds.push_back(seconds_since(t1));
    preds.emplace_back(name, std::move(pred));
  };
  add_model("gcgru", cfg.checkpoint_path(), !cfg.checkpoint.empty());
  if (cfg.lstm_baseline) add_model("lstm", cfg.lstm_checkpoint_path(), false);
  if (cfg.oracle) {
    preds.emplace_back("oracle", hold.y);
    seconds.push_back(0.0);
  }

  const fs::path out = fs::path(cfg.out_dir) / "eval";
  std::vector<EvalModel> results;
  std::string summary = "model,mae,rmse,mape,mape_excluded\n";
  json timing = json::object();
  for (std::size_t m = 0; m < preds.size(); ++m) {
    const auto& [name, pred] = preds[m];
    EvalModel em{name, eval::horizon_report(hold.y, pred, ids, mask, cfg.mape_epsilon), seconds[m]};
    eval::write_report(out / name, em.report);
    if (cfg.normalized_report) {
      const auto rn = eval::horizon_report(train::normalize(hold.y, p.stats), train::normalize(pred, p.stats), ids, mask,
                                           cfg.mape_epsilon);
      eval::write_report(out / (name + "_normalized"), rn);
    }
    summary += name + "," + io::format_double(em.report.overall.mae) + "," + io::format_double(em.report.overall.rmse) +
               "," + io::format_double(em.report.overall.mape) + "," + std::to_string(em.report.excluded_count) + "\n";
    timing[name] = em.inference_seconds;
    results.push_back(std::move(em));
  }
  io::atomic_write(out / "summary.csv", summary);
  io::atomic_write(out / "inference_seconds.json", timing.dump(2) + "\n");

  std::string pvt = "window_start,detector_id,minutes,truth";
  for (const auto& [name, pred] : preds) pvt += "," + name;
  pvt += "\n";
  for (std::size_t i = 0; i < hold.size(); ++i) {
    const std::string stamp = data::format_timestamp(p.table.timestamps[hold.starts[i]]);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      for (std::size_t j = 0; j < cfg.t_out; ++j) {
        pvt += stamp + "," + ids[k] + "," + std::to_string((j + 1) * data::kSampleMinutes) + ",";
        pvt += hold.y_mask[(i * cfg.t_out + j) * ids.size() + k] ? "none" : io::format_double(hold.y(i, j, k));
        for (const auto& pr : preds) pvt += "," + io::format_double(pr.second(i, j, k));
        pvt += "\n";
      }
    }
  }
  io::atomic_write(out / "predictions_vs_truth.csv", pvt);
  return results;
}

std::string format_submission(const Submission& s) {
  auto num = [](double v) {
    if (!std::isfinite(v)) throw NumericFault("cli", "non-finite value in submission");
    return io::format_double17(v);
  };
  std::string out = "{\"days\":[";
  for (std::size_t b = 0; b < s.days.size(); ++b) {
    if (b) out += ",";
    out += "{\"day\":" + json(s.days[b]).dump() + ",\"prediction\":[";
    const DenseMatrix& m = s.predictions[b];
    for (std::size_t r = 0; r < m.rows(); ++r) {
      out += r ? ",[" : "[";
      for (std::size_t c = 0; c < m.cols(); ++c) out += (c ? "," : "") + num(m(r, c));
      out += "]";
    }
    out += "]}";
  }
  out += "],\"detector_ids\":" + json(s.detector_ids).dump() + ",\"model\":" + json(s.model).dump() + "}\n";
  return out;
}

Submission parse_submission(const std::string& json_text) {
  Submission s;
  try {
    const json doc = json::parse(json_text);
    s.model = doc.at("model").get<std::string>();
    s.detector_ids = doc.at("detector_ids").get<std::vector<std::string>>();
    for (const auto& day : doc.at("days")) {
      s.days.push_back(day.at("day").get<std::string>());
      const auto rows = day.at("prediction").get<std::vector<std::vector<double>>>();
      DenseMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) throw ParseError("cli", "ragged prediction for day " + s.days.back());
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
      }
      s.predictions.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw ParseError("cli", std::string("malformed submission: ") + e.what());
  }
  return s;
}

Submission cmd_predict(const RunConfig& cfg) {
  require_path(cfg.test_csv, "test_csv");
  const Checkpoint ck = load_checkpoint(cfg.checkpoint_path());
  const auto& md = ck.model->dims();
  std::vector<std::string> ids;
  const auto blocks = data::load_test_blocks(cfg.test_csv, &ids, md.t_in);
  check_compatible(ck, ids);

  Tensor3 x(blocks.size(), md.t_in, md.d);
  for (std::size_t b = 0; b < blocks.size(); ++b) x.set_slice(b, blocks[b].values);
  const Tensor3 pred = forecast(*ck.model, train::normalize(x, ck.stats), ck.stats);

  Submission s;
  s.model = std::string(ck.model->kind());
  s.detector_ids = ids;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    s.days.push_back(blocks[b].day);
    s.predictions.push_back(pred.slice(b));
  }
  io::atomic_write(fs::path(cfg.out_dir) / "submission.json", format_submission(s));
  log::info("cli", "wrote " + std::to_string(blocks.size()) + " day forecasts");
  return s;
}

train::GridResult cmd_sweep(const RunConfig& cfg) {
  const train::Grid grid = parse_grid(cfg.grid);
  cfg.train.validate();
  Prepared p = prepare(cfg, true);
  const std::size_t d = p.table.detectors();
  const graph::DetectorGraph g = p.graph;
  auto factory = [&cfg, g, d](const train::TrainConfig& tc) -> std::unique_ptr<nn::SequenceModel> {
    return std::make_unique<nn::GCGRUModel>(
        nn::GCGRUModel::initialize(model_dims(cfg, tc, d), graph::normalized_adjacency(g, tc.k_hops), tc.seed));
  };
  const auto result =
      train::grid_search(grid, p.train_n, p.holdout_n, p.stats, cfg.train, factory, cfg.jobs, cfg.mape_epsilon);
  io::atomic_write(fs::path(cfg.out_dir) / "grid_results.csv", train::format_grid_csv(result));
  return result;
}

void cmd_gen_synthetic(const RunConfig& cfg) {
  if (cfg.detectors < 2) throw ConfigError("cli", "gen-synthetic needs at least 2 detectors");
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < cfg.detectors; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "det%03zu", i);
    ids.emplace_back(buf);
  }
  const auto g = graph::ring_graph(ids);
  const auto table = data::generate_synthetic(cfg.steps, g, cfg.train.seed);
  const fs::path out(cfg.out_dir);
  io::atomic_write(out / "adjacency.csv", graph::format_adjacency_csv(g));
  io::atomic_write(out / "speed.csv", data::format_speed_csv(table));
  log::info("cli", "wrote " + std::to_string(cfg.steps) + " x " + std::to_string(cfg.detectors) + " synthetic table");
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Graph-convolutional GRU traffic speed forecasting"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  struct Sub {
    CLI::App* app;
    std::string config_path;
    std::vector<std::pair<std::string, CLI::Option*>> overrides;
    std::map<std::string, std::string> text;
    std::map<std::string, bool> flags;
  };
  const std::vector<std::pair<std::string, std::string>> names = {
      {"train", "Train the forecaster (and the LSTM baseline)"},
      {"evaluate", "Score checkpoints and baselines on the holdout"},
      {"predict", "Forecast test day blocks into a submission JSON"},
      {"sweep", "Grid search over hyperparameters"},
      {"gen-synthetic", "Write a synthetic ring-graph dataset"}};

  std::vector<std::unique_ptr<Sub>> subs;
  for (const auto& [name, help] : names) {
    auto s = std::make_unique<Sub>();
    s->app = app.add_subcommand(name, help);
    s->app->add_option("--config", s->config_path, "JSON config or run manifest");
    for (const auto& key : config_keys()) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      // Bool fields are flags that also accept =true / =false.
      static const std::set<std::string> bools = {"regularize_biases", "strict_no_leak", "normalized_report",
                                                  "record_seconds",    "lstm_baseline",  "oracle"};
      const bool is_bool = bools.count(key) > 0;
      if (is_bool) {
        s->flags[key] = false;
        s->overrides.emplace_back(key, s->app->add_flag(flag, s->flags[key]));
      } else {
        s->overrides.emplace_back(key, s->app->add_option(flag, s->text[key]));
      }
    }
    subs.push_back(std::move(s));
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  log::set_level(quiet ? log::Level::warn : log::Level::info);

  try {
    for (const auto& s : subs) {
      if (!s->app->parsed()) continue;
      RunConfig cfg = s->config_path.empty() ? RunConfig{} : load_config(s->config_path);
      if (const char* env = std::getenv("STGCAST_SEED"); env && *env) set_config_value(cfg, "seed", env);
      for (const auto& [key, opt] : s->overrides) {
        if (opt->count() == 0) continue;
        if (s->flags.count(key)) {
          set_config_value(cfg, key, s->flags[key] ? "true" : "false");
        } else {
          set_config_value(cfg, key, s->text[key]);
        }
      }
      const std::string name = s->app->get_name();
      if (name == "train") {
        cmd_train(cfg);
      } else if (name == "evaluate") {
        for (const auto& m : cmd_evaluate(cfg)) {
          std::printf("%-8s MAE %.4f  RMSE %.4f  MAPE %.3f%%\n", m.name.c_str(), m.report.overall.mae,
                      m.report.overall.rmse, m.report.overall.mape);
        }
      } else if (name == "predict") {
        cmd_predict(cfg);
      } else if (name == "sweep") {
        const auto result = cmd_sweep(cfg);
        const auto& best = result.rows.front();
        std::string line = "best combo " + std::to_string(best.combo_id) + ":";
        for (std::size_t i = 0; i < result.keys.size(); ++i) {
          line += " " + result.keys[i] + "=" + io::format_double(best.values[i]);
        }
        std::printf("%s  val MAPE %.4f%%\n", line.c_str(), best.val_mape);
      } else {
        cmd_gen_synthetic(cfg);
      }
    }
  } catch (const Error& e) {
    log::error(e.module(), e.what());
    return e.kind() == ErrorKind::numeric ? 1 : 2;
  } catch (const std::exception& e) {
    log::error("cli", e.what());
    return 1;
  }
  return 0;
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace stgcast::cli
