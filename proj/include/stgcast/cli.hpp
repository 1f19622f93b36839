#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stgcast/eval.hpp"
#include "stgcast/train.hpp"

namespace stgcast::cli {

/// Everything a command needs. Loaded from one JSON document; every key can
/// be overridden by a long flag of the same name with '_' spelled '-'.
struct RunConfig {
  std::string speed_csv;
  std::string adjacency_csv;
  std::string test_csv;
  std::string checkpoint;  // empty: <out_dir>/model.ckpt
  std::string out_dir = "out";
  std::string grid;        // sweep: JSON object of key -> value list, inline or a path

  train::TrainConfig train;
  std::size_t t_in = 36;
  std::size_t t_out = 12;

  bool strict_no_leak = false;
  bool normalized_report = false;
  bool record_seconds = false;
  bool lstm_baseline = true;
  bool oracle = false;
  std::size_t jobs = 1;
  double mape_epsilon = 1e-6;

  // gen-synthetic
  std::size_t detectors = 12;
  std::size_t steps = 2000;

  std::string checkpoint_path() const;
  std::string lstm_checkpoint_path() const;
};

/// Field names accepted in config files and as flags.
const std::vector<std::string>& config_keys();

/// Parses a config document. A run manifest is accepted too (its "config"
/// member is used). Unknown keys and wrong types raise ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// Sets one field from its textual flag value.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Canonical JSON of every field, keys sorted.
std::string config_to_json(const RunConfig& cfg);

struct TrainSummary {
  train::FitResult model_fit;
  train::FitResult lstm_fit;
  bool lstm_trained = false;
};

struct EvalModel {
  std::string name;
  eval::MetricsReport report;
  double inference_seconds = 0.0;
};

struct Submission {
  std::string model;
  std::vector<std::string> detector_ids;
  std::vector<std::string> days;
  std::vector<DenseMatrix> predictions;  // t_out x d each, data units
};

TrainSummary cmd_train(const RunConfig& cfg);
std::vector<EvalModel> cmd_evaluate(const RunConfig& cfg);
Submission cmd_predict(const RunConfig& cfg);
train::GridResult cmd_sweep(const RunConfig& cfg);
void cmd_gen_synthetic(const RunConfig& cfg);

/// Keys sorted, numbers as %.17g.
std::string format_submission(const Submission& s);
Submission parse_submission(const std::string& json_text);

/// Process entry point; returns 0 on success, 1 on numeric or training
/// faults, 2 on input or configuration faults.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace stgcast::cli
