#include <charconv>
#include <filesystem>
#include <type_traits>

#include "json.hpp"
#include "stgcast/cli.hpp"
#include "stgcast/error.hpp"
#include "stgcast/io.hpp"

namespace stgcast::cli {

namespace {

using nlohmann::json;

template <class C, class F>
void visit_fields(C& c, F&& f) {
  f("speed_csv", c.speed_csv);
  f("adjacency_csv", c.adjacency_csv);
  f("test_csv", c.test_csv);
  f("checkpoint", c.checkpoint);
  f("out_dir", c.out_dir);
  f("grid", c.grid);
  f("learning_rate", c.train.learning_rate);
  f("epochs", c.train.epochs);
  f("batch_size", c.train.batch_size);
  f("lambda_reg", c.train.lambda_reg);
  f("split", c.train.split);
  f("hidden", c.train.hidden);
  f("gc_hidden", c.train.gc_hidden);
  f("gc_out", c.train.gc_out);
  f("k_hops", c.train.k_hops);
  f("seed", c.train.seed);
  f("early_stop_patience", c.train.early_stop_patience);
  f("clip_norm", c.train.clip_norm);
  f("regularize_biases", c.train.regularize_biases);
  f("t_in", c.t_in);
  f("t_out", c.t_out);
  f("strict_no_leak", c.strict_no_leak);
  f("normalized_report", c.normalized_report);
  f("record_seconds", c.record_seconds);
  f("lstm_baseline", c.lstm_baseline);
  f("oracle", c.oracle);
  f("jobs", c.jobs);
  f("mape_epsilon", c.mape_epsilon);
  f("detectors", c.detectors);
  f("steps", c.steps);
}

template <class T>
void assign_json(T& field, const json& v, const std::string& key) {
  auto bad = [&](const char* want) { throw ConfigError("cli", "config key '" + key + "' must be " + want); };
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) bad("a string");
    field = v.get<std::string>();
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) bad("true or false");
    field = v.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad("a non-negative integer");
    field = v.get<T>();
  } else {
    if (!v.is_number()) bad("a number");
    field = v.get<double>();
  }
}

template <class T>
void assign_text(T& field, const std::string& s, const std::string& key) {
  auto bad = [&](const char* want) {
    throw ConfigError("cli", "--" + key + " expects " + want + ", got '" + s + "'");
  };
  if constexpr (std::is_same_v<T, std::string>) {
    field = s;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (s == "true" || s == "1") field = true;
    else if (s == "false" || s == "0") field = false;
    else bad("true or false");
  } else if constexpr (std::is_integral_v<T>) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) bad("a non-negative integer");
    field = v;
  } else {
    try {
      field = io::parse_double(s);
    } catch (const ParseError&) {
      bad("a number");
    }
  }
}

}  // namespace

std::string RunConfig::checkpoint_path() const {
  return checkpoint.empty() ? (std::filesystem::path(out_dir) / "model.ckpt").string() : checkpoint;
}

std::string RunConfig::lstm_checkpoint_path() const {
  return (std::filesystem::path(checkpoint_path()).parent_path() / "lstm.ckpt").string();
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    RunConfig c;
    visit_fields(c, [&](const char* k, auto&) { out.emplace_back(k); });
    return out;
  }();
  return keys;
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("cli", std::string("config is not valid JSON: ") + e.what());
  }
  if (doc.is_object() && doc.contains("config") && doc["config"].is_object()) doc = doc["config"];
  if (!doc.is_object()) throw ConfigError("cli", "config must be a JSON object");
  RunConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    bool found = false;
    visit_fields(cfg, [&](const char* k, auto& field) {
      if (key == k) {
        assign_json(field, value, key);
        found = true;
      }
    });
    if (!found) throw ConfigError("cli", "unknown config key '" + key + "'");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("cli", "config file not found: " + path);
  return parse_config(io::read_file(path));
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  bool found = false;
  visit_fields(cfg, [&](const char* k, auto& field) {
    if (key == k) {
      assign_text(field, value, key);
      found = true;
    }
  });
  if (!found) throw ConfigError("cli", "unknown option '" + key + "'");
}

std::string config_to_json(const RunConfig& cfg) {
  json doc = json::object();
  RunConfig copy = cfg;
  visit_fields(copy, [&](const char* k, auto& field) { doc[k] = field; });
  return doc.dump(2) + "\n";
}

}  // namespace stgcast::cli
