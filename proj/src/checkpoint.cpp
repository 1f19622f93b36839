#include "stgcast/checkpoint.hpp"

#include <sstream>

#include "stgcast/error.hpp"
#include "stgcast/io.hpp"

namespace stgcast {

namespace {

constexpr const char* kMagic = "STGCAST-CKPT-1";

void write_matrix(std::string& out, const std::string& label, const DenseMatrix& m) {
  out += label + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += io::format_double(m(r, c));
    }
    out += '\n';
  }
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::string line() {
    std::string s;
    if (!std::getline(in_, s)) throw ParseError("checkpoint", "unexpected end of checkpoint at line " + std::to_string(n_ + 1));
    ++n_;
    return s;
  }

  // "key rest..." -> rest, checking the key.
  std::string field(const std::string& key) {
    const std::string s = line();
    if (s.rfind(key + " ", 0) != 0 && s != key) {
      throw ParseError("checkpoint", "line " + std::to_string(n_) + ": expected '" + key + "'");
    }
    return s.size() > key.size() ? s.substr(key.size() + 1) : std::string();
  }

  std::vector<std::size_t> counts(const std::string& key, std::size_t n) {
    std::istringstream ss(field(key));
    std::vector<std::size_t> out(n);
    for (auto& v : out)
      if (!(ss >> v)) throw ParseError("checkpoint", "line " + std::to_string(n_) + ": bad '" + key + "' fields");
    return out;
  }

  DenseMatrix matrix(const std::string& label, std::size_t rows, std::size_t cols) {
    const auto shape = counts(label, 2);
    if (shape[0] != rows || shape[1] != cols) {
      throw ShapeError("checkpoint", label + " is " + std::to_string(shape[0]) + "x" + std::to_string(shape[1]) +
                                         ", model expects " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    DenseMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto cells = io::split_csv_line(line());
      if (cells.size() != cols) throw ParseError("checkpoint", "line " + std::to_string(n_) + ": wrong column count");
      for (std::size_t c = 0; c < cols; ++c) m(r, c) = io::parse_double(cells[c]);
    }
    return m;
  }

 private:
  std::istringstream in_;
  std::size_t n_ = 0;
};

}  // namespace

std::string format_checkpoint(const nn::SequenceModel& model, const train::NormStats& stats,
                              const std::vector<std::string>& detector_ids, std::size_t k_hops, std::uint64_t seed) {
  const auto& d = model.dims();
  std::string out = std::string(kMagic) + "\n";
  out += "kind " + std::string(model.kind()) + "\n";
  out += "dims " + std::to_string(d.d) + " " + std::to_string(d.t_in) + " " + std::to_string(d.t_out) + " " +
         std::to_string(d.hidden) + " " + std::to_string(d.gc_hidden) + " " + std::to_string(d.gc_out) + "\n";
  out += "k_hops " + std::to_string(k_hops) + "\n";
  out += "seed " + std::to_string(seed) + "\n";
  out += "norm " + io::format_double(stats.min_v) + " " + io::format_double(stats.max_v) + "\n";
  out += "detectors " + join(detector_ids) + "\n";
  if (const auto* g = dynamic_cast<const nn::GCGRUModel*>(&model)) write_matrix(out, "a_hat", *g->a_hat.matrix);
  const auto params = model.parameters();
  out += "params " + std::to_string(params.size()) + "\n";
  for (const auto& p : params) write_matrix(out, p.name, *p.value);
  out += "end\n";
  return out;
}

Checkpoint parse_checkpoint(const std::string& text) {
  Reader rd(text);
  if (rd.line() != kMagic) throw ParseError("checkpoint", "not a checkpoint (missing STGCAST-CKPT-1 header)");
  Checkpoint ck;
  const std::string kind = rd.field("kind");
  const auto dv = rd.counts("dims", 6);
  const nn::ModelDims dims{dv[0], dv[1], dv[2], dv[3], dv[4], dv[5]};
  ck.k_hops = rd.counts("k_hops", 1)[0];
  {
    std::istringstream ss(rd.field("seed"));
    if (!(ss >> ck.seed)) throw ParseError("checkpoint", "bad seed");
  }
  {
    std::istringstream ss(rd.field("norm"));
    std::string lo, hi;
    ss >> lo >> hi;
    ck.stats = {io::parse_double(lo), io::parse_double(hi)};
  }
  for (auto& id : io::split_csv_line(rd.field("detectors"))) ck.detector_ids.emplace_back(io::trim(id));
  if (ck.detector_ids.size() != dims.d) throw ParseError("checkpoint", "detector list does not match d");

  if (kind == "gcgru") {
    auto adj = std::make_shared<const DenseMatrix>(rd.matrix("a_hat", dims.d, dims.d));
    ck.model = std::make_unique<nn::GCGRUModel>(dims, graph::NormalizedAdjacency{adj, ck.k_hops, ck.detector_ids});
  } else if (kind == "lstm") {
    ck.model = std::make_unique<nn::LSTMModel>(dims);
  } else {
    throw ParseError("checkpoint", "unknown model kind '" + kind + "'");
  }
  auto params = ck.model->parameters();
  if (rd.counts("params", 1)[0] != params.size()) throw ParseError("checkpoint", "parameter count mismatch");
  for (auto& p : params) *p.value = rd.matrix(p.name, p.value->rows(), p.value->cols());
  if (rd.line() != "end") throw ParseError("checkpoint", "missing end marker");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const nn::SequenceModel& model, const train::NormStats& stats,
                     const std::vector<std::string>& detector_ids, std::size_t k_hops, std::uint64_t seed) {
  io::atomic_write(path, format_checkpoint(model, stats, detector_ids, k_hops, seed));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint", "checkpoint not found: " + path.string());
  return parse_checkpoint(io::read_file(path));
}

void check_compatible(const Checkpoint& ckpt, const std::vector<std::string>& data_ids) {
  if (ckpt.detector_ids.size() != data_ids.size()) {
    throw ShapeError("checkpoint", "checkpoint has d=" + std::to_string(ckpt.detector_ids.size()) + " detectors, data has d=" +
                                       std::to_string(data_ids.size()));
  }
  for (std::size_t i = 0; i < data_ids.size(); ++i) {
    if (ckpt.detector_ids[i] != data_ids[i]) {
      throw ShapeError("checkpoint", "detector " + std::to_string(i) + " is '" + ckpt.detector_ids[i] +
                                         "' in the checkpoint but '" + data_ids[i] + "' in the data");
    }
  }
}

}  // namespace stgcast
