#include "stgcast/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "stgcast/error.hpp"
#include "stgcast/io.hpp"
#include "stgcast/log.hpp"

namespace stgcast::graph {

void DetectorGraph::validate() const {
  const std::size_t n = node_ids.size();
  if (adjacency.rows() != n || adjacency.cols() != n) {
    throw ShapeError("graph", "adjacency " + adjacency.shape_string() + " does not match " + std::to_string(n) +
                                  " node ids");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : node_ids) {
    if (!seen.insert(id).second) throw ContractError("graph", "duplicate detector id '" + id + "'");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = adjacency(i, j);
      if (v != 0.0 && v != 1.0) throw ContractError("graph", "adjacency entry is not binary");
      if (v != adjacency(j, i)) throw ContractError("graph", "adjacency is not symmetric");
    }
  }
}

DenseMatrix khop_clipped_adjacency(const DenseMatrix& adjacency, std::size_t k) {
  if (k == 0) throw ContractError("graph", "k-hop clipping needs k >= 1");
  if (adjacency.rows() != adjacency.cols()) {
    throw ShapeError("graph", "adjacency must be square, got " + adjacency.shape_string());
  }
  const std::size_t n = adjacency.rows();
  DenseMatrix base = adjacency;
  for (std::size_t i = 0; i < n; ++i) base(i, i) += 1.0;

  // Clipping after every product leaves the nonzero pattern (and so the final
  // clipped result) unchanged for nonnegative input, and keeps values bounded
  // for large k.
  auto clip = [](DenseMatrix& m) {
    for (double& v : m.values()) v = std::min(v, 1.0);
  };
  DenseMatrix result = base;
  clip(result);
  for (std::size_t p = 1; p < k; ++p) {
    result = matmul(result, base);
    clip(result);
  }
  return result;
}

std::vector<double> degree_vector(const DenseMatrix& a_tilde) {
  if (a_tilde.rows() != a_tilde.cols()) throw ShapeError("graph", "degree of non-square " + a_tilde.shape_string());
  std::vector<double> d(a_tilde.rows(), 0.0);
  for (std::size_t i = 0; i < a_tilde.rows(); ++i) {
    for (double v : a_tilde.row(i)) {
      if (v < 0.0) throw ContractError("graph", "negative adjacency entry in row " + std::to_string(i));
      d[i] += v;
    }
  }
  return d;
}

NormalizedAdjacency symmetric_normalize(const DenseMatrix& a_tilde, std::size_t k_hops, std::vector<std::string> ids) {
  const auto deg = degree_vector(a_tilde);
  const std::size_t n = deg.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (a_tilde(i, j) != a_tilde(j, i)) throw ContractError("graph", "normalization needs a symmetric matrix");
    }
  }
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (deg[i] <= 0.0) {
      throw DegenerateError("graph", "detector row " + std::to_string(i) +
                                         " has zero degree; self-loops were not added");
    }
    inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
  }
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = a_tilde(i, j) * inv_sqrt[i] * inv_sqrt[j];
  if (!ids.empty() && ids.size() != n) throw ShapeError("graph", "id list does not match adjacency size");
  return NormalizedAdjacency{std::make_shared<const DenseMatrix>(std::move(out)), k_hops, std::move(ids)};
}

NormalizedAdjacency normalized_adjacency(const DetectorGraph& g, std::size_t k_hops) {
  return symmetric_normalize(khop_clipped_adjacency(g, k_hops), k_hops, g.node_ids);
}

PruneResult prune_to_detectors(const DetectorGraph& g, const std::vector<std::string>& data_ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.node_ids.size(); ++i) index.emplace(g.node_ids[i], i);

  PruneResult res;
  std::vector<std::ptrdiff_t> src(data_ids.size(), -1);
  std::unordered_set<std::string> wanted(data_ids.begin(), data_ids.end());
  std::size_t overlap = 0;
  for (std::size_t i = 0; i < data_ids.size(); ++i) {
    auto it = index.find(data_ids[i]);
    if (it == index.end()) {
      res.missing.push_back(data_ids[i]);
    } else {
      src[i] = static_cast<std::ptrdiff_t>(it->second);
      ++overlap;
    }
  }
  if (overlap == 0) throw ContractError("graph", "no detector ids shared between adjacency and speed data");
  for (const auto& id : g.node_ids) {
    if (!wanted.count(id)) res.dropped.push_back(id);
  }

  const std::size_t n = data_ids.size();
  res.graph.node_ids = data_ids;
  res.graph.adjacency = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (src[i] < 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (src[j] < 0) continue;
      res.graph.adjacency(i, j) = g.adjacency(static_cast<std::size_t>(src[i]), static_cast<std::size_t>(src[j]));
    }
  }
  if (!res.missing.empty()) {
    log::warn("graph", std::to_string(res.missing.size()) + " data detectors absent from adjacency; kept isolated");
  }
  return res;
}

DetectorGraph parse_adjacency_csv(const std::string& text, AdjacencyLoadReport* report) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("graph", "adjacency file is empty");
  auto header = io::split_csv_line(line);
  if (header.size() < 2) throw ParseError("graph", "adjacency header has no detector ids");
  DetectorGraph g;
  for (std::size_t i = 1; i < header.size(); ++i) g.node_ids.emplace_back(io::trim(header[i]));
  const std::size_t n = g.node_ids.size();
  g.adjacency = DenseMatrix(n, n);

  AdjacencyLoadReport rep;
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (io::trim(line).empty()) continue;
    auto cells = io::split_csv_line(line);
    if (cells.size() != n + 1) {
      throw ParseError("graph", "line " + std::to_string(line_no) + ": expected " + std::to_string(n + 1) +
                                    " fields, got " + std::to_string(cells.size()));
    }
    if (row >= n) throw ParseError("graph", "line " + std::to_string(line_no) + ": more rows than header ids");
    if (io::trim(cells[0]) != g.node_ids[row]) {
      throw ParseError("graph", "line " + std::to_string(line_no) + ": row id '" + std::string(io::trim(cells[0])) +
                                    "' does not match column id '" + g.node_ids[row] + "'");
    }
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      try {
        v = io::parse_double(cells[j + 1]);
      } catch (const ParseError&) {
        throw ParseError("graph", "line " + std::to_string(line_no) + ": bad adjacency value '" + cells[j + 1] + "'");
      }
      if (v < 0.0 || !std::isfinite(v)) {
        throw ParseError("graph", "line " + std::to_string(line_no) + ": adjacency values must be >= 0");
      }
      if (v != 0.0 && v != 1.0) {
        ++rep.nonbinary_entries;
        v = 1.0;
      }
      g.adjacency(row, j) = v;
    }
    ++row;
  }
  if (row != n) throw ParseError("graph", "adjacency has " + std::to_string(row) + " rows for " + std::to_string(n) + " ids");

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (g.adjacency(i, j) != g.adjacency(j, i)) {
        ++rep.asymmetric_entries;
        g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
      }
    }
  }
  if (rep.nonbinary_entries) {
    log::warn("graph", std::to_string(rep.nonbinary_entries) + " non-binary adjacency entries treated as 1");
  }
  if (rep.asymmetric_entries) {
    log::info("graph", "symmetrized " + std::to_string(rep.asymmetric_entries) + " asymmetric adjacency pairs");
  }
  if (report) *report = rep;
  g.validate();
  return g;
}

DetectorGraph load_adjacency_csv(const std::filesystem::path& path, AdjacencyLoadReport* report) {
  if (!std::filesystem::exists(path)) throw IoError("graph", "adjacency file not found: " + path.string());
  return parse_adjacency_csv(io::read_file(path), report);
}

std::string format_adjacency_csv(const DetectorGraph& g) {
  std::string out = "id";
  for (const auto& id : g.node_ids) out += "," + id;
  out += '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    out += g.node_ids[i];
    for (std::size_t j = 0; j < g.size(); ++j) out += g.adjacency(i, j) != 0.0 ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

DetectorGraph ring_graph(std::vector<std::string> ids) {
  const std::size_t n = ids.size();
  DetectorGraph g{std::move(ids), DenseMatrix(n, n)};
  if (n < 2) return g;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
  }
  return g;
}

double spectral_radius(const DenseMatrix& m, std::size_t iterations) {
  if (m.rows() != m.cols()) throw ShapeError("graph", "spectral radius of non-square " + m.shape_string());
  const std::size_t n = m.rows();
  if (n == 0) return 0.0;
  DenseMatrix v(n, 1);
  for (std::size_t i = 0; i < n; ++i) v(i, 0) = 1.0 + 0.01 * static_cast<double>(i);
  double estimate = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    double norm = std::sqrt(std::inner_product(v.values().begin(), v.values().end(), v.values().begin(), 0.0));
    if (norm == 0.0) return 0.0;
    for (double& x : v.values()) x /= norm;
    DenseMatrix w = matmul(m, v);
    estimate = std::sqrt(std::inner_product(w.values().begin(), w.values().end(), w.values().begin(), 0.0));
    v = std::move(w);
  }
  return estimate;
}

}  // namespace stgcast::graph
