#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "stgcast/matrix.hpp"

namespace stgcast::graph {

/// Undirected detector graph: binary symmetric adjacency indexed by node_ids.
struct DetectorGraph {
  std::vector<std::string> node_ids;
  DenseMatrix adjacency;

  std::size_t size() const noexcept { return node_ids.size(); }

  /// Throws unless the adjacency is square, binary, symmetric and sized to
  /// match node_ids, and node_ids are unique.
  void validate() const;
};

/// Symmetric-normalized k-hop adjacency used by the graph convolution.
struct NormalizedAdjacency {
  std::shared_ptr<const DenseMatrix> matrix;
  std::size_t k_hops = 1;
  std::vector<std::string> source_ids;

  std::size_t size() const noexcept { return matrix ? matrix->rows() : 0; }
};

/// min((A + I)^k, 1) entrywise.
DenseMatrix khop_clipped_adjacency(const DenseMatrix& adjacency, std::size_t k);
inline DenseMatrix khop_clipped_adjacency(const DetectorGraph& g, std::size_t k) {
  return khop_clipped_adjacency(g.adjacency, k);
}

/// Row sums of a nonnegative square matrix.
std::vector<double> degree_vector(const DenseMatrix& a_tilde);

/// D^-1/2 A D^-1/2 with D the row-sum degrees of `a_tilde`.
NormalizedAdjacency symmetric_normalize(const DenseMatrix& a_tilde, std::size_t k_hops = 1,
                                        std::vector<std::string> ids = {});

/// khop_clipped_adjacency followed by symmetric_normalize.
NormalizedAdjacency normalized_adjacency(const DetectorGraph& g, std::size_t k_hops = 1);

struct PruneResult {
  DetectorGraph graph;
  std::vector<std::string> dropped;  // in the graph, absent from the data
  std::vector<std::string> missing;  // in the data, absent from the graph (isolated in the result)
};

/// Induced subgraph on data_ids, in data-column order.
PruneResult prune_to_detectors(const DetectorGraph& g, const std::vector<std::string>& data_ids);

struct AdjacencyLoadReport {
  std::size_t asymmetric_entries = 0;
  std::size_t nonbinary_entries = 0;
};

/// Parses the adjacency CSV (first row and column are detector IDs).
/// Directed input is symmetrized with max(A, A^T); positive non-binary
/// entries become 1. Counts of both are reported.
DetectorGraph parse_adjacency_csv(const std::string& text, AdjacencyLoadReport* report = nullptr);
DetectorGraph load_adjacency_csv(const std::filesystem::path& path, AdjacencyLoadReport* report = nullptr);
std::string format_adjacency_csv(const DetectorGraph& g);

/// Cycle graph over the given ids (each node linked to its two neighbours).
DetectorGraph ring_graph(std::vector<std::string> ids);

/// Power-iteration estimate of the largest |eigenvalue| of a symmetric matrix.
double spectral_radius(const DenseMatrix& m, std::size_t iterations = 200);

}  // namespace stgcast::graph
