#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "stgcast/error.hpp"
#include "stgcast/graph.hpp"

using namespace stgcast;
using namespace stgcast::graph;

namespace {

DetectorGraph path3() {
  return DetectorGraph{{"a", "b", "c"}, DenseMatrix::from_rows({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}})};
}

}  // namespace

TEST_CASE("k-hop clipped adjacency hand cases") {
  CHECK(khop_clipped_adjacency(DenseMatrix::from_rows({{0, 1}, {1, 0}}), 1) == DenseMatrix(2, 2, 1.0));
  CHECK(khop_clipped_adjacency(path3(), 2) == DenseMatrix(3, 3, 1.0));
  CHECK(khop_clipped_adjacency(path3(), 1) == DenseMatrix::from_rows({{1, 1, 0}, {1, 1, 1}, {0, 1, 1}}));
  CHECK_THROWS_AS(khop_clipped_adjacency(path3(), 0), ContractError);

  // isolated node keeps only its self-loop
  const DenseMatrix iso = khop_clipped_adjacency(DenseMatrix::from_rows({{0, 1, 0}, {1, 0, 0}, {0, 0, 0}}), 1);
  CHECK(iso(2, 0) == 0);
  CHECK(iso(2, 1) == 0);
  CHECK(iso(2, 2) == 1);
}

TEST_CASE("k-hop is monotone in k and saturates on connected graphs") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const auto a = oracle::to(oracle::random_adjacency(rng, 8, 0.25));
    for (std::size_t k = 1; k < 9; ++k) {
      const DenseMatrix lo = khop_clipped_adjacency(a, k), hi = khop_clipped_adjacency(a, k + 1);
      for (std::size_t i = 0; i < lo.size(); ++i) CHECK(lo.values()[i] <= hi.values()[i]);
    }
  }
  const auto ring = ring_graph({"a", "b", "c", "d", "e", "f"});
  CHECK(khop_clipped_adjacency(ring, 3) == DenseMatrix(6, 6, 1.0));
  CHECK(khop_clipped_adjacency(ring, 4) == DenseMatrix(6, 6, 1.0));
}

TEST_CASE("degree vector") {
  CHECK(degree_vector(DenseMatrix(2, 2, 1.0)) == std::vector<double>{2, 2});
  CHECK(degree_vector(DenseMatrix::identity(3)) == std::vector<double>{1, 1, 1});
  CHECK(degree_vector(DenseMatrix::from_rows({{1, 1, 0}, {1, 1, 1}, {0, 1, 1}})) == std::vector<double>{2, 3, 2});
  CHECK_THROWS_AS(degree_vector(DenseMatrix::from_rows({{1, -1}, {-1, 1}})), ContractError);
}

TEST_CASE("symmetric normalization") {
  CHECK(max_abs_diff(*symmetric_normalize(DenseMatrix(2, 2, 1.0)).matrix, DenseMatrix(2, 2, 0.5)) < 1e-15);
  CHECK(*symmetric_normalize(DenseMatrix::identity(3)).matrix == DenseMatrix::identity(3));
  const DenseMatrix at = khop_clipped_adjacency(path3(), 1);
  const auto ah = symmetric_normalize(at);
  CHECK(max_abs_diff(*ah.matrix, oracle::to(oracle::sym_normalize(oracle::from(at)))) < 1e-15);
  CHECK_THROWS_AS(symmetric_normalize(DenseMatrix::from_rows({{1, 0}, {0, 0}})), DegenerateError);
}

TEST_CASE("normalized adjacency invariants on random graphs") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 40; ++rep) {
    std::uniform_int_distribution<std::size_t> nd(1, 20);
    const std::size_t n = nd(rng);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("n" + std::to_string(i));
    const DetectorGraph g{ids, oracle::to(oracle::random_adjacency(rng, n, 0.3))};
    for (std::size_t k : {1, 2, 3}) {
      const auto ah = normalized_adjacency(g, k);
      const DenseMatrix& m = *ah.matrix;
      const auto deg = degree_vector(khop_clipped_adjacency(g, k));
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(m(i, i) == doctest::Approx(1.0 / deg[i]).epsilon(1e-15));
        for (std::size_t j = 0; j < n; ++j) {
          CHECK(m(i, j) == m(j, i));
          CHECK(m(i, j) >= 0.0);
          CHECK(m(i, j) <= 1.0);
        }
      }
      CHECK(spectral_radius(m) <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("pruning keeps data order and reports differences") {
  const DetectorGraph g{{"a", "b", "c"}, DenseMatrix::from_rows({{0, 1, 1}, {1, 0, 0}, {1, 0, 0}})};
  const auto sub = prune_to_detectors(g, {"c", "a"});
  CHECK(sub.graph.node_ids == std::vector<std::string>{"c", "a"});
  CHECK(sub.graph.adjacency == DenseMatrix::from_rows({{0, 1}, {1, 0}}));
  CHECK(sub.dropped == std::vector<std::string>{"b"});

  const auto same = prune_to_detectors(g, g.node_ids);
  CHECK(same.graph.adjacency == g.adjacency);
  CHECK(same.dropped.empty());

  const auto extra = prune_to_detectors(g, {"a", "z"});
  CHECK(extra.missing == std::vector<std::string>{"z"});
  CHECK(extra.graph.adjacency == DenseMatrix(2, 2));
  CHECK_THROWS_AS(prune_to_detectors(g, {"x", "y"}), ContractError);
}

TEST_CASE("pruning 90 nodes down to 87 detectors") {
  std::mt19937_64 rng(8);
  std::vector<std::string> ids;
  for (int i = 0; i < 90; ++i) ids.push_back("d" + std::to_string(i));
  const DetectorGraph g{ids, oracle::to(oracle::random_adjacency(rng, 90, 0.05))};
  std::vector<std::string> data(ids.begin(), ids.begin() + 87);
  const auto r = prune_to_detectors(g, data);
  CHECK(r.graph.size() == 87);
  CHECK(r.dropped.size() == 3);

  // normalize(prune) equals brute-force normalization of the induced submatrix
  oracle::Mat sub = oracle::zeros(87, 87);
  for (int i = 0; i < 87; ++i)
    for (int j = 0; j < 87; ++j) sub[i][j] = g.adjacency(i, j);
  const auto want = oracle::sym_normalize(oracle::khop(sub, 2));
  CHECK(max_abs_diff(*normalized_adjacency(r.graph, 2).matrix, oracle::to(want)) < 1e-12);
}

TEST_CASE("adjacency csv parsing") {
  AdjacencyLoadReport rep;
  const auto g = parse_adjacency_csv("id,a,b,c\na,0,1,0\nb,0,0,2\nc,0,1,0\n", &rep);
  CHECK(g.node_ids == std::vector<std::string>{"a", "b", "c"});
  CHECK(g.adjacency == DenseMatrix::from_rows({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}}));
  CHECK(rep.asymmetric_entries > 0);
  CHECK(rep.nonbinary_entries == 1);
  CHECK_NOTHROW(g.validate());
  CHECK(parse_adjacency_csv(format_adjacency_csv(g)).adjacency == g.adjacency);
  CHECK_THROWS_AS(parse_adjacency_csv("id,a,b\na,0,1\n"), ParseError);
  CHECK_THROWS_AS(load_adjacency_csv("/nonexistent/adj.csv"), IoError);
}

TEST_CASE("ring graph is a valid symmetric detector graph") {
  const auto g = ring_graph({"a", "b", "c", "d"});
  CHECK_NOTHROW(g.validate());
  CHECK(degree_vector(g.adjacency) == std::vector<double>{2, 2, 2, 2});
}
