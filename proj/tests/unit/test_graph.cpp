#include <random>
#include <sstream>

#include "doctest.h"
#include "gbc/dataset.hpp"
#include "gbc/graph.hpp"
#include "oracles.hpp"

using namespace gbc;
using oracle::make_graph;

TEST_CASE("from_edges builds a simple symmetric CSR") {
  const Graph tri = make_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  CHECK(tri.num_nodes() == 3);
  CHECK(tri.num_edges() == 3);
  CHECK(tri.offsets()[0] == 0);
  CHECK(tri.offsets()[3] == 6);

  const Graph dup = make_graph(2, {{0, 1}, {1, 0}, {0, 0}});
  CHECK(dup.num_nodes() == 2);
  CHECK(dup.num_edges() == 1);

  CHECK_THROWS_AS(make_graph(2, {{0, 2}}), std::invalid_argument);
}

TEST_CASE("from_csr rejects broken invariants") {
  CHECK_NOTHROW(Graph::from_csr({0, 1, 2}, {1, 0}));
  CHECK_THROWS_AS(Graph::from_csr({0, 1, 1}, {1}), std::invalid_argument);        // asymmetric
  CHECK_THROWS_AS(Graph::from_csr({0, 1, 2}, {0, 1}), std::invalid_argument);     // self-loops
  CHECK_THROWS_AS(Graph::from_csr({0, 2, 2}, {1, 1}), std::invalid_argument);     // duplicate
  CHECK_THROWS_AS(Graph::from_csr({1, 1, 2}, {1, 0}), std::invalid_argument);     // offsets[0] != 0
  CHECK_THROWS_AS(Graph::from_csr({0, 1, 2}, {5, 0}), std::invalid_argument);     // out of range
}

TEST_CASE("degree") {
  CHECK(make_graph(3, {{0, 1}, {1, 2}, {2, 0}}).degree(0) == 2);
  CHECK(oracle::star(6).degree(0) == 5);
  CHECK(oracle::path(4).degree(1) == 2);
  CHECK_THROWS_AS(oracle::path(4).degree(4), std::out_of_range);
}

TEST_CASE("induced_subgraph") {
  const Graph tri = make_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  const std::vector<NodeId> two{0, 1};
  const auto sub = induced_subgraph(tri, two);
  CHECK(sub.graph.num_nodes() == 2);
  CHECK(sub.graph.num_edges() == 1);
  CHECK(sub.local_id(1) == 1);
  CHECK(sub.local_id(2) == -1);

  const auto full = induced_subgraph(oracle::two_triangles(), std::vector<NodeId>{0, 1, 2, 3, 4, 5});
  CHECK(full.graph == oracle::two_triangles());
  for (NodeId v = 0; v < 6; ++v) CHECK(full.global_ids[v] == v);

  const auto left = induced_subgraph(oracle::two_triangles(), std::vector<NodeId>{0, 1, 2});
  CHECK(left.graph.num_nodes() == 3);
  CHECK(left.graph.num_edges() == 3);

  CHECK_THROWS_AS(induced_subgraph(tri, std::vector<NodeId>{1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(induced_subgraph(tri, std::vector<NodeId>{0, 3}), std::invalid_argument);
  CHECK_THROWS_AS(induced_subgraph(tri, std::vector<NodeId>{2, 0}), std::invalid_argument);
}

TEST_CASE("laplacian_quadratic") {
  const Graph tri = make_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  CHECK(laplacian_quadratic(tri, std::vector<double>{3, 3, 3}) == 0.0);
  CHECK(laplacian_quadratic(make_graph(2, {{0, 1}}), std::vector<double>{1, 0}) == 1.0);
  CHECK(laplacian_quadratic(tri, std::vector<double>{1, 0, 0}) == 2.0);
  CHECK_THROWS_AS(laplacian_quadratic(tri, std::vector<double>{1, 0}), std::invalid_argument);
}

TEST_CASE("properties on random graphs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng() % 49;
    const Graph g = oracle::random_er(n, 0.08, rng);

    std::size_t deg_sum = 0;
    for (NodeId v = 0; v < n; ++v) deg_sum += g.degree(v);
    CHECK(deg_sum == 2 * g.num_edges());

    std::ostringstream out;
    write_edge_list(g, out);
    std::istringstream in(out.str());
    CHECK(parse_edge_list(in) == g);

    std::vector<NodeId> all(n);
    for (NodeId v = 0; v < n; ++v) all[v] = v;
    CHECK(induced_subgraph(g, all).graph == g);

    // x^T L x >= 0, matches a dense L, and is 0 exactly for vectors constant
    // on each component.
    std::normal_distribution<double> normal;
    std::vector<double> x(n);
    for (double& v : x) v = normal(rng);
    const double q = laplacian_quadratic(g, x);
    CHECK(q >= 0.0);
    CHECK(q == doctest::Approx(oracle::dense_quadratic(g, x)).epsilon(1e-12));

    std::size_t num_comp = 0;
    const auto comp = connected_components(g, &num_comp);
    std::vector<double> per(num_comp);
    for (double& v : per) v = normal(rng);
    std::vector<double> piecewise(n);
    for (NodeId v = 0; v < n; ++v) piecewise[v] = per[comp[v]];
    CHECK(laplacian_quadratic(g, piecewise) == 0.0);
    if (num_comp < n) {
      // Perturb one node of a non-singleton component: no longer constant.
      for (NodeId v = 0; v < n; ++v) {
        if (g.degree(v) > 0) {
          piecewise[v] += 1.0;
          break;
        }
      }
      CHECK(laplacian_quadratic(g, piecewise) > 0.0);
    }
  }
}

TEST_CASE("connected_components labels by smallest member") {
  const Graph g = make_graph(5, {{3, 4}, {0, 2}});
  std::size_t c = 0;
  const auto comp = connected_components(g, &c);
  CHECK(c == 3);
  CHECK(comp == std::vector<NodeId>{0, 1, 0, 2, 2});
}
