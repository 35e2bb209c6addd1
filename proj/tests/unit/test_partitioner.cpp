#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gbc/partitioner.hpp"
#include "oracles.hpp"

using namespace gbc;
using oracle::make_graph;

namespace {

Graph cycle(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId v = 0; v < n; ++v) e.push_back({v, static_cast<NodeId>((v + 1) % n)});
  return Graph::from_edges(n, e);
}

Graph complete(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) e.push_back({u, v});
  return Graph::from_edges(n, e);
}

// Minimum cut over all bisections with exactly `left` nodes on side 0.
Weight brute_min_bisection(const WeightedGraph& g, std::size_t left) {
  const std::size_t n = g.num_nodes();
  Weight best = -1;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n - left) continue;
    Bisection side(n);
    for (std::size_t v = 0; v < n; ++v) side[v] = (mask >> v) & 1u;
    const Weight c = cut_weight(g, side);
    if (best < 0 || c < best) best = c;
  }
  return best;
}

void check_matching(const WeightedGraph& wg, const Graph& g, const Matching& m) {
  REQUIRE(m.mate_of.size() == g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    const NodeId u = m.mate_of[v];
    CHECK(m.mate_of[u] == v);
    if (u != v) CHECK(g.has_edge(u, v));
  }
  // Maximal: no edge joins two unmatched nodes.
  for (Edge e : g.edge_list()) CHECK_FALSE((m.mate_of[e.u] == e.u && m.mate_of[e.v] == e.v));
  (void)wg;
}

void check_assignment(const Graph& g, const PartitionAssignment& pa, std::size_t k, double eps) {
  REQUIRE(pa.part_of.size() == g.num_nodes());
  CHECK(pa.k == k);
  const auto sizes = pa.part_sizes();
  REQUIRE(sizes.size() == k);
  const std::size_t cap = max_part_size(g.num_nodes(), k, eps);
  for (std::size_t s : sizes) {
    CHECK(s >= 1);
    CHECK(s <= cap);
  }
  for (std::uint32_t p : pa.part_of) CHECK(p < k);
  CHECK(pa.cut_edges == count_cut_edges(g, pa.part_of));
}

}  // namespace

TEST_CASE("heavy_edge_matching examples") {
  const WeightedGraph p4 = WeightedGraph::unit(oracle::path(4));
  const std::vector<NodeId> order{0, 1, 2, 3};
  const Matching m = heavy_edge_matching(p4, order);
  CHECK(m.mate_of == std::vector<NodeId>{1, 0, 3, 2});

  Rng rng(1);
  CHECK(heavy_edge_matching(Graph::from_edges(1, {}), rng).mate_of == std::vector<NodeId>{0});

  const Graph tri = make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  const Matching mt = heavy_edge_matching(tri, rng);
  std::size_t self = 0;
  for (NodeId v = 0; v < 3; ++v) self += mt.mate_of[v] == v;
  CHECK(self == 1);

  // Heavier edges win: node 0 sees weights 1 (to 1) and 5 (to 2).
  WeightedGraph w;
  w.offsets = {0, 2, 3, 4};
  w.adjacency = {1, 2, 0, 0};
  w.edge_weights = {1, 5, 1, 5};
  w.node_weights = {1, 1, 1};
  const std::vector<NodeId> first{0, 1, 2};
  CHECK(heavy_edge_matching(w, first).mate_of == std::vector<NodeId>{2, 1, 0});
}

TEST_CASE("heavy_edge_matching is a maximal matching on random graphs") {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 30; ++t) {
    const Graph g = oracle::random_er(5 + gen() % 60, 0.1, gen);
    Rng rng(t);
    check_matching(WeightedGraph::unit(g), g, heavy_edge_matching(g, rng));
  }
}

TEST_CASE("contract examples") {
  const WeightedGraph p4 = WeightedGraph::unit(oracle::path(4));
  const Contraction c = contract(p4, Matching{{1, 0, 3, 2}});
  CHECK(c.coarse.num_nodes() == 2);
  CHECK(c.coarse.node_weights == std::vector<Weight>{2, 2});
  CHECK(c.coarse.total_edge_weight() == 1);
  CHECK(c.coarse_of == std::vector<NodeId>{0, 0, 1, 1});

  const Contraction id = contract(p4, Matching{{0, 1, 2, 3}});
  CHECK(id.coarse.offsets == p4.offsets);
  CHECK(id.coarse.adjacency == p4.adjacency);
  CHECK(id.coarse.edge_weights == p4.edge_weights);

  const Contraction sq = contract(WeightedGraph::unit(cycle(4)), Matching{{1, 0, 3, 2}});
  CHECK(sq.coarse.num_nodes() == 2);
  CHECK(sq.coarse.adjacency.size() == 2);
  CHECK(sq.coarse.edge_weights == std::vector<Weight>{2, 2});
}

TEST_CASE("contraction conserves node weight and non-collapsed edge weight") {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 20; ++t) {
    const Graph g = oracle::random_er(10 + gen() % 80, 0.08, gen);
    WeightedGraph wg = WeightedGraph::unit(g);
    Rng rng(t);
    for (int level = 0; level < 4 && wg.num_nodes() > 1; ++level) {
      const Matching m = heavy_edge_matching(wg, rng);
      Weight collapsed = 0;
      for (NodeId v = 0; v < wg.num_nodes(); ++v) {
        for (EdgeIndex e = wg.offsets[v]; e < wg.offsets[v + 1]; ++e) {
          if (wg.adjacency[e] == m.mate_of[v] && v < wg.adjacency[e]) collapsed += wg.edge_weights[e];
        }
      }
      const Contraction c = contract(wg, m);
      CHECK(c.coarse.total_node_weight() == wg.total_node_weight());
      CHECK(c.coarse.total_edge_weight() == wg.total_edge_weight() - collapsed);
      wg = c.coarse;
    }
  }
}

TEST_CASE("initial_bisection examples") {
  Rng rng(5);
  const WeightedGraph c8 = WeightedGraph::unit(cycle(8));
  CHECK(cut_weight(c8, initial_bisection(c8, 4, 4, rng)) == 2);

  const WeightedGraph k4 = WeightedGraph::unit(complete(4));
  CHECK(cut_weight(k4, initial_bisection(k4, 2, 2, rng)) == 4);

  const WeightedGraph tt = WeightedGraph::unit(oracle::two_triangles());
  const Bisection b = initial_bisection(tt, 3, 3, rng);
  CHECK(cut_weight(tt, b) == 1);
  CHECK(brute_min_bisection(tt, 3) == 1);

  CHECK_THROWS_AS(initial_bisection(tt, 4, 3, rng), std::invalid_argument);
}

TEST_CASE("fm_refine examples") {
  const WeightedGraph tt = WeightedGraph::unit(oracle::two_triangles());
  const Bisection optimal{0, 0, 0, 1, 1, 1};
  CHECK(fm_refine(tt, optimal, 3, 3) == optimal);

  const Bisection wrong{0, 0, 1, 0, 1, 1};
  const Bisection fixed = fm_refine(tt, wrong, 4, 4);
  CHECK(cut_weight(tt, fixed) == 1);
  CHECK(brute_min_bisection(tt, 3) == 1);

  CHECK_THROWS_AS(fm_refine(tt, optimal, 2, 3), std::invalid_argument);
}

TEST_CASE("fm_refine never increases the cut and respects caps") {
  std::mt19937_64 gen(21);
  for (int t = 0; t < 100; ++t) {
    const Graph g = oracle::random_er(20, 0.3, gen);
    const WeightedGraph wg = WeightedGraph::unit(g);
    Bisection side(20, 0);
    for (int i = 10; i < 20; ++i) side[i] = 1;
    std::shuffle(side.begin(), side.end(), gen);
    const Weight before = cut_weight(wg, side);
    const Weight cap = static_cast<Weight>(max_part_size(20, 2, 0.1));
    const Bisection after = fm_refine(wg, side, cap, cap);
    CHECK(cut_weight(wg, after) <= before);
    const auto left = std::count(after.begin(), after.end(), 0);
    CHECK(left <= cap);
    CHECK(20 - left <= cap);
  }
}

TEST_CASE("fm refinement gets close to the brute-force optimum on small graphs") {
  std::mt19937_64 gen(8);
  int hits = 0;
  const int trials = 30;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 8 + gen() % 7;
    const Graph g = oracle::random_er(n, 0.35, gen);
    const WeightedGraph wg = WeightedGraph::unit(g);
    Rng rng(t);
    const auto half = static_cast<Weight>(n / 2);
    const Bisection b = fm_refine(wg, initial_bisection(wg, half, static_cast<Weight>(n) - half, rng), half + 1,
                                  static_cast<Weight>(n) - half + 1);
    const Weight best = std::min({brute_min_bisection(wg, n / 2), brute_min_bisection(wg, n / 2 + 1),
                                  n / 2 >= 1 ? brute_min_bisection(wg, n / 2 - 1) : Weight{0}});
    const Weight got = cut_weight(wg, b);
    CHECK(got >= best);
    hits += got <= best + 1;
  }
  CHECK(hits >= trials * 8 / 10);
}

TEST_CASE("partition_k examples") {
  const Graph g = oracle::two_triangles();
  const auto one = partition_k(g, 1, 0.1, 0);
  CHECK(one.cut_edges == 0);
  CHECK(std::all_of(one.part_of.begin(), one.part_of.end(), [](auto p) { return p == 0; }));

  const auto all = partition_k(g, 6, 0.1, 0);
  CHECK(all.cut_edges == g.num_edges());
  check_assignment(g, all, 6, 0.1);

  const Graph c32 = cycle(32);
  const auto four = partition_k(c32, 4, 0.1, 0);
  check_assignment(c32, four, 4, 0.1);
  CHECK(four.cut_edges >= 4);
  CHECK(four.cut_edges <= 8);

  CHECK_THROWS_AS(partition_k(g, 0, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(partition_k(g, 7, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(partition_k(g, 2, -0.5, 0), std::invalid_argument);
}

TEST_CASE("partition_k invariants on random graphs") {
  std::mt19937_64 gen(99);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 20 + gen() % 600;
    Graph g;
    switch (t % 4) {
      case 0: g = oracle::random_er(n, 6.0 / static_cast<double>(n), gen); break;
      case 1: g = oracle::random_sbm(4, n / 4, 0.1, 0.005, gen); break;
      case 2: g = oracle::disjoint_union({oracle::path(n / 3), oracle::star(n / 3), oracle::random_er(n / 3, 0.05, gen)}); break;
      default: g = Graph::from_edges(n, {}); break;
    }
    const auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(g.num_nodes())));
    const std::size_t k = 2 + gen() % std::max<std::size_t>(1, root - 1);
    const auto pa = partition_k(g, k, 0.1, t);
    check_assignment(g, pa, k, 0.1);
    CHECK(partition_k(g, k, 0.1, t).part_of == pa.part_of);
  }
}

TEST_CASE("partition_k beats balanced random assignments") {
  std::mt19937_64 gen(1234);
  int wins = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 60 + gen() % 440;
    const Graph g = t % 2 ? oracle::random_er(n, 8.0 / static_cast<double>(n), gen)
                          : oracle::random_sbm(5, n / 5, 0.15, 0.01, gen);
    const std::size_t k = 2 + gen() % 8;
    const auto pa = partition_k(g, k, 0.1, t);
    std::vector<std::uint32_t> random_parts(g.num_nodes());
    for (std::size_t v = 0; v < random_parts.size(); ++v) random_parts[v] = static_cast<std::uint32_t>(v % k);
    Rng rng(mix_seed(t, 5));
    std::shuffle(random_parts.begin(), random_parts.end(), rng);
    wins += pa.cut_edges <= count_cut_edges(g, random_parts);
  }
  CHECK(wins > trials / 2);
}

TEST_CASE("partition_k recovers planted blocks") {
  std::mt19937_64 gen(42);
  const Graph g = oracle::random_sbm(4, 50, 0.3, 0.01, gen);
  const auto pa = partition_k(g, 4, 0.1, 7);
  std::vector<std::uint32_t> perm{0, 1, 2, 3};
  std::size_t best = 0;
  do {
    std::size_t agree = 0;
    for (NodeId v = 0; v < 200; ++v) agree += perm[pa.part_of[v]] == v / 50;
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(best >= 180);
}
