#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "gbc/synthetic.hpp"

using namespace gbc;

namespace {

bool connected(const Graph& g) {
  std::vector<bool> seen(g.num_nodes(), false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : g.neighbors(u)) {
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == g.num_nodes();
}

}  // namespace

TEST_CASE("deterministic shapes") {
  const Graph c8 = cycle_graph(8);
  CHECK(c8.num_nodes() == 8);
  CHECK(c8.num_edges() == 8);
  for (NodeId v = 0; v < 8; ++v) CHECK(c8.degree(v) == 2);
  CHECK(path_graph(5).num_edges() == 4);
  const Graph s = star_graph(6);
  CHECK(s.num_edges() == 5);
  CHECK(s.degree(0) == 5);
}

TEST_CASE("erdos_renyi edge count") {
  const double mean = 4950 * 0.1;
  const double sd = std::sqrt(4950 * 0.1 * 0.9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = erdos_renyi(100, 0.1, seed);
    CHECK(g.num_nodes() == 100);
    CHECK(std::abs(static_cast<double>(g.num_edges()) - mean) <= 4 * sd);
  }
  CHECK(erdos_renyi(100, 0.1, 3) == erdos_renyi(100, 0.1, 3));
  CHECK(erdos_renyi(50, 0.0, 1).num_edges() == 0);
  CHECK(erdos_renyi(50, 1.0, 1).num_edges() == 50 * 49 / 2);
  const Graph big = erdos_renyi_avg_degree(20000, 8.0, 2);
  CHECK(std::abs(2.0 * static_cast<double>(big.num_edges()) / 20000.0 - 8.0) < 0.2);
}

TEST_CASE("stochastic block model is connected with high probability") {
  const std::vector<std::size_t> sizes{50, 50};
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const PlantedGraph pg = stochastic_block_model(sizes, 0.25, 0.01, seed);
    CHECK(pg.blocks.size() == 100);
    ok += connected(pg.graph) ? 1 : 0;
  }
  CHECK(ok >= 99);
}

TEST_CASE("block_model_exact") {
  const std::vector<std::size_t> sizes{30, 40, 30};
  const PlantedGraph pg = block_model_exact(sizes, 500, 0.8, 7);
  CHECK(pg.graph.num_edges() == 500);
  std::size_t intra = 0;
  for (NodeId u = 0; u < pg.graph.num_nodes(); ++u)
    for (NodeId v : pg.graph.neighbors(u))
      if (u < v && pg.blocks[u] == pg.blocks[v]) ++intra;
  CHECK(intra == 400);
}

TEST_CASE("features") {
  const std::vector<std::int32_t> blocks{0, 0, 1, 1};
  const FeatureMatrix clean = one_hot_noise_features(blocks, 2, 0.0, 1);
  CHECK(clean.num_cols == 2);
  CHECK(clean.row(2)[1] == 1.0);
  CHECK(clean.row(2)[0] == 0.0);

  const FeatureMatrix words = topic_word_features(blocks, 2, 100, 10, 1.0, 3);
  CHECK(words.num_cols == 100);
  for (std::size_t r = 0; r < 4; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 100; ++c) {
      const double v = words.row(r)[c];
      CHECK((v == 0.0 || v == 1.0));
      total += v;
      if (v == 1.0) CHECK((c < 50) == (blocks[r] == 0));
    }
    CHECK(total >= 1.0);
    CHECK(total <= 10.0);
  }
}

TEST_CASE("datasets") {
  const SyntheticDataset cora = cora_like(1);
  CHECK(cora.graph.num_nodes() == 2708);
  CHECK(cora.graph.num_edges() == 5429);
  CHECK(cora.labels.num_classes == 7);
  CHECK(cora.features.num_rows == 2708);
  CHECK(cora.features.num_cols == 1433);
  CHECK(cora_like(1).graph == cora.graph);

  const SyntheticDataset two = two_block_fixture(2);
  CHECK(two.graph.num_nodes() == 100);
  CHECK(two.labels.num_classes == 2);
  CHECK(two.features.num_cols == 2);
}
