#include "gbc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "gbc/rng.hpp"

namespace gbc {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
}

// Appends edges among pairs (i, j), i < j, both in [lo, hi), with prob p.
void sample_within(std::size_t lo, std::size_t hi, double p, Rng& rng, std::vector<Edge>& out) {
  if (p <= 0.0 || hi - lo < 2) return;
  if (p >= 1.0) {
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t j = i + 1; j < hi; ++j) out.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
    return;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double log_q = std::log1p(-p);
  // Walk rows v > w in lexicographic order, skipping geometric gaps.
  std::int64_t v = 1;
  std::int64_t w = -1;
  const auto n = static_cast<std::int64_t>(hi - lo);
  while (v < n) {
    const double r = unit(rng);
    w += 1 + static_cast<std::int64_t>(std::floor(std::log1p(-r) / log_q));
    while (w >= v && v < n) {
      w -= v;
      ++v;
    }
    if (v < n) out.push_back({static_cast<NodeId>(lo + static_cast<std::size_t>(w)), static_cast<NodeId>(lo + static_cast<std::size_t>(v))});
  }
}

// Pairs (i, j) with i in [a0, a1) and j in [b0, b1), prob p.
void sample_between(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1, double p, Rng& rng,
                    std::vector<Edge>& out) {
  if (p <= 0.0 || a1 == a0 || b1 == b0) return;
  const std::uint64_t cols = b1 - b0;
  const std::uint64_t total = (a1 - a0) * cols;
  if (p >= 1.0) {
    for (std::uint64_t k = 0; k < total; ++k) {
      out.push_back({static_cast<NodeId>(a0 + k / cols), static_cast<NodeId>(b0 + k % cols)});
    }
    return;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double log_q = std::log1p(-p);
  std::uint64_t k = 0;
  bool first = true;
  while (true) {
    const double r = unit(rng);
    const double skip = std::floor(std::log1p(-r) / log_q);
    if (skip >= static_cast<double>(total)) break;
    k += static_cast<std::uint64_t>(skip) + (first ? 0 : 1);
    first = false;
    if (k >= total) break;
    out.push_back({static_cast<NodeId>(a0 + k / cols), static_cast<NodeId>(b0 + k % cols)});
  }
}

std::vector<std::int32_t> blocks_from_sizes(std::span<const std::size_t> sizes) {
  std::vector<std::int32_t> blocks;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    if (sizes[b] == 0) throw std::invalid_argument("block sizes must be >= 1");
    blocks.insert(blocks.end(), sizes[b], static_cast<std::int32_t>(b));
  }
  return blocks;
}

}  // namespace

Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  check_probability(p, "p");
  Rng rng(seed);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(p * static_cast<double>(n) * static_cast<double>(n) / 2.0 * 1.05) + 16);
  sample_within(0, n, p, rng, edges);
  return Graph::from_edges(n, edges);
}

Graph erdos_renyi_avg_degree(std::size_t n, double avg_degree, std::uint64_t seed) {
  if (n < 2) return Graph::from_edges(n, {});
  return erdos_renyi(n, std::min(1.0, avg_degree / static_cast<double>(n - 1)), seed);
}

Graph cycle_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i + 1)});
  if (n >= 3) edges.push_back({static_cast<NodeId>(n - 1), 0});
  return Graph::from_edges(n, edges);
}

Graph path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i + 1)});
  return Graph::from_edges(n, edges);
}

Graph star_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 1; i < n; ++i) edges.push_back({0, static_cast<NodeId>(i)});
  return Graph::from_edges(n, edges);
}

PlantedGraph stochastic_block_model(std::span<const std::size_t> block_sizes, double p_in, double p_out,
                                    std::uint64_t seed) {
  check_probability(p_in, "p_in");
  check_probability(p_out, "p_out");
  PlantedGraph out;
  out.blocks = blocks_from_sizes(block_sizes);
  std::vector<std::size_t> start(block_sizes.size() + 1, 0);
  std::partial_sum(block_sizes.begin(), block_sizes.end(), start.begin() + 1);
  Rng rng(seed);
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < block_sizes.size(); ++a) {
    sample_within(start[a], start[a + 1], p_in, rng, edges);
    for (std::size_t b = a + 1; b < block_sizes.size(); ++b) {
      sample_between(start[a], start[a + 1], start[b], start[b + 1], p_out, rng, edges);
    }
  }
  out.graph = Graph::from_edges(out.blocks.size(), edges);
  return out;
}

PlantedGraph block_model_exact(std::span<const std::size_t> block_sizes, std::size_t num_edges,
                               double intra_fraction, std::uint64_t seed) {
  check_probability(intra_fraction, "intra_fraction");
  PlantedGraph out;
  out.blocks = blocks_from_sizes(block_sizes);
  const std::size_t n = out.blocks.size();
  std::vector<std::size_t> start(block_sizes.size() + 1, 0);
  std::partial_sum(block_sizes.begin(), block_sizes.end(), start.begin() + 1);

  std::vector<double> pairs(block_sizes.size());
  double intra_pairs = 0.0;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    pairs[b] = static_cast<double>(block_sizes[b]) * static_cast<double>(block_sizes[b] - 1) / 2.0;
    intra_pairs += pairs[b];
  }
  const double all_pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const auto intra_target = static_cast<std::size_t>(std::llround(intra_fraction * static_cast<double>(num_edges)));
  const std::size_t cross_target = num_edges - intra_target;
  if (static_cast<double>(intra_target) > intra_pairs || static_cast<double>(cross_target) > all_pairs - intra_pairs) {
    throw std::invalid_argument("block_model_exact: more edges requested than pairs available");
  }

  // Largest-remainder apportionment of intra edges over blocks.
  std::vector<std::size_t> quota(block_sizes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    const double share = intra_pairs > 0 ? static_cast<double>(intra_target) * pairs[b] / intra_pairs : 0.0;
    quota[b] = static_cast<std::size_t>(std::floor(share));
    assigned += quota[b];
    remainders.emplace_back(-(share - std::floor(share)), b);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t i = 0; assigned < intra_target; ++i, ++assigned) ++quota[remainders[i % remainders.size()].second];

  Rng rng(seed);
  std::unordered_set<std::uint64_t> seen;
  std::vector<Edge> edges;
  auto add = [&](NodeId u, NodeId v) {
    if (u == v) return false;
    if (u > v) std::swap(u, v);
    if (!seen.insert((std::uint64_t{u} << 32) | v).second) return false;
    edges.push_back({u, v});
    return true;
  };
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    std::uniform_int_distribution<std::size_t> pick(start[b], start[b + 1] - 1);
    for (std::size_t made = 0; made < quota[b];) made += add(static_cast<NodeId>(pick(rng)), static_cast<NodeId>(pick(rng)));
  }
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  for (std::size_t made = 0; made < cross_target;) {
    const auto u = static_cast<NodeId>(any(rng));
    const auto v = static_cast<NodeId>(any(rng));
    if (out.blocks[u] == out.blocks[v]) continue;
    made += add(u, v);
  }
  out.graph = Graph::from_edges(n, edges);
  return out;
}

FeatureMatrix one_hot_noise_features(std::span<const std::int32_t> blocks, std::size_t num_classes, double noise,
                                     std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, noise);
  FeatureMatrix fm;
  fm.num_rows = blocks.size();
  fm.num_cols = num_classes;
  fm.values.assign(fm.num_rows * fm.num_cols, 0.0);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double base = static_cast<std::size_t>(blocks[i]) == c ? 1.0 : 0.0;
      fm.values[i * num_classes + c] = base + (noise > 0.0 ? gauss(rng) : 0.0);
    }
  }
  return fm;
}

FeatureMatrix topic_word_features(std::span<const std::int32_t> blocks, std::size_t num_classes,
                                  std::size_t vocabulary, std::size_t words_per_node, double topic_prob,
                                  std::uint64_t seed) {
  check_probability(topic_prob, "topic_prob");
  if (num_classes == 0 || vocabulary < num_classes) throw std::invalid_argument("vocabulary must cover every class");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_word(0, vocabulary - 1);
  const std::size_t slice = vocabulary / num_classes;
  std::uniform_int_distribution<std::size_t> in_slice(0, slice - 1);
  FeatureMatrix fm;
  fm.num_rows = blocks.size();
  fm.num_cols = vocabulary;
  fm.values.assign(fm.num_rows * fm.num_cols, 0.0);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::size_t topic = static_cast<std::size_t>(blocks[i]) % num_classes;
    for (std::size_t w = 0; w < words_per_node; ++w) {
      const std::size_t word = unit(rng) < topic_prob ? topic * slice + in_slice(rng) : any_word(rng);
      fm.values[i * vocabulary + word] = 1.0;
    }
  }
  return fm;
}

SyntheticDataset cora_like(std::uint64_t seed) {
  static constexpr std::size_t kSizes[] = {351, 217, 418, 818, 426, 298, 180};
  PlantedGraph pg = block_model_exact(kSizes, 5429, 0.8, mix_seed(seed, 0));
  // Shuffle ids so that blocks are not contiguous ranges.
  std::vector<NodeId> perm(pg.blocks.size());
  std::iota(perm.begin(), perm.end(), 0u);
  Rng rng(mix_seed(seed, 1));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Edge> edges = pg.graph.edge_list();
  for (Edge& e : edges) e = {perm[e.u], perm[e.v]};
  std::vector<std::int32_t> labels(pg.blocks.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[perm[i]] = pg.blocks[i];

  SyntheticDataset ds;
  ds.graph = Graph::from_edges(labels.size(), edges);
  ds.features = topic_word_features(labels, 7, 1433, 18, 0.4, mix_seed(seed, 2));
  ds.labels = LabelVector::from_labels(std::move(labels));
  return ds;
}

SyntheticDataset two_block_fixture(std::uint64_t seed, double noise) {
  static constexpr std::size_t kSizes[] = {50, 50};
  PlantedGraph pg = stochastic_block_model(kSizes, 0.25, 0.01, mix_seed(seed, 0));
  SyntheticDataset ds;
  ds.graph = std::move(pg.graph);
  ds.features = one_hot_noise_features(pg.blocks, 2, noise, mix_seed(seed, 1));
  ds.labels = LabelVector::from_labels(std::move(pg.blocks));
  return ds;
}

}  // namespace gbc
