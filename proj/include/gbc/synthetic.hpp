#pragma once

// Seeded graph and feature generators used by tests, benchmarks and `gen`.

#include <cstdint>
#include <span>
#include <vector>

#include "gbc/dataset.hpp"
#include "gbc/graph.hpp"

namespace gbc {

/// G(n, p) by geometric skipping over the pair sequence; O(n + E).
Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed);

/// G(n, p) with p chosen for expected average degree `avg_degree`.
Graph erdos_renyi_avg_degree(std::size_t n, double avg_degree, std::uint64_t seed);

Graph cycle_graph(std::size_t n);
Graph path_graph(std::size_t n);
Graph star_graph(std::size_t n);

struct PlantedGraph {
  Graph graph;
  std::vector<std::int32_t> blocks;  // block of every node, blocks laid out contiguously
};

/// Stochastic block model: pairs inside a block connect with `p_in`, pairs
/// across blocks with `p_out`.
PlantedGraph stochastic_block_model(std::span<const std::size_t> block_sizes, double p_in, double p_out,
                                    std::uint64_t seed);

/// Block model with exactly `num_edges` distinct edges, a fraction
/// `intra_fraction` of them inside blocks (spread proportionally to the
/// number of intra-block pairs), the rest uniform over cross-block pairs.
PlantedGraph block_model_exact(std::span<const std::size_t> block_sizes, std::size_t num_edges,
                               double intra_fraction, std::uint64_t seed);

/// F = C columns: the block's indicator plus Gaussian noise of std `noise`.
FeatureMatrix one_hot_noise_features(std::span<const std::int32_t> blocks, std::size_t num_classes, double noise,
                                     std::uint64_t seed);

/// Sparse binary bag-of-words. The vocabulary is cut into one slice per
/// class; each node draws `words_per_node` words, each from its class slice
/// with probability `topic_prob` and uniformly otherwise.
FeatureMatrix topic_word_features(std::span<const std::int32_t> blocks, std::size_t num_classes,
                                  std::size_t vocabulary, std::size_t words_per_node, double topic_prob,
                                  std::uint64_t seed);

struct SyntheticDataset {
  Graph graph;
  FeatureMatrix features;
  LabelVector labels;
};

/// Stand-in with Cora's shape: N = 2708, E = 5429, 7 classes with Cora's
/// class sizes, 1433 binary word features.
SyntheticDataset cora_like(std::uint64_t seed);

/// Two blocks of 50, p_in = 0.25, p_out = 0.01, one-hot features with noise.
SyntheticDataset two_block_fixture(std::uint64_t seed, double noise = 0.5);

}  // namespace gbc
