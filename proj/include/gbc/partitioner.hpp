#pragma once

// Multilevel k-way partitioning by recursive bisection: heavy-edge matching,
// contraction, greedy graph-growing bisection and FM boundary refinement.

#include <cstdint>
#include <span>
#include <vector>

#include "gbc/graph.hpp"
#include "gbc/rng.hpp"

namespace gbc {

using Weight = std::int64_t;

/// Node- and edge-weighted undirected graph used on the coarse levels.
struct WeightedGraph {
  std::vector<EdgeIndex> offsets;
  std::vector<NodeId> adjacency;
  std::vector<Weight> edge_weights;  // parallel to adjacency
  std::vector<Weight> node_weights;

  static WeightedGraph unit(const Graph& g);

  std::size_t num_nodes() const { return node_weights.size(); }
  Weight total_node_weight() const;
  /// Sum of edge weights, each undirected edge counted once.
  Weight total_edge_weight() const;
};

struct Matching {
  std::vector<NodeId> mate_of;  // mate_of[v] == v means unmatched
};

struct Contraction {
  WeightedGraph coarse;
  std::vector<NodeId> coarse_of;  // fine node -> coarse node
};

/// Side of every node in a 2-way split: 0 (left) or 1 (right).
using Bisection = std::vector<std::uint8_t>;

struct PartitionOptions {
  /// Stop coarsening at max(coarsen_stop_min, coarsen_stop_per_part * k).
  std::size_t coarsen_stop_min = 40;
  std::size_t coarsen_stop_per_part = 4;
  int num_tries = 8;
  int max_fm_passes = 10;
};

struct PartitionAssignment {
  std::vector<std::uint32_t> part_of;
  std::uint32_t k = 0;
  std::uint64_t cut_edges = 0;

  std::vector<std::size_t> part_sizes() const;
};

/// Greedy matching visiting nodes in `visit_order`: each unmatched node takes
/// the unmatched neighbor with the heaviest connecting edge (ties: smallest
/// id), otherwise matches itself.
Matching heavy_edge_matching(const WeightedGraph& g, std::span<const NodeId> visit_order);
/// Same rule with a random visit order drawn from `rng`.
Matching heavy_edge_matching(const WeightedGraph& g, Rng& rng);
Matching heavy_edge_matching(const Graph& g, Rng& rng);

/// Merges matched pairs. Coarse ids follow the smallest fine id of each pair.
Contraction contract(const WeightedGraph& g, const Matching& m);

Weight cut_weight(const WeightedGraph& g, const Bisection& side);

/// Greedy graph growing from `num_tries` random seeds; the lowest-cut result
/// is returned. Throws std::invalid_argument if the targets exceed the total
/// node weight.
Bisection initial_bisection(const WeightedGraph& g, Weight target_left, Weight target_right, Rng& rng,
                            int num_tries = 8);

/// Fiduccia-Mattheyses refinement with rollback to the best prefix of each
/// pass. When the input already respects the caps, the cut never increases
/// and the caps hold on return. An input over a cap is first rebalanced by
/// best-gain moves out of the heavy side. Throws std::invalid_argument when
/// max_left + max_right is below the total node weight.
Bisection fm_refine(const WeightedGraph& g, Bisection side, Weight max_left, Weight max_right,
                    int max_passes = 10);

/// Largest part size allowed for N nodes in k parts: ceil(N/k) + ceil(eps*N/k).
std::size_t max_part_size(std::size_t num_nodes, std::size_t k, double epsilon);

/// Balanced k-way partition minimizing cut edges. Deterministic in `seed`.
/// Throws std::invalid_argument for k == 0 or k > N.
PartitionAssignment partition_k(const Graph& g, std::size_t k, double epsilon, std::uint64_t seed,
                                const PartitionOptions& options = {});

std::uint64_t count_cut_edges(const Graph& g, std::span<const std::uint32_t> part_of);

}  // namespace gbc
