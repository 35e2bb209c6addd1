#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gbc/granular_ball.hpp"
#include "gbc/graph.hpp"
#include "gbc/rng.hpp"

namespace gbc {

/// Graph whose nodes are balls. Superedge (i, j) carries the number of
/// original edges crossing between balls i and j; these counts are the
/// off-diagonal weights of C^T L C.
struct CoarsenedGraph {
  std::size_t num_supernodes = 0;
  std::vector<EdgeIndex> super_offsets;
  std::vector<std::uint32_t> super_neighbors;  // ascending per supernode
  std::vector<std::uint64_t> cross_edge_count;  // parallel to super_neighbors
  std::vector<std::uint64_t> internal_edges;    // per ball
  std::vector<InducedSubgraph> ball_subgraphs;

  std::size_t num_superedges() const { return super_neighbors.size() / 2; }
  /// Cross count between two balls, 0 when no superedge exists.
  std::uint64_t cross_count(std::uint32_t i, std::uint32_t j) const;
  /// The unweighted view: supernode adjacency as a Graph.
  Graph unweighted() const;
};

/// Classifies every edge as internal or crossing in one pass. Throws
/// std::invalid_argument when `p` does not match `g`, std::logic_error if
/// edge conservation fails.
CoarsenedGraph build_supergraph(const Graph& g, const BallPartition& p, bool with_subgraphs = true);

/// x = C xbar: every node takes its ball's value.
std::vector<double> project_up(const BallPartition& p, std::span<const double> xbar);

/// xbar^T (C^T L C) xbar via the cross counts.
double coarse_laplacian_quadratic(const CoarsenedGraph& cg, std::span<const double> xbar);

struct RayleighTrial {
  double coarse_numerator = 0.0;    // xbar^T Lbar xbar
  double original_numerator = 0.0;  // (C xbar)^T L (C xbar)
  double coarse_rayleigh = 0.0;     // R_c
  double original_rayleigh = 0.0;   // R_o at x = C xbar
  double numerator_ratio = 1.0;
  double denominator_ratio = 1.0;   // sum_j |ball_j| xbar_j^2 / sum_j xbar_j^2
};

struct RayleighReport {
  std::vector<RayleighTrial> trials;
  double numerator_ratio_max_dev = 0.0;
  double denominator_ratio_min = 0.0;
  double denominator_ratio_max = 0.0;
  double denominator_ratio_mean = 0.0;
};

/// Evaluates both Rayleigh quotients on `trials` random unit vectors xbar.
RayleighReport rayleigh_report(const Graph& g, const BallPartition& p, const CoarsenedGraph& cg, std::size_t trials,
                               Rng& rng);

}  // namespace gbc
