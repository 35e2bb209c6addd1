#pragma once

// Granular-ball coarsening: balls, their quality measures, binary splitting
// and the end-to-end driver (root ball -> initial partition -> splitting).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gbc/dataset.hpp"
#include "gbc/graph.hpp"

namespace gbc {

/// A node subset treated as one coarse unit.
struct Ball {
  std::vector<NodeId> nodes;  // ascending
  std::size_t internal_edges = 0;
  double quality = 0.0;  // internal_edges / |nodes|

  /// Validates `nodes` and counts the induced edges.
  static Ball make(const Graph& g, std::vector<NodeId> nodes);
  std::size_t size() const { return nodes.size(); }
};

struct BallPartition {
  std::vector<Ball> balls;
  std::vector<std::uint32_t> ball_of;  // node -> ball index

  std::size_t num_balls() const { return balls.size(); }
  /// Assembles `ball_of` from `balls`; throws std::invalid_argument if the
  /// balls do not cover [0, num_nodes) disjointly.
  static BallPartition from_balls(std::vector<Ball> balls, std::size_t num_nodes);
  /// Groups nodes by assignment. Ball ids must be dense: 0..t-1, none empty.
  static BallPartition from_assignment(const Graph& g, std::span<const std::uint32_t> ball_of);
};

enum class QualityMode { kAdaptiveAd, kPurityThreshold, kPurityAndAd };

std::string to_string(QualityMode mode);
/// Accepts "adaptive-ad", "purity", "purity-ad" (and the enum-style names).
QualityMode parse_quality_mode(const std::string& name);

struct CoarsenConfig {
  QualityMode mode = QualityMode::kAdaptiveAd;
  std::optional<std::size_t> initial_k;  // empty: floor(sqrt(N))
  double purity_threshold = 1.0;
  bool skip_init = false;   // -w/o I
  bool skip_split = false;  // -w/o B
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  bool global_degree_centers = false;
  bool purity_all_labels = false;
  std::size_t threads = 1;
  bool record_trace = false;
};

/// One trial split considered during recursion.
struct SplitRecord {
  std::size_t parent_size = 0;
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  double quality_parent = 0.0;
  double quality_a = 0.0;
  double quality_b = 0.0;
  double purity_parent = 1.0;
  bool accepted = false;
};

struct SplitStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<SplitRecord> trace;  // filled only with CoarsenConfig::record_trace
};

struct CoarsenResult {
  BallPartition partition;
  std::size_t initial_k = 0;
  std::vector<std::uint32_t> initial_part_of;  // node -> initial ball
  std::uint64_t initial_cut_edges = 0;
  double init_ms = 0.0;
  double split_ms = 0.0;
  double coarsen_ms = 0.0;
  SplitStats splits;
};

/// Ball quality: internal edges over node count. Throws on an empty set.
double ball_quality(const Graph& g, std::span<const NodeId> nodes);

/// Fraction of counted nodes carrying the most frequent label. With a mask
/// only TRAIN nodes are counted; a ball without TRAIN nodes reports 1.0.
double ball_purity(const Ball& ball, const LabelVector& labels, const RoleMask* eligible = nullptr);

/// Two highest-degree nodes of the ball (ties: smallest id). Degrees are
/// taken inside the ball's induced subgraph unless `global_degree` is set.
/// Throws std::invalid_argument for balls with fewer than two nodes.
std::pair<NodeId, NodeId> pick_split_centers(const Graph& g, const Ball& ball, bool global_degree = false);

/// Synchronized two-source BFS inside the ball. Node v joins A iff
/// d(v, a) <= d(v, b); nodes reachable from neither center join A.
std::pair<Ball, Ball> dual_bfs_split(const Graph& g, const Ball& ball, NodeId center_a, NodeId center_b);

/// (q_a + q_b) / 2 > q_parent, strictly.
inline bool adaptive_should_split(double q_parent, double q_a, double q_b) {
  return (q_a + q_b) / 2.0 > q_parent;
}

/// Recursive binary splitting of one ball. Returns the final balls in
/// depth-first order (child A before child B). Purity modes need `labels`.
std::vector<Ball> split_ball_recursive(const Graph& g, Ball ball, const CoarsenConfig& cfg,
                                       const LabelVector* labels = nullptr, const RoleMask* mask = nullptr,
                                       SplitStats* stats = nullptr);

/// Root ball, initial k-way partition, then recursive splitting of every
/// initial ball. Balls are ordered by initial ball, then depth-first.
CoarsenResult coarsen(const Graph& g, const CoarsenConfig& cfg, const LabelVector* labels = nullptr,
                      const RoleMask* mask = nullptr);

/// floor(sqrt(N)), at least 1.
std::size_t default_initial_k(std::size_t num_nodes);

}  // namespace gbc
