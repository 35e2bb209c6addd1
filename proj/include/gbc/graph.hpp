#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace gbc {

using NodeId = std::uint32_t;
using EdgeIndex = std::uint64_t;

struct Edge {
  NodeId u;
  NodeId v;
};

/// Undirected, unweighted simple graph in CSR form.
///
/// Both directions of every edge are stored; `num_edges()` counts each
/// undirected edge once. Neighbor lists are sorted ascending, free of
/// self-loops and duplicates. Instances are immutable after construction.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph on `num_nodes` nodes. Self-loops are dropped and
  /// duplicate or reversed edges are merged. Throws std::invalid_argument on
  /// an endpoint >= num_nodes.
  static Graph from_edges(std::size_t num_nodes, std::span<const Edge> edges);

  /// Adopts an existing CSR. Every invariant is checked; throws
  /// std::invalid_argument if one fails.
  static Graph from_csr(std::vector<EdgeIndex> offsets, std::vector<NodeId> neighbors);

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const { return neighbors_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
  }

  /// Degree of `v`. Throws std::out_of_range for v >= num_nodes().
  std::size_t degree(NodeId v) const;

  std::span<const EdgeIndex> offsets() const { return offsets_; }
  std::span<const NodeId> adjacency() const { return neighbors_; }

  /// Undirected edges with u < v, in CSR order.
  std::vector<Edge> edge_list() const;

  bool has_edge(NodeId u, NodeId v) const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<EdgeIndex> offsets_;
  std::vector<NodeId> neighbors_;
};

/// Order-preserving relabeling of a node subset. `global_ids[local]` is the
/// original id; `local_id` inverts it.
struct InducedSubgraph {
  Graph graph;
  std::vector<NodeId> global_ids;

  /// Local id of a global node, or -1 when the node is not in the subset.
  std::int64_t local_id(NodeId global) const;
};

/// Subgraph on `nodes` (strictly ascending, each < N) keeping exactly the
/// edges with both endpoints inside. Throws std::invalid_argument on
/// duplicate, unsorted or out-of-range ids.
InducedSubgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes);

/// x^T L x for L = D - A, evaluated as the sum over edges of (x_u - x_v)^2.
double laplacian_quadratic(const Graph& g, std::span<const double> x);

/// Component label per node (labels are 0..c-1 in order of smallest member).
std::vector<NodeId> connected_components(const Graph& g, std::size_t* num_components = nullptr);

}  // namespace gbc
