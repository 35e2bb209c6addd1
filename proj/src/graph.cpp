#include "gbc/graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace gbc {

Graph Graph::from_edges(std::size_t num_nodes, std::span<const Edge> edges) {
  std::vector<EdgeIndex> counts(num_nodes + 1, 0);
  for (const Edge& e : edges) {
    if (e.u >= num_nodes || e.v >= num_nodes) {
      throw std::invalid_argument("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                                  ") has an endpoint >= " + std::to_string(num_nodes));
    }
    if (e.u == e.v) continue;
    ++counts[e.u + 1];
    ++counts[e.v + 1];
  }
  for (std::size_t i = 1; i <= num_nodes; ++i) counts[i] += counts[i - 1];

  std::vector<NodeId> raw(counts[num_nodes]);
  std::vector<EdgeIndex> fill(counts.begin(), counts.end() - 1);
  for (const Edge& e : edges) {
    if (e.u == e.v) continue;
    raw[fill[e.u]++] = e.v;
    raw[fill[e.v]++] = e.u;
  }

  // Sort each range, drop duplicates and compact in place.
  Graph g;
  g.offsets_.assign(num_nodes + 1, 0);
  EdgeIndex out = 0;
  for (std::size_t v = 0; v < num_nodes; ++v) {
    auto first = raw.begin() + static_cast<std::ptrdiff_t>(counts[v]);
    auto last = raw.begin() + static_cast<std::ptrdiff_t>(counts[v + 1]);
    std::sort(first, last);
    auto end = std::unique(first, last);
    for (auto it = first; it != end; ++it) raw[out++] = *it;
    g.offsets_[v + 1] = out;
  }
  raw.resize(out);
  raw.shrink_to_fit();
  g.neighbors_ = std::move(raw);
  return g;
}

Graph Graph::from_csr(std::vector<EdgeIndex> offsets, std::vector<NodeId> neighbors) {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != neighbors.size()) {
    throw std::invalid_argument("CSR offsets must start at 0 and end at the neighbor count");
  }
  const std::size_t n = offsets.size() - 1;
  for (std::size_t v = 0; v < n; ++v) {
    if (offsets[v] > offsets[v + 1]) throw std::invalid_argument("CSR offsets must be nondecreasing");
    for (EdgeIndex i = offsets[v]; i < offsets[v + 1]; ++i) {
      const NodeId u = neighbors[i];
      if (u >= n) throw std::invalid_argument("CSR neighbor id out of range");
      if (u == v) throw std::invalid_argument("CSR contains a self-loop");
      if (i > offsets[v] && neighbors[i - 1] >= u) {
        throw std::invalid_argument("CSR neighbor lists must be strictly ascending");
      }
    }
  }
  Graph g;
  g.offsets_ = std::move(offsets);
  g.neighbors_ = std::move(neighbors);
  for (NodeId v = 0; v < n; ++v) {
    for (NodeId u : g.neighbors(v)) {
      if (!g.has_edge(u, v)) throw std::invalid_argument("CSR adjacency is not symmetric");
    }
  }
  return g;
}

std::size_t Graph::degree(NodeId v) const {
  if (v >= num_nodes()) {
    throw std::out_of_range("node " + std::to_string(v) + " out of range");
  }
  return offsets_[v + 1] - offsets_[v];
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> edges;
  edges.reserve(num_edges());
  for (NodeId v = 0; v < num_nodes(); ++v) {
    for (NodeId u : neighbors(v)) {
      if (v < u) edges.push_back({v, u});
    }
  }
  return edges;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u >= num_nodes() || v >= num_nodes()) return false;
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::int64_t InducedSubgraph::local_id(NodeId global) const {
  auto it = std::lower_bound(global_ids.begin(), global_ids.end(), global);
  if (it == global_ids.end() || *it != global) return -1;
  return it - global_ids.begin();
}

InducedSubgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes) {
  const std::size_t n = g.num_nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] >= n) {
      throw std::invalid_argument("node " + std::to_string(nodes[i]) + " out of range");
    }
    if (i > 0 && nodes[i - 1] >= nodes[i]) {
      throw std::invalid_argument("induced_subgraph needs distinct ids in ascending order");
    }
  }

  InducedSubgraph sub;
  sub.global_ids.assign(nodes.begin(), nodes.end());
  std::vector<EdgeIndex> offsets(nodes.size() + 1, 0);
  std::vector<NodeId> adjacency;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    // Both lists are sorted, so a merge walk keeps the local lists sorted.
    auto nb = g.neighbors(nodes[i]);
    auto a = nb.begin();
    auto b = nodes.begin();
    while (a != nb.end() && b != nodes.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        adjacency.push_back(static_cast<NodeId>(b - nodes.begin()));
        ++a;
        ++b;
      }
    }
    offsets[i + 1] = adjacency.size();
  }
  sub.graph = Graph::from_csr(std::move(offsets), std::move(adjacency));
  return sub;
}

double laplacian_quadratic(const Graph& g, std::span<const double> x) {
  if (x.size() != g.num_nodes()) {
    throw std::invalid_argument("laplacian_quadratic: vector length " + std::to_string(x.size()) +
                                " != node count " + std::to_string(g.num_nodes()));
  }
  double total = 0.0;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    for (NodeId u : g.neighbors(v)) {
      if (v < u) {
        const double d = x[v] - x[u];
        total += d * d;
      }
    }
  }
  return total;
}

std::vector<NodeId> connected_components(const Graph& g, std::size_t* num_components) {
  constexpr NodeId kUnset = ~NodeId{0};
  std::vector<NodeId> label(g.num_nodes(), kUnset);
  std::vector<NodeId> stack;
  NodeId next = 0;
  for (NodeId s = 0; s < g.num_nodes(); ++s) {
    if (label[s] != kUnset) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      for (NodeId u : g.neighbors(v)) {
        if (label[u] == kUnset) {
          label[u] = next;
          stack.push_back(u);
        }
      }
    }
    ++next;
  }
  if (num_components) *num_components = next;
  return label;
}

}  // namespace gbc
