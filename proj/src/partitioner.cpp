#include "gbc/partitioner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "indexed_heap.hpp"

namespace gbc {

namespace {

constexpr NodeId kUnmatched = ~NodeId{0};

std::vector<Weight> weighted_degrees(const WeightedGraph& g) {
  std::vector<Weight> wdeg(g.num_nodes(), 0);
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    for (EdgeIndex e = g.offsets[v]; e < g.offsets[v + 1]; ++e) wdeg[v] += g.edge_weights[e];
  }
  return wdeg;
}

// External (cut) edge weight per node.
std::vector<Weight> external_weights(const WeightedGraph& g, const Bisection& side) {
  std::vector<Weight> ext(g.num_nodes(), 0);
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    for (EdgeIndex e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
      if (side[g.adjacency[e]] != side[v]) ext[v] += g.edge_weights[e];
    }
  }
  return ext;
}

// Bookkeeping shared by the rebalancing phase and FM passes.
struct BisectionState {
  const WeightedGraph& g;
  Bisection side;
  std::vector<Weight> wdeg;
  std::vector<Weight> ext;
  Weight part_weight[2] = {0, 0};
  Weight cut = 0;

  BisectionState(const WeightedGraph& graph, Bisection s)
      : g(graph), side(std::move(s)), wdeg(weighted_degrees(graph)), ext(external_weights(graph, side)) {
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      part_weight[side[v]] += g.node_weights[v];
      cut += ext[v];
    }
    cut /= 2;
  }

  Weight gain(NodeId v) const { return 2 * ext[v] - wdeg[v]; }

  // Flips v and keeps ext/cut/part weights current. Calls touched(u) for each
  // neighbor after its ext changed.
  template <typename F>
  void flip(NodeId v, F&& touched) {
    cut -= gain(v);
    const std::uint8_t from = side[v];
    const std::uint8_t to = 1 - from;
    side[v] = to;
    part_weight[from] -= g.node_weights[v];
    part_weight[to] += g.node_weights[v];
    ext[v] = wdeg[v] - ext[v];
    for (EdgeIndex e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
      const NodeId u = g.adjacency[e];
      if (side[u] == to) {
        ext[u] -= g.edge_weights[e];
      } else {
        ext[u] += g.edge_weights[e];
      }
      touched(u);
    }
  }
};

// Moves best-gain nodes out of an overweight side until both caps hold or no
// single move can help.
void rebalance(BisectionState& st, const Weight cap[2]) {
  detail::IndexedMaxHeap<Weight> heap(st.g.num_nodes());
  for (int round = 0; round < 2; ++round) {
    const int heavy = st.part_weight[0] > cap[0] ? 0 : (st.part_weight[1] > cap[1] ? 1 : -1);
    if (heavy < 0) return;
    const int light = 1 - heavy;
    heap.clear();
    for (NodeId v = 0; v < st.g.num_nodes(); ++v) {
      if (st.side[v] == heavy) heap.push(v, st.gain(v));
    }
    while (st.part_weight[heavy] > cap[heavy] && !heap.empty()) {
      const NodeId v = heap.pop();
      if (st.part_weight[light] + st.g.node_weights[v] > cap[light]) continue;
      st.flip(v, [&](NodeId u) {
        if (heap.contains(u)) heap.update(u, st.gain(u));
      });
    }
  }
}

// One FM pass. Returns true if the cut improved.
bool fm_pass(BisectionState& st, const Weight cap[2]) {
  const std::size_t n = st.g.num_nodes();
  detail::IndexedMaxHeap<Weight> heap[2] = {detail::IndexedMaxHeap<Weight>(n),
                                            detail::IndexedMaxHeap<Weight>(n)};
  std::vector<char> locked(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    if (st.ext[v] > 0) heap[st.side[v]].push(v, st.gain(v));
  }

  const Weight start_cut = st.cut;
  Weight best_cut = st.cut;
  std::size_t best_len = 0;
  std::vector<NodeId> moves;
  const std::size_t stall_limit = std::max<std::size_t>(64, n / 20);

  auto refresh = [&](NodeId u) {
    if (locked[u]) return;
    auto& h = heap[st.side[u]];
    if (st.ext[u] > 0) {
      if (h.contains(u)) {
        h.update(u, st.gain(u));
      } else {
        h.push(u, st.gain(u));
      }
    } else if (h.contains(u)) {
      h.erase(u);
    }
  };

  while (true) {
    // Drop tops whose move would break the destination cap.
    int pick = -1;
    for (int s = 0; s < 2; ++s) {
      auto& h = heap[s];
      while (!h.empty() && st.part_weight[1 - s] + st.g.node_weights[h.top()] > cap[1 - s]) h.pop();
    }
    if (!heap[0].empty() && !heap[1].empty()) {
      const Weight g0 = heap[0].top_key();
      const Weight g1 = heap[1].top_key();
      if (g0 != g1) {
        pick = g0 > g1 ? 0 : 1;
      } else {
        pick = st.part_weight[1] > st.part_weight[0] ? 1 : 0;
      }
    } else if (!heap[0].empty()) {
      pick = 0;
    } else if (!heap[1].empty()) {
      pick = 1;
    }
    if (pick < 0) break;

    const NodeId v = heap[pick].pop();
    locked[v] = 1;
    st.flip(v, refresh);
    moves.push_back(v);
    if (st.cut < best_cut) {
      best_cut = st.cut;
      best_len = moves.size();
    } else if (moves.size() - best_len > stall_limit) {
      break;
    }
  }

  for (std::size_t i = moves.size(); i > best_len; --i) {
    st.flip(moves[i - 1], [](NodeId) {});
  }
  return st.cut < start_cut;
}

Bisection multilevel_bisect(const WeightedGraph& g, Weight target_left, const Weight cap[2], Rng& rng,
                            std::size_t stop_nodes, const PartitionOptions& opt) {
  std::vector<Contraction> levels;
  const WeightedGraph* cur = &g;
  while (cur->num_nodes() > stop_nodes) {
    const Matching m = heavy_edge_matching(*cur, rng);
    Contraction c = contract(*cur, m);
    // Matching stalls on star-like graphs; stop once a level shrinks < 5%.
    if (c.coarse.num_nodes() * 20 > cur->num_nodes() * 19) break;
    levels.push_back(std::move(c));
    cur = &levels.back().coarse;
  }

  const Weight total = cur->total_node_weight();
  Bisection side = initial_bisection(*cur, target_left, total - target_left, rng, opt.num_tries);
  side = fm_refine(*cur, std::move(side), cap[0], cap[1], opt.max_fm_passes);

  for (std::size_t i = levels.size(); i-- > 0;) {
    const WeightedGraph& finer = i == 0 ? g : levels[i - 1].coarse;
    const auto& coarse_of = levels[i].coarse_of;
    Bisection fine(finer.num_nodes());
    for (NodeId v = 0; v < finer.num_nodes(); ++v) fine[v] = side[coarse_of[v]];
    side = fm_refine(finer, std::move(fine), cap[0], cap[1], opt.max_fm_passes);
  }
  return side;
}

struct SubProblem {
  WeightedGraph graph;
  std::vector<NodeId> ids;
};

// Splits a subproblem into the subgraphs induced by each side.
void split_by_side(const SubProblem& parent, const Bisection& side, SubProblem out[2]) {
  const WeightedGraph& g = parent.graph;
  std::vector<NodeId> local(g.num_nodes());
  NodeId count[2] = {0, 0};
  for (NodeId v = 0; v < g.num_nodes(); ++v) local[v] = count[side[v]]++;
  for (int s = 0; s < 2; ++s) {
    out[s].graph = WeightedGraph{};
    out[s].graph.offsets.assign(1, 0);
    out[s].graph.node_weights.reserve(count[s]);
    out[s].ids.reserve(count[s]);
  }
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    SubProblem& sp = out[side[v]];
    for (EdgeIndex e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
      const NodeId u = g.adjacency[e];
      if (side[u] != side[v]) continue;
      sp.graph.adjacency.push_back(local[u]);
      sp.graph.edge_weights.push_back(g.edge_weights[e]);
    }
    sp.graph.offsets.push_back(sp.graph.adjacency.size());
    sp.graph.node_weights.push_back(g.node_weights[v]);
    sp.ids.push_back(parent.ids[v]);
  }
}

class RecursivePartitioner {
 public:
  RecursivePartitioner(std::size_t max_part, const PartitionOptions& opt, std::vector<std::uint32_t>& part_of)
      : max_part_(static_cast<Weight>(max_part)), opt_(opt), part_of_(part_of) {}

  void run(const SubProblem& sp, std::size_t k, std::uint32_t first_part, std::uint64_t seed) {
    if (k == 1) {
      for (NodeId id : sp.ids) part_of_[id] = first_part;
      return;
    }
    const auto n = static_cast<Weight>(sp.graph.num_nodes());
    const auto kl = static_cast<Weight>((k + 1) / 2);
    const auto kr = static_cast<Weight>(k / 2);
    // Each side must fit its share of parts at max_part and keep >= 1 node per part.
    const Weight cap[2] = {std::min(kl * max_part_, n - kr), std::min(kr * max_part_, n - kl)};
    const Weight target = std::clamp(n * kl / static_cast<Weight>(k), n - cap[1], cap[0]);
    const std::size_t stop = std::max(opt_.coarsen_stop_min, opt_.coarsen_stop_per_part * k);

    Rng rng(mix_seed(seed, 0));
    const Bisection side = multilevel_bisect(sp.graph, target, cap, rng, stop, opt_);

    SubProblem halves[2];
    split_by_side(sp, side, halves);
    if (static_cast<Weight>(halves[0].ids.size()) > cap[0] ||
        static_cast<Weight>(halves[1].ids.size()) > cap[1]) {
      throw std::logic_error("partition_k: bisection violated its balance caps");
    }
    run(halves[0], static_cast<std::size_t>(kl), first_part, mix_seed(seed, 1));
    run(halves[1], static_cast<std::size_t>(kr), first_part + static_cast<std::uint32_t>(kl),
        mix_seed(seed, 2));
  }

 private:
  Weight max_part_;
  const PartitionOptions& opt_;
  std::vector<std::uint32_t>& part_of_;
};

}  // namespace

WeightedGraph WeightedGraph::unit(const Graph& g) {
  WeightedGraph wg;
  wg.offsets.assign(g.offsets().begin(), g.offsets().end());
  wg.adjacency.assign(g.adjacency().begin(), g.adjacency().end());
  wg.edge_weights.assign(wg.adjacency.size(), 1);
  wg.node_weights.assign(g.num_nodes(), 1);
  return wg;
}

Weight WeightedGraph::total_node_weight() const {
  return std::accumulate(node_weights.begin(), node_weights.end(), Weight{0});
}

Weight WeightedGraph::total_edge_weight() const {
  return std::accumulate(edge_weights.begin(), edge_weights.end(), Weight{0}) / 2;
}

std::vector<std::size_t> PartitionAssignment::part_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::uint32_t p : part_of) ++sizes[p];
  return sizes;
}

Matching heavy_edge_matching(const WeightedGraph& g, std::span<const NodeId> visit_order) {
  const std::size_t n = g.num_nodes();
  Matching m;
  m.mate_of.assign(n, kUnmatched);
  for (NodeId v : visit_order) {
    if (m.mate_of[v] != kUnmatched) continue;
    NodeId best = kUnmatched;
    Weight best_w = 0;
    for (EdgeIndex e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
      const NodeId u = g.adjacency[e];
      if (u == v || m.mate_of[u] != kUnmatched) continue;
      const Weight w = g.edge_weights[e];
      if (best == kUnmatched || w > best_w || (w == best_w && u < best)) {
        best = u;
        best_w = w;
      }
    }
    if (best == kUnmatched) {
      m.mate_of[v] = v;
    } else {
      m.mate_of[v] = best;
      m.mate_of[best] = v;
    }
  }
  for (NodeId v = 0; v < n; ++v) {
    if (m.mate_of[v] == kUnmatched) m.mate_of[v] = v;
  }
  return m;
}

Matching heavy_edge_matching(const WeightedGraph& g, Rng& rng) {
  std::vector<NodeId> order(g.num_nodes());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::shuffle(order.begin(), order.end(), rng);
  return heavy_edge_matching(g, order);
}

Matching heavy_edge_matching(const Graph& g, Rng& rng) {
  return heavy_edge_matching(WeightedGraph::unit(g), rng);
}

Contraction contract(const WeightedGraph& g, const Matching& m) {
  const std::size_t n = g.num_nodes();
  Contraction c;
  c.coarse_of.assign(n, 0);
  NodeId next = 0;
  for (NodeId v = 0; v < n; ++v) {
    if (m.mate_of[v] >= v) {
      c.coarse_of[v] = next;
      c.coarse_of[m.mate_of[v]] = next;
      ++next;
    }
  }

  WeightedGraph& cg = c.coarse;
  cg.node_weights.assign(next, 0);
  cg.offsets.assign(1, 0);
  cg.adjacency.reserve(g.adjacency.size() / 2);
  cg.edge_weights.reserve(g.adjacency.size() / 2);
  constexpr EdgeIndex kNoSlot = ~EdgeIndex{0};
  std::vector<EdgeIndex> slot(next, kNoSlot);

  for (NodeId v = 0; v < n; ++v) {
    const NodeId mate = m.mate_of[v];
    if (mate < v) continue;
    const NodeId cv = c.coarse_of[v];
    const EdgeIndex begin = cg.adjacency.size();
    const NodeId members[2] = {v, mate};
    const int num_members = mate == v ? 1 : 2;
    for (int i = 0; i < num_members; ++i) {
      const NodeId f = members[i];
      cg.node_weights[cv] += g.node_weights[f];
      for (EdgeIndex e = g.offsets[f]; e < g.offsets[f + 1]; ++e) {
        const NodeId cu = c.coarse_of[g.adjacency[e]];
        if (cu == cv) continue;
        if (slot[cu] == kNoSlot) {
          slot[cu] = cg.adjacency.size();
          cg.adjacency.push_back(cu);
          cg.edge_weights.push_back(g.edge_weights[e]);
        } else {
          cg.edge_weights[slot[cu]] += g.edge_weights[e];
        }
      }
    }
    for (EdgeIndex e = begin; e < cg.adjacency.size(); ++e) slot[cg.adjacency[e]] = kNoSlot;
    cg.offsets.push_back(cg.adjacency.size());
  }
  return c;
}

Weight cut_weight(const WeightedGraph& g, const Bisection& side) {
  Weight cut = 0;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    for (EdgeIndex e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
      if (side[g.adjacency[e]] != side[v]) cut += g.edge_weights[e];
    }
  }
  return cut / 2;
}

Bisection initial_bisection(const WeightedGraph& g, Weight target_left, Weight target_right, Rng& rng,
                            int num_tries) {
  const std::size_t n = g.num_nodes();
  const Weight total = g.total_node_weight();
  if (target_left < 0 || target_right < 0 || target_left + target_right > total) {
    throw std::invalid_argument("initial_bisection: targets (" + std::to_string(target_left) + ", " +
                                std::to_string(target_right) + ") exceed total weight " +
                                std::to_string(total));
  }
  if (n == 0 || target_left == 0) return Bisection(n, 1);

  const std::vector<Weight> wdeg = weighted_degrees(g);
  std::uniform_int_distribution<NodeId> pick_seed(0, static_cast<NodeId>(n - 1));
  detail::IndexedMaxHeap<Weight> heap(n);
  Bisection best;
  Weight best_cut = 0;

  for (int t = 0; t < std::max(1, num_tries); ++t) {
    const NodeId seed = pick_seed(rng);
    Bisection side(n, 1);
    std::vector<Weight> gain(wdeg.size());
    for (std::size_t v = 0; v < n; ++v) gain[v] = -wdeg[v];
    heap.clear();
    Weight left = 0;
    NodeId next_free = 0;

    auto absorb = [&](NodeId v) {
      side[v] = 0;
      left += g.node_weights[v];
      if (heap.contains(v)) heap.erase(v);
      for (EdgeIndex e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
        const NodeId u = g.adjacency[e];
        if (side[u] == 0) continue;
        gain[u] += 2 * g.edge_weights[e];
        if (heap.contains(u)) {
          heap.update(u, gain[u]);
        } else {
          heap.push(u, gain[u]);
        }
      }
    };

    absorb(seed);
    while (left < target_left) {
      NodeId v;
      if (heap.empty()) {
        while (side[next_free] == 0) ++next_free;
        v = next_free;
      } else {
        v = heap.pop();
      }
      absorb(v);
    }

    const Weight cut = cut_weight(g, side);
    if (best.empty() || cut < best_cut) {
      best = std::move(side);
      best_cut = cut;
    }
  }
  return best;
}

Bisection fm_refine(const WeightedGraph& g, Bisection side, Weight max_left, Weight max_right, int max_passes) {
  const Weight total = g.total_node_weight();
  if (max_left + max_right < total) {
    throw std::invalid_argument("fm_refine: caps (" + std::to_string(max_left) + ", " + std::to_string(max_right) +
                                ") cannot hold total weight " + std::to_string(total));
  }
  if (side.size() != g.num_nodes()) throw std::invalid_argument("fm_refine: assignment size mismatch");
  const Weight cap[2] = {max_left, max_right};
  BisectionState st(g, std::move(side));
  rebalance(st, cap);
  for (int pass = 0; pass < max_passes; ++pass) {
    if (!fm_pass(st, cap)) break;
  }
  return std::move(st.side);
}

std::size_t max_part_size(std::size_t num_nodes, std::size_t k, double epsilon) {
  const std::size_t ideal = (num_nodes + k - 1) / k;
  const double slack = epsilon * static_cast<double>(num_nodes) / static_cast<double>(k);
  return ideal + static_cast<std::size_t>(std::ceil(slack - 1e-9));
}

std::uint64_t count_cut_edges(const Graph& g, std::span<const std::uint32_t> part_of) {
  std::uint64_t cut = 0;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    for (NodeId u : g.neighbors(v)) {
      if (v < u && part_of[u] != part_of[v]) ++cut;
    }
  }
  return cut;
}

PartitionAssignment partition_k(const Graph& g, std::size_t k, double epsilon, std::uint64_t seed,
                                const PartitionOptions& options) {
  const std::size_t n = g.num_nodes();
  if (k == 0) throw std::invalid_argument("partition_k: k must be >= 1");
  if (k > n) {
    throw std::invalid_argument("partition_k: k = " + std::to_string(k) + " exceeds node count " +
                                std::to_string(n));
  }
  if (!(epsilon >= 0.0)) throw std::invalid_argument("partition_k: epsilon must be >= 0");

  PartitionAssignment pa;
  pa.k = static_cast<std::uint32_t>(k);
  pa.part_of.assign(n, 0);
  SubProblem root{WeightedGraph::unit(g), {}};
  root.ids.resize(n);
  std::iota(root.ids.begin(), root.ids.end(), NodeId{0});

  RecursivePartitioner rp(max_part_size(n, k, epsilon), options, pa.part_of);
  rp.run(root, k, 0, seed);
  pa.cut_edges = count_cut_edges(g, pa.part_of);
  return pa;
}

}  // namespace gbc
