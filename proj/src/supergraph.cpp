#include "gbc/supergraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gbc {

std::uint64_t CoarsenedGraph::cross_count(std::uint32_t i, std::uint32_t j) const {
  const auto first = super_neighbors.begin() + static_cast<std::ptrdiff_t>(super_offsets[i]);
  const auto last = super_neighbors.begin() + static_cast<std::ptrdiff_t>(super_offsets[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0;
  return cross_edge_count[static_cast<std::size_t>(it - super_neighbors.begin())];
}

Graph CoarsenedGraph::unweighted() const {
  return Graph::from_csr(super_offsets, std::vector<NodeId>(super_neighbors.begin(), super_neighbors.end()));
}

CoarsenedGraph build_supergraph(const Graph& g, const BallPartition& p, bool with_subgraphs) {
  const std::size_t t = p.num_balls();
  if (p.ball_of.size() != g.num_nodes()) {
    throw std::invalid_argument("build_supergraph: partition covers " + std::to_string(p.ball_of.size()) +
                                " nodes, graph has " + std::to_string(g.num_nodes()));
  }
  for (std::size_t b = 0; b < t; ++b) {
    for (NodeId v : p.balls[b].nodes) {
      if (v >= g.num_nodes() || p.ball_of[v] != b) {
        throw std::invalid_argument("build_supergraph: ball_of disagrees with ball " + std::to_string(b));
      }
    }
  }

  CoarsenedGraph cg;
  cg.num_supernodes = t;
  cg.internal_edges.assign(t, 0);
  cg.super_offsets.assign(1, 0);
  constexpr EdgeIndex kNoSlot = ~EdgeIndex{0};
  std::vector<EdgeIndex> slot(t, kNoSlot);
  std::uint64_t twice_internal_total = 0;

  for (std::uint32_t i = 0; i < t; ++i) {
    const EdgeIndex begin = cg.super_neighbors.size();
    std::uint64_t twice_internal = 0;
    for (NodeId v : p.balls[i].nodes) {
      for (NodeId u : g.neighbors(v)) {
        const std::uint32_t j = p.ball_of[u];
        if (j == i) {
          ++twice_internal;
        } else if (slot[j] == kNoSlot) {
          slot[j] = cg.super_neighbors.size();
          cg.super_neighbors.push_back(j);
          cg.cross_edge_count.push_back(1);
        } else {
          ++cg.cross_edge_count[slot[j]];
        }
      }
    }
    const EdgeIndex end = cg.super_neighbors.size();
    for (EdgeIndex e = begin; e < end; ++e) slot[cg.super_neighbors[e]] = kNoSlot;

    // Sort this supernode's neighbors, carrying the counts along.
    std::vector<std::pair<std::uint32_t, std::uint64_t>> row;
    row.reserve(end - begin);
    for (EdgeIndex e = begin; e < end; ++e) row.emplace_back(cg.super_neighbors[e], cg.cross_edge_count[e]);
    std::sort(row.begin(), row.end());
    for (std::size_t k = 0; k < row.size(); ++k) {
      cg.super_neighbors[begin + k] = row[k].first;
      cg.cross_edge_count[begin + k] = row[k].second;
    }
    cg.super_offsets.push_back(end);
    cg.internal_edges[i] = twice_internal / 2;
    twice_internal_total += twice_internal;
  }

  const std::uint64_t cross_total =
      std::accumulate(cg.cross_edge_count.begin(), cg.cross_edge_count.end(), std::uint64_t{0}) / 2;
  if (twice_internal_total / 2 + cross_total != g.num_edges()) {
    throw std::logic_error("build_supergraph: internal + crossing edges != E");
  }

  if (with_subgraphs) {
    cg.ball_subgraphs.reserve(t);
    for (const Ball& b : p.balls) cg.ball_subgraphs.push_back(induced_subgraph(g, b.nodes));
  }
  return cg;
}

std::vector<double> project_up(const BallPartition& p, std::span<const double> xbar) {
  if (xbar.size() != p.num_balls()) {
    throw std::invalid_argument("project_up: xbar has length " + std::to_string(xbar.size()) + ", expected " +
                                std::to_string(p.num_balls()));
  }
  std::vector<double> x(p.ball_of.size());
  for (std::size_t v = 0; v < x.size(); ++v) x[v] = xbar[p.ball_of[v]];
  return x;
}

double coarse_laplacian_quadratic(const CoarsenedGraph& cg, std::span<const double> xbar) {
  if (xbar.size() != cg.num_supernodes) {
    throw std::invalid_argument("coarse_laplacian_quadratic: xbar has length " + std::to_string(xbar.size()) +
                                ", expected " + std::to_string(cg.num_supernodes));
  }
  double total = 0.0;
  for (std::uint32_t i = 0; i < cg.num_supernodes; ++i) {
    for (EdgeIndex e = cg.super_offsets[i]; e < cg.super_offsets[i + 1]; ++e) {
      const std::uint32_t j = cg.super_neighbors[e];
      if (i < j) {
        const double d = xbar[i] - xbar[j];
        total += static_cast<double>(cg.cross_edge_count[e]) * d * d;
      }
    }
  }
  return total;
}

RayleighReport rayleigh_report(const Graph& g, const BallPartition& p, const CoarsenedGraph& cg, std::size_t trials,
                               Rng& rng) {
  if (trials == 0) throw std::invalid_argument("rayleigh_report: trials must be >= 1");
  const std::size_t t = p.num_balls();
  std::normal_distribution<double> normal(0.0, 1.0);
  RayleighReport report;
  report.denominator_ratio_min = INFINITY;
  report.denominator_ratio_max = -INFINITY;
  double ratio_sum = 0.0;

  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::vector<double> xbar(t);
    double norm2 = 0.0;
    for (double& v : xbar) {
      v = normal(rng);
      norm2 += v * v;
    }
    const double norm = std::sqrt(norm2);
    for (double& v : xbar) v /= norm;

    RayleighTrial rt;
    rt.coarse_numerator = coarse_laplacian_quadratic(cg, xbar);
    const std::vector<double> x = project_up(p, xbar);
    rt.original_numerator = laplacian_quadratic(g, x);

    double lifted_norm2 = 0.0;  // (C xbar)^T (C xbar) = sum_j |ball_j| xbar_j^2
    double coarse_norm2 = 0.0;
    for (std::size_t j = 0; j < t; ++j) {
      lifted_norm2 += static_cast<double>(p.balls[j].size()) * xbar[j] * xbar[j];
      coarse_norm2 += xbar[j] * xbar[j];
    }
    rt.coarse_rayleigh = rt.coarse_numerator / lifted_norm2;
    double x_norm2 = 0.0;
    for (double v : x) x_norm2 += v * v;
    rt.original_rayleigh = rt.original_numerator / x_norm2;

    if (rt.original_numerator == 0.0) {
      rt.numerator_ratio = rt.coarse_numerator == 0.0 ? 1.0 : INFINITY;
    } else {
      rt.numerator_ratio = rt.coarse_numerator / rt.original_numerator;
    }
    rt.denominator_ratio = lifted_norm2 / coarse_norm2;

    report.numerator_ratio_max_dev = std::max(report.numerator_ratio_max_dev, std::abs(rt.numerator_ratio - 1.0));
    report.denominator_ratio_min = std::min(report.denominator_ratio_min, rt.denominator_ratio);
    report.denominator_ratio_max = std::max(report.denominator_ratio_max, rt.denominator_ratio);
    ratio_sum += rt.denominator_ratio;
    report.trials.push_back(rt);
  }
  report.denominator_ratio_mean = ratio_sum / static_cast<double>(trials);
  return report;
}

}  // namespace gbc
