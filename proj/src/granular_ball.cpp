#include "gbc/granular_ball.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "gbc/partitioner.hpp"
#include "gbc/timer.hpp"

namespace gbc {

namespace {

constexpr std::uint32_t kOutside = ~std::uint32_t{0};

void check_ball_nodes(const Graph& g, std::span<const NodeId> nodes) {
  if (nodes.empty()) throw std::invalid_argument("ball must contain at least one node");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] >= g.num_nodes()) {
      throw std::invalid_argument("ball node " + std::to_string(nodes[i]) + " out of range");
    }
    if (i > 0 && nodes[i - 1] >= nodes[i]) {
      throw std::invalid_argument("ball nodes must be distinct and ascending");
    }
  }
}

std::size_t count_internal_edges(const Graph& g, std::span<const NodeId> nodes) {
  std::size_t twice = 0;
  for (NodeId v : nodes) {
    for (NodeId u : g.neighbors(v)) {
      if (std::binary_search(nodes.begin(), nodes.end(), u)) ++twice;
    }
  }
  return twice / 2;
}

Ball make_unchecked(std::vector<NodeId> nodes, std::size_t internal_edges) {
  Ball b;
  b.nodes = std::move(nodes);
  b.internal_edges = internal_edges;
  b.quality = static_cast<double>(internal_edges) / static_cast<double>(b.nodes.size());
  return b;
}

// Reusable per-worker scratch: marks the nodes of the ball being processed
// with their position inside it. Sized to the whole graph once.
class Splitter {
 public:
  explicit Splitter(const Graph& g) : g_(g), local_(g.num_nodes(), kOutside) {}

  void bind(const Ball& ball) {
    for (std::size_t i = 0; i < ball.nodes.size(); ++i) local_[ball.nodes[i]] = static_cast<std::uint32_t>(i);
  }
  void unbind(const Ball& ball) {
    for (NodeId v : ball.nodes) local_[v] = kOutside;
  }

  std::pair<NodeId, NodeId> centers(const Ball& ball, bool global_degree) const {
    std::size_t best_deg[2] = {0, 0};
    std::size_t best_pos[2] = {kNone, kNone};
    for (std::size_t i = 0; i < ball.nodes.size(); ++i) {
      const NodeId v = ball.nodes[i];
      const std::size_t d = global_degree ? g_.neighbors(v).size() : internal_degree(v);
      // Nodes are visited in ascending id order, so strict > keeps the smaller id on ties.
      if (best_pos[0] == kNone || d > best_deg[0]) {
        best_deg[1] = best_deg[0];
        best_pos[1] = best_pos[0];
        best_deg[0] = d;
        best_pos[0] = i;
      } else if (best_pos[1] == kNone || d > best_deg[1]) {
        best_deg[1] = d;
        best_pos[1] = i;
      }
    }
    return {ball.nodes[best_pos[0]], ball.nodes[best_pos[1]]};
  }

  std::pair<Ball, Ball> split(const Ball& ball, NodeId a, NodeId b) {
    const std::size_t n = ball.nodes.size();
    owner_.assign(n, kUnowned);
    const std::uint32_t la = local_[a];
    const std::uint32_t lb = local_[b];
    owner_[la] = 0;
    owner_[lb] = 1;
    frontier_[0].assign(1, a);
    frontier_[1].assign(1, b);
    while (!frontier_[0].empty() || !frontier_[1].empty()) {
      // A expands first at every depth, so equal distances resolve to A.
      for (int s = 0; s < 2; ++s) {
        next_.clear();
        for (NodeId v : frontier_[s]) {
          for (NodeId u : g_.neighbors(v)) {
            const std::uint32_t lu = local_[u];
            if (lu == kOutside || owner_[lu] != kUnowned) continue;
            owner_[lu] = static_cast<std::uint8_t>(s);
            next_.push_back(u);
          }
        }
        frontier_[s].swap(next_);
      }
    }

    std::vector<NodeId> side_nodes[2];
    std::size_t twice_internal[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      if (owner_[i] == kUnowned) owner_[i] = 0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const NodeId v = ball.nodes[i];
      const std::uint8_t s = owner_[i];
      side_nodes[s].push_back(v);
      for (NodeId u : g_.neighbors(v)) {
        const std::uint32_t lu = local_[u];
        if (lu != kOutside && owner_[lu] == s) ++twice_internal[s];
      }
    }
    return {make_unchecked(std::move(side_nodes[0]), twice_internal[0] / 2),
            make_unchecked(std::move(side_nodes[1]), twice_internal[1] / 2)};
  }

  bool contains(NodeId v) const { return local_[v] != kOutside; }

 private:
  static constexpr std::size_t kNone = ~std::size_t{0};
  static constexpr std::uint8_t kUnowned = 2;

  std::size_t internal_degree(NodeId v) const {
    std::size_t d = 0;
    for (NodeId u : g_.neighbors(v)) d += local_[u] != kOutside;
    return d;
  }

  const Graph& g_;
  std::vector<std::uint32_t> local_;
  std::vector<std::uint8_t> owner_;
  std::vector<NodeId> frontier_[2];
  std::vector<NodeId> next_;
};

double purity_of(const Ball& ball, const LabelVector& labels, const RoleMask* eligible,
                 std::vector<std::size_t>& counts) {
  counts.assign(static_cast<std::size_t>(labels.num_classes), 0);
  std::size_t counted = 0;
  for (NodeId v : ball.nodes) {
    if (eligible && eligible->roles[v] != Role::kTrain) continue;
    ++counts[static_cast<std::size_t>(labels.labels[v])];
    ++counted;
  }
  if (counted == 0) return 1.0;
  const std::size_t top = *std::max_element(counts.begin(), counts.end());
  return static_cast<double>(top) / static_cast<double>(counted);
}

bool uses_purity(QualityMode m) { return m != QualityMode::kAdaptiveAd; }

void check_config(const Graph& g, const CoarsenConfig& cfg, const LabelVector* labels) {
  if (!(cfg.purity_threshold > 0.0 && cfg.purity_threshold <= 1.0)) {
    throw std::invalid_argument("purity threshold must lie in (0, 1]");
  }
  if (cfg.initial_k && (*cfg.initial_k == 0 || *cfg.initial_k > g.num_nodes())) {
    throw std::invalid_argument("initial k must lie in [1, N]");
  }
  if (uses_purity(cfg.mode) && !labels) {
    throw std::invalid_argument("quality mode " + to_string(cfg.mode) + " needs labels");
  }
  if (labels && labels->labels.size() != g.num_nodes()) {
    throw std::invalid_argument("label count does not match the graph");
  }
}

std::vector<Ball> split_with(Splitter& splitter, Ball root, const CoarsenConfig& cfg,
                             const LabelVector* labels, const RoleMask* mask, SplitStats& stats) {
  const RoleMask* eligible = cfg.purity_all_labels ? nullptr : mask;
  std::vector<std::size_t> counts;
  std::vector<Ball> done;
  std::vector<Ball> stack;
  stack.push_back(std::move(root));
  while (!stack.empty()) {
    Ball ball = std::move(stack.back());
    stack.pop_back();
    if (ball.size() < 2) {
      done.push_back(std::move(ball));
      continue;
    }

    double purity = 1.0;
    if (uses_purity(cfg.mode)) {
      purity = purity_of(ball, *labels, eligible, counts);
      if (cfg.mode == QualityMode::kPurityThreshold && purity >= cfg.purity_threshold) {
        done.push_back(std::move(ball));
        continue;
      }
    }

    splitter.bind(ball);
    const auto [a, b] = splitter.centers(ball, cfg.global_degree_centers);
    auto [child_a, child_b] = splitter.split(ball, a, b);
    splitter.unbind(ball);

    const bool ad_ok = adaptive_should_split(ball.quality, child_a.quality, child_b.quality);
    bool accept = false;
    switch (cfg.mode) {
      case QualityMode::kAdaptiveAd:
        accept = ad_ok;
        break;
      case QualityMode::kPurityThreshold:
        accept = purity < cfg.purity_threshold;
        break;
      case QualityMode::kPurityAndAd:
        accept = purity < cfg.purity_threshold && ad_ok;
        break;
    }

    if (cfg.record_trace) {
      stats.trace.push_back({ball.size(), child_a.size(), child_b.size(), ball.quality, child_a.quality,
                             child_b.quality, purity, accept});
    }
    if (accept) {
      ++stats.accepted;
      stack.push_back(std::move(child_b));
      stack.push_back(std::move(child_a));
    } else {
      ++stats.rejected;
      done.push_back(std::move(ball));
    }
  }
  return done;
}

}  // namespace

Ball Ball::make(const Graph& g, std::vector<NodeId> nodes) {
  check_ball_nodes(g, nodes);
  const std::size_t internal = count_internal_edges(g, nodes);
  return make_unchecked(std::move(nodes), internal);
}

BallPartition BallPartition::from_balls(std::vector<Ball> balls, std::size_t num_nodes) {
  BallPartition p;
  p.ball_of.assign(num_nodes, kOutside);
  for (std::size_t b = 0; b < balls.size(); ++b) {
    if (balls[b].nodes.empty()) throw std::invalid_argument("empty ball " + std::to_string(b));
    for (NodeId v : balls[b].nodes) {
      if (v >= num_nodes) throw std::invalid_argument("ball node out of range");
      if (p.ball_of[v] != kOutside) {
        throw std::invalid_argument("node " + std::to_string(v) + " is in more than one ball");
      }
      p.ball_of[v] = static_cast<std::uint32_t>(b);
    }
  }
  for (std::size_t v = 0; v < num_nodes; ++v) {
    if (p.ball_of[v] == kOutside) throw std::invalid_argument("node " + std::to_string(v) + " is in no ball");
  }
  p.balls = std::move(balls);
  return p;
}

BallPartition BallPartition::from_assignment(const Graph& g, std::span<const std::uint32_t> ball_of) {
  if (ball_of.size() != g.num_nodes()) throw std::invalid_argument("assignment length != node count");
  std::uint32_t t = 0;
  for (std::uint32_t b : ball_of) t = std::max(t, b + 1);
  std::vector<std::vector<NodeId>> members(t);
  std::vector<std::size_t> twice_internal(t, 0);
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    members[ball_of[v]].push_back(v);
    for (NodeId u : g.neighbors(v)) twice_internal[ball_of[v]] += ball_of[u] == ball_of[v];
  }
  std::vector<Ball> balls;
  balls.reserve(t);
  for (std::uint32_t b = 0; b < t; ++b) {
    if (members[b].empty()) throw std::invalid_argument("ball id " + std::to_string(b) + " has no nodes");
    balls.push_back(make_unchecked(std::move(members[b]), twice_internal[b] / 2));
  }
  BallPartition p;
  p.balls = std::move(balls);
  p.ball_of.assign(ball_of.begin(), ball_of.end());
  return p;
}

std::string to_string(QualityMode mode) {
  switch (mode) {
    case QualityMode::kAdaptiveAd:
      return "adaptive-ad";
    case QualityMode::kPurityThreshold:
      return "purity";
    case QualityMode::kPurityAndAd:
      return "purity-ad";
  }
  return "unknown";
}

QualityMode parse_quality_mode(const std::string& name) {
  if (name == "adaptive-ad" || name == "ad" || name == "ADAPTIVE_AD") return QualityMode::kAdaptiveAd;
  if (name == "purity" || name == "PURITY_THRESHOLD") return QualityMode::kPurityThreshold;
  if (name == "purity-ad" || name == "PURITY_AND_AD") return QualityMode::kPurityAndAd;
  throw std::invalid_argument("unknown quality mode '" + name + "'");
}

double ball_quality(const Graph& g, std::span<const NodeId> nodes) {
  std::vector<NodeId> sorted(nodes.begin(), nodes.end());
  std::sort(sorted.begin(), sorted.end());
  check_ball_nodes(g, sorted);
  return static_cast<double>(count_internal_edges(g, sorted)) / static_cast<double>(sorted.size());
}

double ball_purity(const Ball& ball, const LabelVector& labels, const RoleMask* eligible) {
  if (ball.nodes.empty()) throw std::invalid_argument("ball_purity: empty ball");
  std::vector<std::size_t> counts;
  return purity_of(ball, labels, eligible, counts);
}

std::pair<NodeId, NodeId> pick_split_centers(const Graph& g, const Ball& ball, bool global_degree) {
  if (ball.size() < 2) throw std::invalid_argument("pick_split_centers: ball needs at least two nodes");
  Splitter s(g);
  s.bind(ball);
  return s.centers(ball, global_degree);
}

std::pair<Ball, Ball> dual_bfs_split(const Graph& g, const Ball& ball, NodeId center_a, NodeId center_b) {
  if (center_a == center_b) throw std::invalid_argument("dual_bfs_split: centers must differ");
  Splitter s(g);
  s.bind(ball);
  if (center_a >= g.num_nodes() || center_b >= g.num_nodes() || !s.contains(center_a) || !s.contains(center_b)) {
    throw std::invalid_argument("dual_bfs_split: center not in ball");
  }
  return s.split(ball, center_a, center_b);
}

std::vector<Ball> split_ball_recursive(const Graph& g, Ball ball, const CoarsenConfig& cfg, const LabelVector* labels,
                                       const RoleMask* mask, SplitStats* stats) {
  check_config(g, cfg, labels);
  check_ball_nodes(g, ball.nodes);
  Splitter splitter(g);
  SplitStats local;
  auto out = split_with(splitter, std::move(ball), cfg, labels, mask, stats ? *stats : local);
  return out;
}

std::size_t default_initial_k(std::size_t num_nodes) {
  auto k = static_cast<std::size_t>(std::sqrt(static_cast<double>(num_nodes)));
  while (k * k > num_nodes) --k;
  while ((k + 1) * (k + 1) <= num_nodes) ++k;
  return std::max<std::size_t>(1, k);
}

CoarsenResult coarsen(const Graph& g, const CoarsenConfig& cfg, const LabelVector* labels, const RoleMask* mask) {
  check_config(g, cfg, labels);
  if (mask && mask->roles.size() != g.num_nodes()) {
    throw std::invalid_argument("role mask size does not match the graph");
  }
  const std::size_t n = g.num_nodes();
  CoarsenResult result;
  const Stopwatch total;

  std::vector<Ball> initial;
  {
    const Stopwatch sw;
    if (cfg.skip_init) {
      std::vector<NodeId> all(n);
      for (NodeId v = 0; v < n; ++v) all[v] = v;
      initial.push_back(make_unchecked(std::move(all), g.num_edges()));
      result.initial_k = 1;
      result.initial_part_of.assign(n, 0);
    } else {
      result.initial_k = cfg.initial_k.value_or(default_initial_k(n));
      const PartitionAssignment pa = partition_k(g, result.initial_k, cfg.epsilon, cfg.seed);
      result.initial_cut_edges = pa.cut_edges;
      initial = BallPartition::from_assignment(g, pa.part_of).balls;
      result.initial_part_of = pa.part_of;
    }
    result.init_ms = sw.elapsed_ms();
  }

  std::vector<Ball> final_balls;
  {
    const Stopwatch sw;
    if (cfg.skip_split) {
      final_balls = std::move(initial);
    } else {
      const std::size_t m = initial.size();
      std::vector<std::vector<Ball>> pieces(m);
      std::vector<SplitStats> stats(m);
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        Splitter splitter(g);
        for (std::size_t i = next++; i < m; i = next++) {
          pieces[i] = split_with(splitter, std::move(initial[i]), cfg, labels, mask, stats[i]);
        }
      };
      const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, std::max<std::size_t>(1, m));
      if (threads == 1) {
        worker();
      } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
      }
      for (std::size_t i = 0; i < m; ++i) {
        result.splits.accepted += stats[i].accepted;
        result.splits.rejected += stats[i].rejected;
        result.splits.trace.insert(result.splits.trace.end(), stats[i].trace.begin(), stats[i].trace.end());
        for (Ball& b : pieces[i]) final_balls.push_back(std::move(b));
      }
    }
    result.split_ms = sw.elapsed_ms();
  }

  result.partition = BallPartition::from_balls(std::move(final_balls), n);
  result.coarsen_ms = total.elapsed_ms();
  return result;
}

}  // namespace gbc
