#include "gbc/gcn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "gbc/timer.hpp"

namespace gbc {

// ---------------------------------------------------------------------------
// Parameters

template <typename T>
ModelParams<T> ModelParams<T>::init(std::size_t in_dim, std::size_t hidden_dim, std::size_t num_classes,
                                    std::size_t num_layers, Rng& rng) {
  if (num_layers == 0) throw std::invalid_argument("num_layers must be >= 1");
  if (in_dim == 0 || num_classes == 0) throw std::invalid_argument("input and output dims must be >= 1");
  if (num_layers > 1 && hidden_dim == 0) throw std::invalid_argument("hidden_dim must be >= 1");
  std::vector<Matrix<T>> weights;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const std::size_t rows = l == 0 ? in_dim : hidden_dim;
    const std::size_t cols = l + 1 == num_layers ? num_classes : hidden_dim;
    const double scale = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-scale, scale);
    Matrix<T> w(rows, cols);
    for (T& x : w.data) x = static_cast<T>(dist(rng));
    weights.push_back(std::move(w));
  }
  return from_weights(std::move(weights));
}

template <typename T>
ModelParams<T> ModelParams<T>::from_weights(std::vector<Matrix<T>> weights) {
  if (weights.empty()) throw std::invalid_argument("model needs at least one layer");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows == 0 || weights[l].cols == 0 || weights[l].data.size() != weights[l].rows * weights[l].cols) {
      throw std::invalid_argument("layer " + std::to_string(l) + " has a bad shape");
    }
    if (l > 0 && weights[l].rows != weights[l - 1].cols) {
      throw std::invalid_argument("layer " + std::to_string(l) + " does not chain: " +
                                  std::to_string(weights[l - 1].cols) + " -> " + std::to_string(weights[l].rows));
    }
  }
  ModelParams p;
  for (const auto& w : weights) {
    p.first_moment.emplace_back(w.rows, w.cols);
    p.second_moment.emplace_back(w.rows, w.cols);
  }
  p.weights = std::move(weights);
  return p;
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.weights.push_back(weights[l].template cast<U>());
    out.first_moment.push_back(first_moment[l].template cast<U>());
    out.second_moment.push_back(second_moment[l].template cast<U>());
  }
  out.step = step;
  return out;
}

// ---------------------------------------------------------------------------
// Batches

template <typename T>
SparseMatrix<T> normalize_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  SparseMatrix<T> s;
  s.n = n;
  s.offsets.assign(1, 0);
  s.offsets.reserve(n + 1);
  s.cols.reserve(g.adjacency().size() + n);
  s.values.reserve(g.adjacency().size() + n);
  std::vector<double> inv_sqrt(n);
  for (NodeId v = 0; v < n; ++v) inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(g.neighbors(v).size() + 1));
  for (NodeId v = 0; v < n; ++v) {
    bool self_done = false;
    for (NodeId u : g.neighbors(v)) {
      if (!self_done && u > v) {
        s.cols.push_back(v);
        s.values.push_back(static_cast<T>(inv_sqrt[v] * inv_sqrt[v]));
        self_done = true;
      }
      s.cols.push_back(u);
      s.values.push_back(static_cast<T>(inv_sqrt[v] * inv_sqrt[u]));
    }
    if (!self_done) {
      s.cols.push_back(v);
      s.values.push_back(static_cast<T>(inv_sqrt[v] * inv_sqrt[v]));
    }
    s.offsets.push_back(s.cols.size());
  }
  return s;
}

std::vector<std::vector<std::uint32_t>> make_epoch_schedule(std::size_t num_balls, std::size_t balls_per_batch,
                                                            Rng& rng) {
  if (balls_per_batch == 0 || balls_per_batch > num_balls) {
    throw std::invalid_argument("balls_per_batch must be in [1, " + std::to_string(num_balls) + "], got " +
                                std::to_string(balls_per_batch));
  }
  std::vector<std::uint32_t> order(num_balls);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::uint32_t>> groups;
  for (std::size_t i = 0; i < num_balls; i += balls_per_batch) {
    const std::size_t end = std::min(num_balls, i + balls_per_batch);
    groups.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return groups;
}

template <typename T>
Batch<T> build_batch(const Graph& g, const Matrix<T>& features, const LabelVector& labels, const RoleMask& mask,
                     const BallPartition& p, std::span<const std::uint32_t> ball_ids, bool strict_block_diagonal) {
  if (ball_ids.empty()) throw std::invalid_argument("build_batch: empty ball selection");
  if (features.rows != g.num_nodes() || labels.labels.size() != g.num_nodes() || mask.roles.size() != g.num_nodes()) {
    throw std::invalid_argument("build_batch: features/labels/roles do not match the graph");
  }
  std::unordered_map<std::uint32_t, std::uint32_t> position;  // ball id -> slot in batch
  std::vector<std::size_t> base;  // first local id of each selected ball
  std::size_t n = 0;
  for (std::uint32_t b : ball_ids) {
    if (b >= p.num_balls()) throw std::invalid_argument("build_batch: ball id out of range");
    if (!position.emplace(b, static_cast<std::uint32_t>(base.size())).second) {
      throw std::invalid_argument("build_batch: duplicate ball id " + std::to_string(b));
    }
    base.push_back(n);
    n += p.balls[b].size();
  }

  Batch<T> batch;
  batch.global_ids.reserve(n);
  batch.block_of.reserve(n);
  for (std::size_t k = 0; k < ball_ids.size(); ++k) {
    for (NodeId v : p.balls[ball_ids[k]].nodes) {
      batch.global_ids.push_back(v);
      batch.block_of.push_back(static_cast<std::uint32_t>(k));
    }
  }

  auto local_of = [&](NodeId u, std::uint32_t slot) {
    const auto& nodes = p.balls[ball_ids[slot]].nodes;
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), u);
    return static_cast<NodeId>(base[slot] + static_cast<std::size_t>(it - nodes.begin()));
  };

  std::vector<Edge> edges;
  for (NodeId local = 0; local < n; ++local) {
    const NodeId v = batch.global_ids[local];
    const std::uint32_t own = batch.block_of[local];
    for (NodeId u : g.neighbors(v)) {
      const auto it = position.find(p.ball_of[u]);
      if (it == position.end()) continue;
      if (it->second != own && strict_block_diagonal) continue;
      const NodeId lu = local_of(u, it->second);
      if (local < lu) edges.push_back({local, lu});
    }
  }
  batch.subgraph = Graph::from_edges(n, edges);
  batch.norm_adj = normalize_adjacency<T>(batch.subgraph);

  batch.features = Matrix<T>(n, features.cols);
  batch.labels.resize(n);
  batch.roles.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const NodeId v = batch.global_ids[i];
    const auto src = features.row(v);
    std::copy(src.begin(), src.end(), batch.features.row(i).begin());
    batch.labels[i] = labels.labels[v];
    batch.roles[i] = mask.roles[v];
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

template <typename T>
Matrix<T> dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  Matrix<T> m(rows, cols);
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (T& x : m.data) x = u(rng) < rate ? T{0} : keep;
  return m;
}

template <typename T>
Matrix<T> hadamard(const Matrix<T>& a, const Matrix<T>& b) {
  Matrix<T> c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) c.data[i] = a.data[i] * b.data[i];
  return c;
}

}  // namespace

template <typename T>
ForwardPass<T> forward(const ModelParams<T>& params, const SparseMatrix<T>& adj, const Matrix<T>& features,
                       bool training, double dropout, Rng& rng) {
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
  if (adj.n != features.rows) throw std::invalid_argument("dimension mismatch: operator vs feature rows");
  if (params.weights.empty() || params.weights[0].rows != features.cols) {
    throw std::invalid_argument("dimension mismatch: feature columns vs first layer");
  }
  const bool drop = training && dropout > 0.0;
  const std::size_t num_layers = params.num_layers();
  ForwardPass<T> fp;
  fp.raw_input = &features;
  fp.inputs.resize(num_layers);
  fp.dropout_masks.resize(num_layers);
  fp.activations.resize(num_layers > 0 ? num_layers - 1 : 0);

  for (std::size_t l = 0; l < num_layers; ++l) {
    if (drop) {
      const Matrix<T>& x = l == 0 ? features : fp.activations[l - 1];
      fp.dropout_masks[l] = dropout_mask<T>(x.rows, x.cols, dropout, rng);
      fp.inputs[l] = hadamard(x, fp.dropout_masks[l]);
    } else if (l > 0) {
      fp.inputs[l] = fp.activations[l - 1];
    }
    Matrix<T> z = spmm(adj, matmul(fp.input(l), params.weights[l]));
    if (l + 1 < num_layers) {
      for (T& x : z.data) x = std::max(x, T{0});
      fp.activations[l] = std::move(z);
    } else {
      fp.logits = std::move(z);
    }
  }
  return fp;
}

template <typename T>
std::optional<LossAndGrads<T>> loss_and_grads(const ModelParams<T>& params, const Batch<T>& batch, double dropout,
                                              LossMode mode, Rng& rng) {
  const std::size_t n = batch.global_ids.size();
  std::vector<double> node_weight(n, 0.0);
  std::size_t num_train = 0;
  if (mode == LossMode::kBatchMean) {
    for (std::size_t i = 0; i < n; ++i) num_train += batch.roles[i] == Role::kTrain;
    if (num_train == 0) return std::nullopt;
    for (std::size_t i = 0; i < n; ++i) {
      if (batch.roles[i] == Role::kTrain) node_weight[i] = 1.0 / static_cast<double>(num_train);
    }
  } else {
    std::vector<std::size_t> per_block;
    for (std::size_t i = 0; i < n; ++i) {
      if (batch.block_of[i] >= per_block.size()) per_block.resize(batch.block_of[i] + 1, 0);
      if (batch.roles[i] == Role::kTrain) {
        ++per_block[batch.block_of[i]];
        ++num_train;
      }
    }
    if (num_train == 0) return std::nullopt;
    for (std::size_t i = 0; i < n; ++i) {
      if (batch.roles[i] == Role::kTrain) node_weight[i] = 1.0 / static_cast<double>(per_block[batch.block_of[i]]);
    }
  }

  ForwardPass<T> fp = forward(params, batch.norm_adj, batch.features, true, dropout, rng);
  const std::size_t c = fp.logits.cols;

  LossAndGrads<T> out;
  Matrix<T> grad(n, c);  // dL/dZ of the last layer
  for (std::size_t i = 0; i < n; ++i) {
    if (node_weight[i] == 0.0) continue;
    const auto row = fp.logits.row(i);
    const auto y = static_cast<std::size_t>(batch.labels[i]);
    if (y >= c) throw std::invalid_argument("label outside the model's class range");
    double mx = -std::numeric_limits<double>::infinity();
    for (T v : row) mx = std::max(mx, static_cast<double>(v));
    double sum = 0.0;
    for (T v : row) sum += std::exp(static_cast<double>(v) - mx);
    const double log_z = mx + std::log(sum);
    out.loss += node_weight[i] * (log_z - static_cast<double>(row[y]));
    for (std::size_t j = 0; j < c; ++j) {
      const double prob = std::exp(static_cast<double>(row[j]) - log_z);
      grad(i, j) = static_cast<T>(node_weight[i] * (prob - (j == y ? 1.0 : 0.0)));
    }
  }

  const std::size_t num_layers = params.num_layers();
  out.grads.resize(num_layers);
  for (std::size_t l = num_layers; l-- > 0;) {
    const Matrix<T> ag = spmm(batch.norm_adj, grad);  // the operator is symmetric
    out.grads[l] = matmul_at_b(fp.input(l), ag);
    if (l == 0) break;
    Matrix<T> dx = matmul_a_bt(ag, params.weights[l]);
    if (!fp.dropout_masks[l].data.empty()) dx = hadamard(dx, fp.dropout_masks[l]);
    const Matrix<T>& h = fp.activations[l - 1];
    for (std::size_t i = 0; i < dx.data.size(); ++i) {
      if (h.data[i] <= T{0}) dx.data[i] = T{0};
    }
    grad = std::move(dx);
  }
  return out;
}

template <typename T>
void adam_step(ModelParams<T>& params, const std::vector<Matrix<T>>& grads, const AdamOptions& opt) {
  if (grads.size() != params.weights.size()) throw std::invalid_argument("adam_step: gradient count mismatch");
  for (std::size_t l = 0; l < grads.size(); ++l) {
    if (grads[l].rows != params.weights[l].rows || grads[l].cols != params.weights[l].cols) {
      throw std::invalid_argument("adam_step: gradient shape mismatch at layer " + std::to_string(l));
    }
    for (std::size_t i = 0; i < grads[l].data.size(); ++i) {
      if (!std::isfinite(static_cast<double>(grads[l].data[i]))) {
        throw std::runtime_error("non-finite gradient at layer " + std::to_string(l) + ", entry " +
                                 std::to_string(i) + " (step " + std::to_string(params.step + 1) + ")");
      }
    }
  }
  ++params.step;
  const double t = static_cast<double>(params.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t l = 0; l < grads.size(); ++l) {
    auto& w = params.weights[l].data;
    auto& m = params.first_moment[l].data;
    auto& v = params.second_moment[l].data;
    const auto& g = grads[l].data;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = static_cast<double>(g[i]) + opt.weight_decay * static_cast<double>(w[i]);
      const double mi = opt.beta1 * static_cast<double>(m[i]) + (1.0 - opt.beta1) * gi;
      const double vi = opt.beta2 * static_cast<double>(v[i]) + (1.0 - opt.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      w[i] = static_cast<T>(static_cast<double>(w[i]) - opt.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + opt.eps));
    }
  }
}

// ---------------------------------------------------------------------------
// Evaluation

double micro_f1(std::uint64_t true_positives, std::uint64_t false_positives, std::uint64_t false_negatives) {
  const double tp = static_cast<double>(true_positives);
  const double precision = true_positives + false_positives == 0 ? 0.0 : tp / static_cast<double>(true_positives + false_positives);
  const double recall = true_positives + false_negatives == 0 ? 0.0 : tp / static_cast<double>(true_positives + false_negatives);
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

template <typename T>
double evaluate_logits(const Matrix<T>& logits, const LabelVector& labels, const RoleMask& mask, Role role) {
  if (logits.rows != labels.labels.size() || logits.rows != mask.roles.size()) {
    throw std::invalid_argument("evaluate: logits/labels/roles row mismatch");
  }
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  bool any = false;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    if (mask.roles[i] != role) continue;
    any = true;
    const auto row = logits.row(i);
    const auto pred = static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    // Single-label argmax: a miss is a false positive for the predicted
    // class and a false negative for the true one.
    if (pred == labels.labels[i]) {
      ++tp;
    } else {
      ++fp;
      ++fn;
    }
  }
  if (!any) throw std::invalid_argument("evaluate: no node has the requested role");
  return micro_f1(tp, fp, fn);
}

template <typename T>
double evaluate(const ModelParams<T>& params, const SparseMatrix<T>& full_adj, const Matrix<T>& features,
                const LabelVector& labels, const RoleMask& mask, Role role) {
  Rng unused(0);
  const ForwardPass<T> fp = forward(params, full_adj, features, false, 0.0, unused);
  return evaluate_logits(fp.logits, labels, mask, role);
}

Matrix<double> to_matrix(const FeatureMatrix& fm) {
  Matrix<double> m;
  m.rows = fm.num_rows;
  m.cols = fm.num_cols;
  m.data = fm.values;
  return m;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

template <typename T>
TrainResult train_impl(const Graph& g, const FeatureMatrix& features, const LabelVector& labels, const RoleMask& mask,
                       const BallPartition& p, const TrainConfig& cfg) {
  if (cfg.num_layers == 0) throw std::invalid_argument("num_layers must be >= 1");
  if (cfg.learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
  if (cfg.balls_per_batch == 0 || cfg.balls_per_batch > p.num_balls()) {
    throw std::invalid_argument("balls_per_batch must be in [1, t=" + std::to_string(p.num_balls()) + "]");
  }
  if (p.ball_of.size() != g.num_nodes()) throw std::invalid_argument("partition does not match the graph");
  if (mask.count(Role::kVal) == 0) throw std::invalid_argument("training needs at least one VAL node");

  Stopwatch total;
  Rng init_rng(mix_seed(cfg.seed, 1));
  Rng schedule_rng(mix_seed(cfg.seed, 2));
  Rng dropout_rng(mix_seed(cfg.seed, 3));

  const Matrix<T> x = to_matrix(features).template cast<T>();
  const SparseMatrix<T> full_adj = normalize_adjacency<T>(g);
  ModelParams<T> params = ModelParams<T>::init(features.num_cols, cfg.hidden_dim,
                                               static_cast<std::size_t>(labels.num_classes), cfg.num_layers, init_rng);
  AdamOptions adam;
  adam.learning_rate = cfg.learning_rate;
  adam.weight_decay = cfg.weight_decay;

  // With one ball per batch every batch recurs each epoch; build them once.
  std::vector<Batch<T>> cache;
  if (cfg.balls_per_batch == 1) {
    cache.reserve(p.num_balls());
    for (std::uint32_t b = 0; b < p.num_balls(); ++b) {
      const std::uint32_t id[1] = {b};
      cache.push_back(build_batch(g, x, labels, mask, p, id, cfg.strict_block_diagonal));
    }
  }

  TrainResult result;
  result.params = params.template cast<double>();
  double best = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Stopwatch watch;
    const auto groups = make_epoch_schedule(p.num_balls(), cfg.balls_per_batch, schedule_rng);
    double loss_sum = 0.0;
    std::size_t used = 0;
    for (const auto& group : groups) {
      std::optional<LossAndGrads<T>> lg;
      if (!cache.empty()) {
        lg = loss_and_grads(params, cache[group[0]], cfg.dropout, cfg.loss, dropout_rng);
      } else {
        const Batch<T> batch = build_batch(g, x, labels, mask, p, group, cfg.strict_block_diagonal);
        lg = loss_and_grads(params, batch, cfg.dropout, cfg.loss, dropout_rng);
      }
      if (!lg) continue;
      adam_step(params, lg->grads, adam);
      loss_sum += lg->loss;
      ++used;
    }
    const double val = evaluate(params, full_adj, x, labels, mask, Role::kVal);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = used ? loss_sum / static_cast<double>(used) : 0.0;
    rec.val_f1 = val;
    rec.ms = watch.elapsed_ms();
    result.history.push_back(rec);
    if (val > best) {
      best = val;
      result.best_epoch = epoch;
      result.params = params.template cast<double>();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  result.best_val_f1 = best < 0.0 ? 0.0 : best;
  result.train_ms = total.elapsed_ms();
  return result;
}

}  // namespace

TrainResult train(const Graph& g, const FeatureMatrix& features, const LabelVector& labels, const RoleMask& mask,
                  const BallPartition& p, const TrainConfig& cfg) {
  return cfg.single_precision ? train_impl<float>(g, features, labels, mask, p, cfg)
                              : train_impl<double>(g, features, labels, mask, p, cfg);
}

double evaluate_model(const ModelParams<double>& params, const Graph& g, const FeatureMatrix& features,
                      const LabelVector& labels, const RoleMask& mask, Role role, bool single_precision) {
  if (single_precision) {
    return evaluate(params.cast<float>(), normalize_adjacency<float>(g), to_matrix(features).cast<float>(), labels,
                    mask, role);
  }
  return evaluate(params, normalize_adjacency<double>(g), to_matrix(features), labels, mask, role);
}

// ---------------------------------------------------------------------------
// Persistence

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t get_u32(std::istream& in, const std::filesystem::path& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("truncated checkpoint " + path.string());
  return v;
}

}  // namespace

void write_checkpoint(const ModelParams<double>& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write("GBWT", 4);
  put_u32(out, static_cast<std::uint32_t>(params.weights.size()));
  for (const auto& w : params.weights) {
    put_u32(out, static_cast<std::uint32_t>(w.rows));
    put_u32(out, static_cast<std::uint32_t>(w.cols));
    out.write(reinterpret_cast<const char*>(w.data.data()), static_cast<std::streamsize>(w.data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ModelParams<double> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "GBWT", 4) != 0) throw DataError("not a GBWT checkpoint: " + path.string());
  const std::uint32_t num_layers = get_u32(in, path);
  std::vector<Matrix<double>> weights;
  for (std::uint32_t l = 0; l < num_layers; ++l) {
    const std::uint32_t rows = get_u32(in, path);
    const std::uint32_t cols = get_u32(in, path);
    Matrix<double> w(rows, cols);
    if (!in.read(reinterpret_cast<char*>(w.data.data()), static_cast<std::streamsize>(w.data.size() * sizeof(double)))) {
      throw DataError("truncated checkpoint " + path.string());
    }
    for (double v : w.data) {
      if (!std::isfinite(v)) throw DataError("non-finite weight in checkpoint " + path.string());
    }
    weights.push_back(std::move(w));
  }
  return ModelParams<double>::from_weights(std::move(weights));
}

void write_history(const std::vector<EpochRecord>& history, std::ostream& out) {
  for (const auto& r : history) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["train_loss"] = r.train_loss;
    j["val_f1"] = r.val_f1;
    j["ms"] = r.ms;
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

#define GBC_INSTANTIATE(T)                                                                                        \
  template struct ModelParams<T>;                                                                                 \
  template SparseMatrix<T> normalize_adjacency<T>(const Graph&);                                                  \
  template Batch<T> build_batch<T>(const Graph&, const Matrix<T>&, const LabelVector&, const RoleMask&,           \
                                   const BallPartition&, std::span<const std::uint32_t>, bool);                   \
  template ForwardPass<T> forward<T>(const ModelParams<T>&, const SparseMatrix<T>&, const Matrix<T>&, bool,       \
                                     double, Rng&);                                                               \
  template std::optional<LossAndGrads<T>> loss_and_grads<T>(const ModelParams<T>&, const Batch<T>&, double,       \
                                                            LossMode, Rng&);                                      \
  template void adam_step<T>(ModelParams<T>&, const std::vector<Matrix<T>>&, const AdamOptions&);                 \
  template double evaluate_logits<T>(const Matrix<T>&, const LabelVector&, const RoleMask&, Role);                \
  template double evaluate<T>(const ModelParams<T>&, const SparseMatrix<T>&, const Matrix<T>&, const LabelVector&, \
                              const RoleMask&, Role);

GBC_INSTANTIATE(float)
GBC_INSTANTIATE(double)
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<double> ModelParams<double>::cast<double>() const;

}  // namespace gbc
