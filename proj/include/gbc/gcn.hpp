#pragma once

// Minibatch GCN training over granular-ball subgraphs: batch assembly,
// forward/backward passes, Adam, and Micro-F1 evaluation.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gbc/dataset.hpp"
#include "gbc/dense.hpp"
#include "gbc/granular_ball.hpp"
#include "gbc/graph.hpp"
#include "gbc/rng.hpp"

namespace gbc {

enum class LossMode {
  kBatchMean,  // mean over all TRAIN nodes in the batch
  kBlockMean,  // sum over balls of the per-ball TRAIN mean
};

struct TrainConfig {
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 64;
  double dropout = 0.5;
  std::size_t balls_per_batch = 1;
  double learning_rate = 0.01;
  double weight_decay = 0.0;
  std::size_t max_epochs = 400;
  std::size_t patience = 50;
  bool strict_block_diagonal = false;
  LossMode loss = LossMode::kBatchMean;
  bool single_precision = false;
  std::uint64_t seed = 0;
};

/// Layer weights plus Adam moments. Layer 0 is F x H, hidden layers H x H,
/// the last H x C (a single layer maps F x C directly).
template <typename T>
struct ModelParams {
  std::vector<Matrix<T>> weights;
  std::vector<Matrix<T>> first_moment;
  std::vector<Matrix<T>> second_moment;
  std::uint64_t step = 0;

  /// Glorot-uniform weights, zero moments.
  static ModelParams init(std::size_t in_dim, std::size_t hidden_dim, std::size_t num_classes,
                          std::size_t num_layers, Rng& rng);
  /// Wraps explicit weights with zero moments. Checks that dimensions chain.
  static ModelParams from_weights(std::vector<Matrix<T>> weights);

  std::size_t num_layers() const { return weights.size(); }

  template <typename U>
  ModelParams<U> cast() const;
};

template <typename T>
struct Batch {
  Graph subgraph;
  SparseMatrix<T> norm_adj;
  Matrix<T> features;
  std::vector<std::int32_t> labels;
  std::vector<Role> roles;
  std::vector<NodeId> global_ids;
  std::vector<std::uint32_t> block_of;  // position of the node's ball in the batch
};

/// D^-1/2 (A + I) D^-1/2 with D the degree of A + I.
template <typename T>
SparseMatrix<T> normalize_adjacency(const Graph& g);

/// Random permutation of ball ids chunked into groups of `balls_per_batch`.
std::vector<std::vector<std::uint32_t>> make_epoch_schedule(std::size_t num_balls, std::size_t balls_per_batch,
                                                            Rng& rng);

/// Union of the selected balls, relabeled ball by ball. Crossing edges
/// between selected balls are kept unless `strict_block_diagonal`.
template <typename T>
Batch<T> build_batch(const Graph& g, const Matrix<T>& features, const LabelVector& labels, const RoleMask& mask,
                     const BallPartition& p, std::span<const std::uint32_t> ball_ids, bool strict_block_diagonal);

template <typename T>
struct ForwardPass {
  Matrix<T> logits;
  // Per layer: the (dropped-out) input, its dropout scale mask (empty when
  // no dropout was applied) and the post-ReLU output of hidden layers.
  std::vector<Matrix<T>> inputs;
  std::vector<Matrix<T>> dropout_masks;
  std::vector<Matrix<T>> activations;
  const Matrix<T>* raw_input = nullptr;  // used when layer 0 had no dropout

  const Matrix<T>& input(std::size_t layer) const {
    return layer == 0 && inputs[0].data.empty() ? *raw_input : inputs[layer];
  }
};

/// Z = A X W per layer, ReLU between layers, raw logits out. Inverted
/// dropout at rate `dropout` is applied to every layer input when training.
template <typename T>
ForwardPass<T> forward(const ModelParams<T>& params, const SparseMatrix<T>& adj, const Matrix<T>& features,
                       bool training, double dropout, Rng& rng);

template <typename T>
struct LossAndGrads {
  double loss = 0.0;
  std::vector<Matrix<T>> grads;
};

/// Softmax cross-entropy over the batch's TRAIN nodes and weight gradients.
/// Returns nullopt (skip) when the batch holds no TRAIN node.
template <typename T>
std::optional<LossAndGrads<T>> loss_and_grads(const ModelParams<T>& params, const Batch<T>& batch, double dropout,
                                              LossMode mode, Rng& rng);

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// One bias-corrected Adam update. Throws std::runtime_error on a
/// non-finite gradient entry.
template <typename T>
void adam_step(ModelParams<T>& params, const std::vector<Matrix<T>>& grads, const AdamOptions& opt);

/// Micro-F1 from pooled counts: 2PR / (P + R), 0 when P + R = 0.
double micro_f1(std::uint64_t true_positives, std::uint64_t false_positives, std::uint64_t false_negatives);

/// Micro-F1 of argmax predictions over nodes with role `role`. Throws
/// std::invalid_argument when no node has that role.
template <typename T>
double evaluate_logits(const Matrix<T>& logits, const LabelVector& labels, const RoleMask& mask, Role role);

/// Full-graph inference (no dropout) and Micro-F1 over `role`.
template <typename T>
double evaluate(const ModelParams<T>& params, const SparseMatrix<T>& full_adj, const Matrix<T>& features,
                const LabelVector& labels, const RoleMask& mask, Role role);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_f1 = 0.0;
  double ms = 0.0;
};

struct TrainResult {
  ModelParams<double> params;  // best-validation weights
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_f1 = 0.0;
  double train_ms = 0.0;
};

/// Minibatch training over balls with early stopping on validation Micro-F1.
TrainResult train(const Graph& g, const FeatureMatrix& features, const LabelVector& labels, const RoleMask& mask,
                  const BallPartition& p, const TrainConfig& cfg);

/// Full-graph test/val Micro-F1 for trained weights.
double evaluate_model(const ModelParams<double>& params, const Graph& g, const FeatureMatrix& features,
                      const LabelVector& labels, const RoleMask& mask, Role role, bool single_precision = false);

Matrix<double> to_matrix(const FeatureMatrix& fm);

/// `GBWT` checkpoint: u32 L, then per layer u32 rows, u32 cols and
/// little-endian float64 values.
void write_checkpoint(const ModelParams<double>& params, const std::filesystem::path& path);
ModelParams<double> read_checkpoint(const std::filesystem::path& path);

/// One JSON object per line: {"epoch","train_loss","val_f1","ms"}.
void write_history(const std::vector<EpochRecord>& history, std::ostream& out);

}  // namespace gbc
