#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gbc/graph.hpp"

namespace gbc {

/// Malformed or inconsistent input data. `line()` is 1-based, 0 when the
/// problem is not tied to a line.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Dense row-major node features.
struct FeatureMatrix {
  std::size_t num_rows = 0;
  std::size_t num_cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * num_cols, num_cols};
  }
};

struct LabelVector {
  std::vector<std::int32_t> labels;
  std::int32_t num_classes = 0;

  /// Validates every label is in [0, C) and every class occurs.
  static LabelVector from_labels(std::vector<std::int32_t> labels);
};

enum class Role : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

struct RoleMask {
  std::vector<Role> roles;

  std::size_t count(Role r) const;
};

/// Edge list text: `u v` per line, `#` comments, optional `%N <count>`.
Graph load_edge_list(const std::filesystem::path& path);
Graph parse_edge_list(std::istream& in);
/// Writes `%N`, then each undirected edge once as `u v` with u < v.
void write_edge_list(const Graph& g, std::ostream& out);
void write_edge_list(const Graph& g, const std::filesystem::path& path);

/// CSV of reals, or the binary `GBFM` layout (detected by magic).
FeatureMatrix load_features(const std::filesystem::path& path, std::size_t expected_rows);
FeatureMatrix parse_features_csv(std::istream& in, std::size_t expected_rows);
void write_features_csv(const FeatureMatrix& fm, const std::filesystem::path& path);
void write_features_binary(const FeatureMatrix& fm, const std::filesystem::path& path);

LabelVector load_labels(const std::filesystem::path& path, std::size_t expected_rows);
LabelVector parse_labels(std::istream& in, std::size_t expected_rows);
void write_labels(const LabelVector& labels, const std::filesystem::path& path);

RoleMask load_roles(const std::filesystem::path& path, std::size_t expected_rows);
RoleMask parse_roles(std::istream& in, std::size_t expected_rows);
void write_roles(const RoleMask& mask, const std::filesystem::path& path);

/// Random train/val/test split by fractions; test takes the remainder.
/// Shuffles node ids with a generator seeded by `seed`.
RoleMask random_split(std::size_t num_nodes, double train_fraction, double val_fraction,
                      std::uint64_t seed);

/// Graph, features, labels and roles loaded together and cross-checked.
struct Dataset {
  Graph graph;
  FeatureMatrix features;
  LabelVector labels;
  RoleMask roles;
};

}  // namespace gbc
