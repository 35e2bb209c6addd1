#include "gbc/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string_view>

#include "gbc/rng.hpp"

namespace gbc {

namespace {

constexpr std::array<char, 4> kFeatureMagic{'G', 'B', 'F', 'M'};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Splits on spaces/tabs.
std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
         std::uint32_t{p[3]} << 24;
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

}  // namespace

LabelVector LabelVector::from_labels(std::vector<std::int32_t> labels) {
  LabelVector lv;
  std::int32_t max_label = -1;
  for (std::int32_t y : labels) {
    if (y < 0) throw DataError("negative label " + std::to_string(y));
    max_label = std::max(max_label, y);
  }
  lv.num_classes = max_label + 1;
  std::vector<char> seen(static_cast<std::size_t>(lv.num_classes), 0);
  for (std::int32_t y : labels) seen[static_cast<std::size_t>(y)] = 1;
  for (std::int32_t c = 0; c < lv.num_classes; ++c) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw DataError("missing class " + std::to_string(c) + " (labels must cover 0..C-1)");
    }
  }
  lv.labels = std::move(labels);
  return lv;
}

std::size_t RoleMask::count(Role r) const {
  return static_cast<std::size_t>(std::count(roles.begin(), roles.end(), r));
}

Graph parse_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::size_t declared_nodes = 0;
  std::size_t max_id_plus_one = 0;
  std::string line;
  std::size_t line_no = 0;
  constexpr std::uint64_t kMaxId = std::numeric_limits<NodeId>::max() - 1;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto tok = tokens(s);
    if (s.front() == '%') {
      if (tok.size() != 2 || tok[0] != "%N") throw DataError("malformed header", line_no);
      std::uint64_t count = 0;
      if (!parse_number(tok[1], count) || count > kMaxId + 1) {
        throw DataError("malformed node count in header", line_no);
      }
      declared_nodes = static_cast<std::size_t>(count);
      continue;
    }
    if (tok.size() != 2) throw DataError("expected two node ids", line_no);
    std::uint64_t u = 0;
    std::uint64_t v = 0;
    if (!parse_number(tok[0], u) || !parse_number(tok[1], v)) {
      throw DataError("node ids must be nonnegative integers", line_no);
    }
    if (u > kMaxId || v > kMaxId) throw DataError("node id overflow", line_no);
    edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    max_id_plus_one = std::max<std::size_t>(max_id_plus_one, std::max(u, v) + 1);
  }
  if (declared_nodes != 0 && max_id_plus_one > declared_nodes) {
    throw DataError("node id " + std::to_string(max_id_plus_one - 1) + " exceeds declared %N " +
                    std::to_string(declared_nodes));
  }
  const std::size_t n = std::max(declared_nodes, max_id_plus_one);
  if (n == 0) throw DataError("empty graph");
  return Graph::from_edges(n, edges);
}

Graph load_edge_list(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_edge_list(in);
}

void write_edge_list(const Graph& g, std::ostream& out) {
  out << "%N " << g.num_nodes() << '\n';
  for (const Edge& e : g.edge_list()) out << e.u << ' ' << e.v << '\n';
}

void write_edge_list(const Graph& g, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_edge_list(g, out);
}

FeatureMatrix parse_features_csv(std::istream& in, std::size_t expected_rows) {
  FeatureMatrix fm;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view s = trim(line);
    if (s.empty()) continue;
    std::size_t cols = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = s.find(',', start);
      const std::string_view cell = trim(s.substr(start, comma == std::string_view::npos ? s.size() - start : comma - start));
      double value = 0.0;
      if (!parse_number(cell, value)) throw DataError("malformed feature value", line_no);
      if (!std::isfinite(value)) throw DataError("non-finite feature value", line_no);
      fm.values.push_back(value);
      ++cols;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fm.num_rows == 0) {
      fm.num_cols = cols;
    } else if (cols != fm.num_cols) {
      throw DataError("ragged feature row: " + std::to_string(cols) + " columns, expected " +
                          std::to_string(fm.num_cols),
                      line_no);
    }
    ++fm.num_rows;
  }
  if (expected_rows == 0 || fm.num_rows == 0) throw DataError("empty feature matrix (empty graph)");
  if (fm.num_rows != expected_rows) {
    throw DataError("feature row count " + std::to_string(fm.num_rows) + " != expected " +
                    std::to_string(expected_rows));
  }
  return fm;
}

FeatureMatrix load_features(const std::filesystem::path& path, std::size_t expected_rows) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (in.gcount() == 4 && magic == kFeatureMagic) {
    unsigned char header[8];
    in.read(reinterpret_cast<char*>(header), 8);
    if (in.gcount() != 8) throw DataError("truncated GBFM header in " + path.string());
    FeatureMatrix fm;
    fm.num_rows = read_u32_le(header);
    fm.num_cols = read_u32_le(header + 4);
    if (expected_rows == 0 || fm.num_rows == 0) throw DataError("empty feature matrix (empty graph)");
    if (fm.num_rows != expected_rows) {
      throw DataError("feature row count " + std::to_string(fm.num_rows) + " != expected " +
                      std::to_string(expected_rows));
    }
    const std::size_t count = fm.num_rows * fm.num_cols;
    std::vector<unsigned char> bytes(count * 4);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
      throw DataError("truncated GBFM payload in " + path.string());
    }
    fm.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint32_t bits = read_u32_le(bytes.data() + 4 * i);
      float f;
      std::memcpy(&f, &bits, sizeof f);
      if (!std::isfinite(f)) throw DataError("non-finite feature value at index " + std::to_string(i));
      fm.values[i] = f;
    }
    return fm;
  }
  in.clear();
  in.seekg(0);
  return parse_features_csv(in, expected_rows);
}

void write_features_csv(const FeatureMatrix& fm, const std::filesystem::path& path) {
  auto out = open_output(path);
  char buf[64];
  for (std::size_t r = 0; r < fm.num_rows; ++r) {
    for (std::size_t c = 0; c < fm.num_cols; ++c) {
      if (c) out.put(',');
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, fm.values[r * fm.num_cols + c]);
      out.write(buf, ptr - buf);
    }
    out.put('\n');
  }
}

void write_features_binary(const FeatureMatrix& fm, const std::filesystem::path& path) {
  auto out = open_output(path, std::ios::out | std::ios::binary);
  out.write(kFeatureMagic.data(), 4);
  put_u32_le(out, static_cast<std::uint32_t>(fm.num_rows));
  put_u32_le(out, static_cast<std::uint32_t>(fm.num_cols));
  for (double v : fm.values) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    put_u32_le(out, bits);
  }
}

namespace {

std::vector<std::int64_t> parse_int_lines(std::istream& in, std::size_t expected_rows, const char* what) {
  std::vector<std::int64_t> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view s = trim(line);
    if (s.empty()) continue;
    std::int64_t v = 0;
    if (!parse_number(s, v)) throw DataError(std::string("malformed ") + what, line_no);
    values.push_back(v);
  }
  if (values.size() != expected_rows) {
    throw DataError(std::string(what) + " count " + std::to_string(values.size()) + " != expected " +
                    std::to_string(expected_rows));
  }
  return values;
}

}  // namespace

LabelVector parse_labels(std::istream& in, std::size_t expected_rows) {
  const auto raw = parse_int_lines(in, expected_rows, "label");
  std::vector<std::int32_t> labels;
  labels.reserve(raw.size());
  for (std::int64_t y : raw) {
    if (y < 0) throw DataError("negative label " + std::to_string(y));
    if (y > std::numeric_limits<std::int32_t>::max()) throw DataError("label overflow");
    labels.push_back(static_cast<std::int32_t>(y));
  }
  return LabelVector::from_labels(std::move(labels));
}

LabelVector load_labels(const std::filesystem::path& path, std::size_t expected_rows) {
  auto in = open_input(path);
  return parse_labels(in, expected_rows);
}

void write_labels(const LabelVector& labels, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (std::int32_t y : labels.labels) out << y << '\n';
}

RoleMask parse_roles(std::istream& in, std::size_t expected_rows) {
  const auto raw = parse_int_lines(in, expected_rows, "role");
  RoleMask mask;
  mask.roles.reserve(raw.size());
  for (std::int64_t r : raw) {
    if (r < 0 || r > 2) throw DataError("role must be 0, 1 or 2, got " + std::to_string(r));
    mask.roles.push_back(static_cast<Role>(r));
  }
  if (mask.count(Role::kTrain) == 0) throw DataError("role mask has no TRAIN node");
  return mask;
}

RoleMask load_roles(const std::filesystem::path& path, std::size_t expected_rows) {
  auto in = open_input(path);
  return parse_roles(in, expected_rows);
}

void write_roles(const RoleMask& mask, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (Role r : mask.roles) out << static_cast<int>(r) << '\n';
}

RoleMask random_split(std::size_t num_nodes, double train_fraction, double val_fraction,
                      std::uint64_t seed) {
  if (num_nodes == 0) throw std::invalid_argument("random_split: empty node set");
  if (train_fraction <= 0.0 || val_fraction < 0.0 || train_fraction + val_fraction > 1.0) {
    throw std::invalid_argument("random_split: fractions must satisfy 0 < train, train + val <= 1");
  }
  std::vector<NodeId> order(num_nodes);
  std::iota(order.begin(), order.end(), NodeId{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(train_fraction * static_cast<double>(num_nodes)));
  const auto n_val = std::min(num_nodes - n_train,
                              static_cast<std::size_t>(val_fraction * static_cast<double>(num_nodes)));
  RoleMask mask;
  mask.roles.assign(num_nodes, Role::kTest);
  for (std::size_t i = 0; i < n_train; ++i) mask.roles[order[i]] = Role::kTrain;
  for (std::size_t i = n_train; i < n_train + n_val; ++i) mask.roles[order[i]] = Role::kVal;
  return mask;
}

}  // namespace gbc
