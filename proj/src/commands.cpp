#include "gbc/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "gbc/dataset.hpp"
#include "gbc/gcn.hpp"
#include "gbc/granular_ball.hpp"
#include "gbc/partitioner.hpp"
#include "gbc/supergraph.hpp"
#include "gbc/synthetic.hpp"
#include "gbc/timer.hpp"

#ifndef GBC_BUILD_ID
#define GBC_BUILD_ID "dev"
#endif

namespace gbc {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------------------
// Flags

struct Common {
  std::string edges;
  std::string features;
  std::string labels;
  std::string roles;
  std::string synthetic;
  std::string out_dir = ".";
  std::string config;
  std::uint64_t seed = 0;
  std::size_t threads = default_threads();
  bool no_timings = false;

  double ms(double v) const { return no_timings ? 0.0 : v; }
};

struct CoarsenFlags {
  std::string mode = "adaptive-ad";
  std::size_t initial_k = 0;
  double purity_threshold = 1.0;
  double epsilon = 0.1;
  bool skip_init = false;
  bool skip_split = false;
  bool global_degree_centers = false;
  bool purity_all_labels = false;
};

struct TrainFlags {
  std::size_t layers = 2;
  std::size_t hidden = 64;
  double dropout = 0.5;
  std::size_t balls_per_batch = 1;
  double lr = 0.01;
  double weight_decay = 0.0;
  std::size_t max_epochs = 400;
  std::size_t patience = 50;
  bool strict_block_diagonal = false;
  std::string loss = "batch-mean";
  bool float32 = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--edges", c.edges, "Edge list file");
  app->add_option("--features", c.features, "Feature file (CSV or GBFM)");
  app->add_option("--labels", c.labels, "Label file");
  app->add_option("--roles", c.roles, "Role file (0 train, 1 val, 2 test); default 60/20/20 random split");
  app->add_option("--synthetic", c.synthetic, "Built-in dataset instead of files: cora-like | two-block");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--out-dir", c.out_dir, "Output directory");
  app->add_option("--config", c.config, "JSON object of flag values; command-line flags override it");
  app->add_flag("--no-timings", c.no_timings, "Write 0 for every timing field");
}

void add_coarsen_flags(CLI::App* app, CoarsenFlags& f) {
  app->add_option("--mode", f.mode, "Ball quality mode: adaptive-ad | purity | purity-ad");
  app->add_option("--initial-k", f.initial_k, "Initial partition size (default floor(sqrt(N)))");
  app->add_option("--purity-threshold", f.purity_threshold, "Purity threshold T for purity modes");
  app->add_option("--epsilon", f.epsilon, "Partition balance tolerance");
  app->add_flag("--skip-init", f.skip_init, "Skip the initial partition (w/o I)");
  app->add_flag("--skip-split", f.skip_split, "Skip binary splitting (w/o B)");
  app->add_flag("--global-degree-centers", f.global_degree_centers, "Pick split centers by global degree");
  app->add_flag("--purity-all-labels", f.purity_all_labels, "Count every node's label in purity");
}

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--layers", f.layers, "GCN layers")->check(CLI::PositiveNumber);
  app->add_option("--hidden", f.hidden, "Hidden width");
  app->add_option("--dropout", f.dropout, "Dropout rate")->check(CLI::Range(0.0, 0.999999));
  app->add_option("--balls-per-batch", f.balls_per_batch, "Balls per minibatch")->check(CLI::PositiveNumber);
  app->add_option("--lr", f.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  app->add_option("--weight-decay", f.weight_decay, "L2 weight decay");
  app->add_option("--max-epochs", f.max_epochs, "Epoch limit");
  app->add_option("--patience", f.patience, "Early-stopping patience in epochs");
  app->add_flag("--strict-block-diagonal", f.strict_block_diagonal, "Drop edges between balls of one batch");
  app->add_option("--loss", f.loss, "batch-mean | block-mean");
  app->add_flag("--float32", f.float32, "Train in single precision");
}

json echo(const Common& c) {
  json j;
  j["edges"] = c.edges;
  j["features"] = c.features;
  j["labels"] = c.labels;
  j["roles"] = c.roles;
  j["synthetic"] = c.synthetic;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

json echo(const CoarsenFlags& f) {
  json j;
  j["mode"] = f.mode;
  j["initial_k"] = f.initial_k;
  j["purity_threshold"] = f.purity_threshold;
  j["epsilon"] = f.epsilon;
  j["skip_init"] = f.skip_init;
  j["skip_split"] = f.skip_split;
  j["global_degree_centers"] = f.global_degree_centers;
  j["purity_all_labels"] = f.purity_all_labels;
  return j;
}

json echo(const TrainFlags& f) {
  json j;
  j["layers"] = f.layers;
  j["hidden"] = f.hidden;
  j["dropout"] = f.dropout;
  j["balls_per_batch"] = f.balls_per_batch;
  j["lr"] = f.lr;
  j["weight_decay"] = f.weight_decay;
  j["max_epochs"] = f.max_epochs;
  j["patience"] = f.patience;
  j["strict_block_diagonal"] = f.strict_block_diagonal;
  j["loss"] = f.loss;
  j["float32"] = f.float32;
  return j;
}

// ---------------------------------------------------------------------------
// Inputs and outputs

struct Inputs {
  Graph graph;
  std::optional<FeatureMatrix> features;
  std::optional<LabelVector> labels;
  std::optional<RoleMask> roles;
  bool generated_split = false;
};

Inputs load_inputs(const Common& c, bool need_features, bool need_labels) {
  Inputs in;
  if (!c.synthetic.empty()) {
    if (!c.edges.empty()) throw UsageError("--synthetic and --edges are mutually exclusive");
    SyntheticDataset ds;
    if (c.synthetic == "cora-like") {
      ds = cora_like(c.seed);
    } else if (c.synthetic == "two-block") {
      ds = two_block_fixture(c.seed);
    } else {
      throw UsageError("unknown synthetic dataset '" + c.synthetic + "'");
    }
    in.graph = std::move(ds.graph);
    in.features = std::move(ds.features);
    in.labels = std::move(ds.labels);
  } else {
    if (c.edges.empty()) throw UsageError("--edges (or --synthetic) is required");
    in.graph = load_edge_list(c.edges);
    const std::size_t n = in.graph.num_nodes();
    if (!c.features.empty()) in.features = load_features(c.features, n);
    if (!c.labels.empty()) in.labels = load_labels(c.labels, n);
  }
  const std::size_t n = in.graph.num_nodes();
  if (!c.roles.empty()) {
    in.roles = load_roles(c.roles, n);
  } else if (in.labels) {
    in.roles = random_split(n, 0.6, 0.2, mix_seed(c.seed, 11));
    in.generated_split = true;
  }
  if (need_features && !in.features) throw UsageError("--features is required for this command");
  if (need_labels && !in.labels) throw UsageError("--labels is required for this command");
  return in;
}

fs::path prepare_out_dir(const Common& c) {
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_assignment(const fs::path& path, std::span<const std::uint32_t> ids) {
  std::string s;
  s.reserve(ids.size() * 4);
  for (std::uint32_t id : ids) {
    s += std::to_string(id);
    s += '\n';
  }
  write_text(path, s);
}

std::vector<std::uint32_t> read_assignment(const fs::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint32_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long long v = -1;
    if (!(ls >> v) || v < 0 || v > UINT32_MAX) throw DataError("bad ball id in " + path.string(), line_no);
    ids.push_back(static_cast<std::uint32_t>(v));
  }
  if (ids.size() != n) {
    throw DataError("partition " + path.string() + " has " + std::to_string(ids.size()) + " rows, graph has " +
                    std::to_string(n) + " nodes");
  }
  return ids;
}

template <typename T>
T median(std::vector<T> v) {
  if (v.empty()) return T{};
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

// ---------------------------------------------------------------------------
// Pipeline pieces

CoarsenConfig coarsen_config(const CoarsenFlags& f, const Common& c) {
  CoarsenConfig cfg;
  cfg.mode = parse_quality_mode(f.mode);
  if (f.initial_k) cfg.initial_k = f.initial_k;
  cfg.purity_threshold = f.purity_threshold;
  cfg.epsilon = f.epsilon;
  cfg.skip_init = f.skip_init;
  cfg.skip_split = f.skip_split;
  cfg.global_degree_centers = f.global_degree_centers;
  cfg.purity_all_labels = f.purity_all_labels;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  return cfg;
}

TrainConfig train_config(const TrainFlags& f, const Common& c) {
  TrainConfig cfg;
  cfg.num_layers = f.layers;
  cfg.hidden_dim = f.hidden;
  cfg.dropout = f.dropout;
  cfg.balls_per_batch = f.balls_per_batch;
  cfg.learning_rate = f.lr;
  cfg.weight_decay = f.weight_decay;
  cfg.max_epochs = f.max_epochs;
  cfg.patience = f.patience;
  cfg.strict_block_diagonal = f.strict_block_diagonal;
  if (f.loss == "batch-mean") {
    cfg.loss = LossMode::kBatchMean;
  } else if (f.loss == "block-mean") {
    cfg.loss = LossMode::kBlockMean;
  } else {
    throw UsageError("unknown --loss '" + f.loss + "'");
  }
  cfg.single_precision = f.float32;
  cfg.seed = c.seed;
  return cfg;
}

struct TimedCoarsen {
  CoarsenResult result;
  double coarsen_ms = 0.0;
  double init_ms = 0.0;
  double split_ms = 0.0;
};

TimedCoarsen run_coarsen(const Inputs& in, const CoarsenConfig& cfg, std::size_t repeats) {
  const LabelVector* labels = in.labels ? &*in.labels : nullptr;
  const RoleMask* roles = in.roles ? &*in.roles : nullptr;
  std::vector<double> total;
  std::vector<double> init;
  std::vector<double> split;
  TimedCoarsen out;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, repeats); ++r) {
    CoarsenResult res = coarsen(in.graph, cfg, labels, roles);
    total.push_back(res.coarsen_ms);
    init.push_back(res.init_ms);
    split.push_back(res.split_ms);
    if (r == 0) out.result = std::move(res);
  }
  out.coarsen_ms = median(total);
  out.init_ms = median(init);
  out.split_ms = median(split);
  return out;
}

json quality_stats(const BallPartition& p) {
  double lo = INFINITY;
  double hi = -INFINITY;
  double sum = 0.0;
  for (const Ball& b : p.balls) {
    lo = std::min(lo, b.quality);
    hi = std::max(hi, b.quality);
    sum += b.quality;
  }
  json j;
  j["min"] = lo;
  j["mean"] = sum / static_cast<double>(p.num_balls());
  j["max"] = hi;
  return j;
}

std::uint64_t crossing_edges(const Graph& g, const BallPartition& p) {
  std::uint64_t internal = 0;
  for (const Ball& b : p.balls) internal += b.internal_edges;
  return g.num_edges() - internal;
}

json coarsen_summary(const Graph& g, const CoarsenConfig& cfg, const TimedCoarsen& tc, const Common& c) {
  const BallPartition& p = tc.result.partition;
  std::map<std::size_t, std::size_t> hist;
  for (const Ball& b : p.balls) ++hist[b.size()];
  json sizes = json::array();
  for (const auto& [size, count] : hist) sizes.push_back({{"size", size}, {"count", count}});
  json j;
  j["t"] = p.num_balls();
  j["mode"] = to_string(cfg.mode);
  j["initial_k"] = tc.result.initial_k;
  j["num_nodes"] = g.num_nodes();
  j["num_edges"] = g.num_edges();
  j["sizes_histogram"] = std::move(sizes);
  j["quality"] = quality_stats(p);
  j["cut_edges"] = crossing_edges(g, p);
  j["initial_cut_edges"] = tc.result.initial_cut_edges;
  j["coarsen_wall_time_ms"] = c.ms(tc.coarsen_ms);
  j["init_ms"] = c.ms(tc.init_ms);
  j["split_ms"] = c.ms(tc.split_ms);
  j["split_trace_counts"] = {{"accepted", tc.result.splits.accepted}, {"rejected", tc.result.splits.rejected}};
  return j;
}

struct TrainOutcome {
  TrainResult result;
  double test_f1 = 0.0;
};

TrainOutcome run_training(const Inputs& in, const BallPartition& p, const TrainConfig& cfg) {
  TrainOutcome o;
  o.result = train(in.graph, *in.features, *in.labels, *in.roles, p, cfg);
  o.test_f1 = evaluate_model(o.result.params, in.graph, *in.features, *in.labels, *in.roles, Role::kTest,
                             cfg.single_precision);
  return o;
}

json training_summary(const TrainOutcome& o, const Common& c) {
  json j;
  j["epochs_run"] = o.result.history.size();
  j["best_epoch"] = o.result.best_epoch;
  j["best_val_micro_f1"] = o.result.best_val_f1;
  j["final_train_loss"] = o.result.history.empty() ? 0.0 : o.result.history.back().train_loss;
  j["train_wall_time_ms"] = c.ms(o.result.train_ms);
  return j;
}

json dataset_summary(const Inputs& in) {
  json j;
  j["num_nodes"] = in.graph.num_nodes();
  j["num_edges"] = in.graph.num_edges();
  j["num_features"] = in.features ? in.features->num_cols : 0;
  j["num_classes"] = in.labels ? in.labels->num_classes : 0;
  if (in.roles) {
    j["train"] = in.roles->count(Role::kTrain);
    j["val"] = in.roles->count(Role::kVal);
    j["test"] = in.roles->count(Role::kTest);
  }
  return j;
}

json environment(const Common& c) {
  return {{"seed", c.seed}, {"threads", c.threads}, {"build_id", GBC_BUILD_ID}};
}

void maybe_write_split(const Inputs& in, const fs::path& dir, json& artifacts) {
  if (in.generated_split) {
    write_roles(*in.roles, dir / "roles.txt");
    artifacts["roles"] = "roles.txt";
  }
}

// ---------------------------------------------------------------------------
// Commands

struct CoarsenCmd {
  CoarsenFlags flags;
  std::size_t rayleigh_trials = 10;
  bool trace = false;
};

json cmd_coarsen(const Common& c, const CoarsenCmd& cmd) {
  CoarsenConfig cfg = coarsen_config(cmd.flags, c);
  cfg.record_trace = cmd.trace;
  const Inputs in = load_inputs(c, false, cfg.mode != QualityMode::kAdaptiveAd);
  const fs::path dir = prepare_out_dir(c);
  const TimedCoarsen tc = run_coarsen(in, cfg, 1);
  const BallPartition& p = tc.result.partition;

  write_assignment(dir / "partition.txt", p.ball_of);
  json summary = coarsen_summary(in.graph, cfg, tc, c);
  write_json(dir / "coarsen_summary.json", summary);

  if (!cfg.skip_init) {
    write_assignment(dir / "initial_partition.txt", tc.result.initial_part_of);
    std::vector<std::size_t> part_sizes(tc.result.initial_k, 0);
    for (std::uint32_t b : tc.result.initial_part_of) ++part_sizes[b];
    json side;
    side["k"] = tc.result.initial_k;
    side["cut_edges"] = tc.result.initial_cut_edges;
    side["part_sizes"] = part_sizes;
    side["epsilon"] = cfg.epsilon;
    side["seed"] = cfg.seed;
    side["wall_time_ms"] = c.ms(tc.result.init_ms);
    write_json(dir / "initial_partition.json", side);
  }

  const CoarsenedGraph cg = build_supergraph(in.graph, p, false);
  {
    std::string s = "%N " + std::to_string(cg.num_supernodes) + "\n";
    for (std::uint32_t i = 0; i < cg.num_supernodes; ++i) {
      for (EdgeIndex e = cg.super_offsets[i]; e < cg.super_offsets[i + 1]; ++e) {
        if (cg.super_neighbors[e] > i) {
          s += std::to_string(i) + ' ' + std::to_string(cg.super_neighbors[e]) + ' ' +
               std::to_string(cg.cross_edge_count[e]) + '\n';
        }
      }
    }
    write_text(dir / "supergraph.txt", s);
  }

  json rayleigh;
  if (cmd.rayleigh_trials > 0) {
    Rng rng(mix_seed(c.seed, 7));
    const RayleighReport rr = rayleigh_report(in.graph, p, cg, cmd.rayleigh_trials, rng);
    rayleigh["trials"] = cmd.rayleigh_trials;
    rayleigh["numerator_ratio_max_dev"] = rr.numerator_ratio_max_dev;
    rayleigh["denominator_ratio_min"] = rr.denominator_ratio_min;
    rayleigh["denominator_ratio_max"] = rr.denominator_ratio_max;
    rayleigh["denominator_ratio_mean"] = rr.denominator_ratio_mean;
    json per = json::array();
    for (const RayleighTrial& t : rr.trials) {
      per.push_back({{"coarse_numerator", t.coarse_numerator},
                     {"original_numerator", t.original_numerator},
                     {"coarse_rayleigh", t.coarse_rayleigh},
                     {"original_rayleigh", t.original_rayleigh}});
    }
    rayleigh["per_trial"] = std::move(per);
    write_json(dir / "rayleigh.json", rayleigh);
  }

  if (cmd.trace) {
    std::string s;
    for (const SplitRecord& r : tc.result.splits.trace) {
      json j = {{"parent_size", r.parent_size}, {"size_a", r.size_a},       {"size_b", r.size_b},
                {"quality_parent", r.quality_parent}, {"quality_a", r.quality_a}, {"quality_b", r.quality_b},
                {"purity_parent", r.purity_parent},   {"accepted", r.accepted}};
      s += j.dump() + "\n";
    }
    write_text(dir / "split_trace.jsonl", s);
  }
  json report;
  report["command"] = "coarsen";
  report["config"] = {{"common", echo(c)}, {"coarsen", echo(cmd.flags)}, {"rayleigh_trials", cmd.rayleigh_trials}};
  report["summary"] = summary;
  if (!rayleigh.empty()) {
    rayleigh.erase("per_trial");
    report["rayleigh"] = rayleigh;
  }
  report["environment"] = environment(c);
  return report;
}

struct TrainCmd {
  CoarsenFlags coarsen;
  TrainFlags train;
  std::string partition;
};

json cmd_train(const Common& c, const TrainCmd& cmd) {
  const CoarsenConfig ccfg = coarsen_config(cmd.coarsen, c);
  const TrainConfig tcfg = train_config(cmd.train, c);
  const Inputs in = load_inputs(c, true, true);
  const fs::path dir = prepare_out_dir(c);
  json artifacts;
  maybe_write_split(in, dir, artifacts);

  json coarsening;
  BallPartition p;
  if (!cmd.partition.empty()) {
    p = BallPartition::from_assignment(in.graph, read_assignment(cmd.partition, in.graph.num_nodes()));
    coarsening["source"] = cmd.partition;
    coarsening["t"] = p.num_balls();
    coarsening["quality"] = quality_stats(p);
    coarsening["cut_edges"] = crossing_edges(in.graph, p);
  } else {
    TimedCoarsen tc = run_coarsen(in, ccfg, 1);
    coarsening = coarsen_summary(in.graph, ccfg, tc, c);
    coarsening["source"] = "computed";
    p = std::move(tc.result.partition);
  }
  write_assignment(dir / "partition.txt", p.ball_of);
  artifacts["partition"] = "partition.txt";

  const TrainOutcome o = run_training(in, p, tcfg);
  write_checkpoint(o.result.params, dir / "model.gbwt");
  artifacts["checkpoint"] = "model.gbwt";
  {
    std::vector<EpochRecord> hist = o.result.history;
    if (c.no_timings)
      for (auto& r : hist) r.ms = 0.0;
    std::ostringstream s;
    write_history(hist, s);
    write_text(dir / "history.jsonl", s.str());
    artifacts["history"] = "history.jsonl";
  }

  json report;
  report["command"] = "train";
  report["config"] = {{"common", echo(c)}, {"coarsen", echo(cmd.coarsen)}, {"train", echo(cmd.train)},
                      {"partition", cmd.partition}};
  report["dataset"] = dataset_summary(in);
  report["coarsening"] = std::move(coarsening);
  report["training"] = training_summary(o, c);
  report["test_micro_f1"] = o.test_f1;
  report["artifacts"] = artifacts;
  report["environment"] = environment(c);
  write_json(dir / "report.json", report);
  return report;
}

struct ExperimentCmd {
  CoarsenFlags coarsen;
  TrainFlags train;
  std::size_t repeats = 3;
  bool no_train = false;
};

json variant_entry(const std::string& name, const Inputs& in, const CoarsenConfig& cfg, const ExperimentCmd& cmd,
                   const Common& c) {
  const TimedCoarsen tc = run_coarsen(in, cfg, cmd.repeats);
  json j;
  j["name"] = name;
  j["t"] = tc.result.partition.num_balls();
  j["initial_k"] = tc.result.initial_k;
  j["coarsen_ms"] = c.ms(tc.coarsen_ms);
  j["init_ms"] = c.ms(tc.init_ms);
  j["split_ms"] = c.ms(tc.split_ms);
  j["cut_edges"] = crossing_edges(in.graph, tc.result.partition);
  j["quality"] = quality_stats(tc.result.partition);
  if (cmd.no_train) {
    j["test_micro_f1"] = nullptr;
  } else {
    TrainConfig tcfg = train_config(cmd.train, c);
    tcfg.balls_per_batch = std::min(tcfg.balls_per_batch, tc.result.partition.num_balls());
    const TrainOutcome o = run_training(in, tc.result.partition, tcfg);
    j["test_micro_f1"] = o.test_f1;
    j["best_val_micro_f1"] = o.result.best_val_f1;
    j["epochs_run"] = o.result.history.size();
  }
  return j;
}

json cmd_ablate(const Common& c, const ExperimentCmd& cmd) {
  const CoarsenConfig base = coarsen_config(cmd.coarsen, c);
  const Inputs in = load_inputs(c, !cmd.no_train, !cmd.no_train || base.mode != QualityMode::kAdaptiveAd);
  const fs::path dir = prepare_out_dir(c);
  CoarsenConfig full = base;
  full.skip_init = full.skip_split = false;
  CoarsenConfig wob = full;
  wob.skip_split = true;
  CoarsenConfig woi = full;
  woi.skip_init = true;

  json variants = json::array();
  variants.push_back(variant_entry("full", in, full, cmd, c));
  variants.push_back(variant_entry("w/o B", in, wob, cmd, c));
  variants.push_back(variant_entry("w/o I", in, woi, cmd, c));

  const auto t_full = variants[0]["t"].get<std::size_t>();
  const auto t_wob = variants[1]["t"].get<std::size_t>();
  const auto t_woi = variants[2]["t"].get<std::size_t>();
  json checks;
  checks["wob_t_equals_initial_k"] = t_wob == variants[1]["initial_k"].get<std::size_t>();
  checks["woi_t_below_half_full"] = 2 * t_woi < t_full;
  checks["full_t_at_least_wob"] = t_full >= t_wob;
  if (c.no_timings) {
    checks["full_time_within_3x_wob"] = nullptr;
  } else {
    checks["full_time_within_3x_wob"] =
        variants[0]["coarsen_ms"].get<double>() <= 3.0 * variants[1]["coarsen_ms"].get<double>();
  }

  json report;
  report["command"] = "ablate";
  report["config"] = {{"common", echo(c)}, {"coarsen", echo(cmd.coarsen)}, {"train", echo(cmd.train)},
                      {"repeats", cmd.repeats}, {"no_train", cmd.no_train}};
  report["dataset"] = dataset_summary(in);
  report["variants"] = std::move(variants);
  report["checks"] = std::move(checks);
  report["environment"] = environment(c);
  json artifacts;
  maybe_write_split(in, dir, artifacts);
  write_json(dir / "ablate.json", report);
  return report;
}

json cmd_sweep_k(const Common& c, const ExperimentCmd& cmd, const std::string& multipliers) {
  const CoarsenConfig base = coarsen_config(cmd.coarsen, c);
  const Inputs in = load_inputs(c, !cmd.no_train, !cmd.no_train || base.mode != QualityMode::kAdaptiveAd);
  const fs::path dir = prepare_out_dir(c);
  const std::size_t n = in.graph.num_nodes();

  std::vector<double> mults;
  {
    std::stringstream ss(multipliers);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto slash = tok.find('/');
      double v = 0.0;
      try {
        v = slash == std::string::npos ? std::stod(tok) : std::stod(tok.substr(0, slash)) / std::stod(tok.substr(slash + 1));
      } catch (const std::exception&) {
        throw UsageError("bad multiplier '" + tok + "'");
      }
      if (!(v > 0.0)) throw UsageError("multipliers must be positive");
      mults.push_back(v);
    }
  }

  json runs = json::array();
  for (double m : mults) {
    CoarsenConfig cfg = base;
    cfg.skip_init = cfg.skip_split = false;
    const std::size_t k = m == 1.0 ? default_initial_k(n)
                                   : std::clamp<std::size_t>(
                                         static_cast<std::size_t>(std::floor(m * std::sqrt(static_cast<double>(n)))), 1, n);
    cfg.initial_k = k;
    json entry = variant_entry("k", in, cfg, cmd, c);
    entry.erase("name");
    json row;
    row["multiplier"] = m;
    row["k"] = k;
    row.update(entry);
    runs.push_back(std::move(row));
  }
  bool nondecreasing = true;
  double prev = 0.0;
  for (const auto& r : runs) {
    const double t = r["coarsen_ms"].get<double>();
    if (t * 2.0 < prev) nondecreasing = false;  // 2x noise band
    prev = std::max(prev, t);
  }
  json report;
  report["command"] = "sweep-k";
  report["config"] = {{"common", echo(c)},        {"coarsen", echo(cmd.coarsen)}, {"train", echo(cmd.train)},
                      {"repeats", cmd.repeats},   {"no_train", cmd.no_train},     {"multipliers", multipliers}};
  report["dataset"] = dataset_summary(in);
  report["runs"] = std::move(runs);
  report["checks"] = {{"coarsen_time_nondecreasing_within_2x", c.no_timings ? json(nullptr) : json(nondecreasing)}};
  report["environment"] = environment(c);
  json artifacts;
  maybe_write_split(in, dir, artifacts);
  write_json(dir / "sweep_k.json", report);
  return report;
}

json cmd_quality_modes(const Common& c, const ExperimentCmd& cmd) {
  const Inputs in = load_inputs(c, !cmd.no_train, true);
  const fs::path dir = prepare_out_dir(c);
  json modes = json::array();
  for (const char* name : {"adaptive-ad", "purity", "purity-ad"}) {
    CoarsenFlags f = cmd.coarsen;
    f.mode = name;
    CoarsenConfig cfg = coarsen_config(f, c);
    cfg.skip_init = cfg.skip_split = false;
    json entry = variant_entry(name, in, cfg, cmd, c);
    entry["purity_threshold"] = cfg.purity_threshold;
    modes.push_back(std::move(entry));
  }
  json checks;
  if (c.no_timings) {
    checks["purity_slower_than_ad"] = nullptr;
    checks["purity_to_ad_time_ratio"] = nullptr;
  } else {
    const double ad = modes[0]["coarsen_ms"].get<double>();
    const double pur = modes[1]["coarsen_ms"].get<double>();
    checks["purity_slower_than_ad"] = pur >= ad;
    checks["purity_to_ad_time_ratio"] = ad > 0 ? pur / ad : 0.0;
  }
  json report;
  report["command"] = "quality-modes";
  report["config"] = {{"common", echo(c)}, {"coarsen", echo(cmd.coarsen)}, {"train", echo(cmd.train)},
                      {"repeats", cmd.repeats}, {"no_train", cmd.no_train}};
  report["dataset"] = dataset_summary(in);
  report["modes"] = std::move(modes);
  report["checks"] = std::move(checks);
  report["environment"] = environment(c);
  json artifacts;
  maybe_write_split(in, dir, artifacts);
  write_json(dir / "quality_modes.json", report);
  return report;
}

struct BenchCmd {
  CoarsenFlags coarsen;
  std::string sizes = "10000,30000,100000,300000,1000000";
  double avg_degree = 8.0;
  std::size_t repeats = 3;
};

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      const double v = std::stod(tok);
      if (!(v >= 2.0)) throw std::invalid_argument("small");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("bad size '" + tok + "'");
    }
  }
  if (out.empty()) throw UsageError("no sizes given");
  return out;
}

json cmd_bench_scaling(const Common& c, const BenchCmd& cmd) {
  const std::vector<std::size_t> sizes = parse_sizes(cmd.sizes);
  CoarsenConfig cfg = coarsen_config(cmd.coarsen, c);
  if (cfg.mode != QualityMode::kAdaptiveAd) throw UsageError("bench-scaling runs the adaptive-ad mode only");
  const fs::path dir = prepare_out_dir(c);
  json points = json::array();
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    Inputs in;
    in.graph = erdos_renyi_avg_degree(sizes[i], cmd.avg_degree, mix_seed(c.seed, 100 + i));
    const TimedCoarsen tc = run_coarsen(in, cfg, cmd.repeats);
    json p;
    p["n"] = sizes[i];
    p["edges"] = in.graph.num_edges();
    p["t"] = tc.result.partition.num_balls();
    p["initial_k"] = tc.result.initial_k;
    p["coarsen_ms"] = c.ms(tc.coarsen_ms);
    p["init_ms"] = c.ms(tc.init_ms);
    p["split_ms"] = c.ms(tc.split_ms);
    points.push_back(std::move(p));
    xs.push_back(std::log(static_cast<double>(sizes[i])));
    ys.push_back(std::log(std::max(tc.coarsen_ms, 1e-6)));
  }
  json report;
  report["command"] = "bench-scaling";
  report["config"] = {{"common", echo(c)},
                      {"coarsen", echo(cmd.coarsen)},
                      {"sizes", cmd.sizes},
                      {"avg_degree", cmd.avg_degree},
                      {"repeats", cmd.repeats}};
  report["points"] = points;
  if (c.no_timings || sizes.size() < 2) {
    report["slope"] = nullptr;
    report["monotone"] = nullptr;
  } else {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    report["slope"] = sxx > 0 ? sxy / sxx : 0.0;
    bool monotone = true;
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (sizes[i] > sizes[i - 1] && points[i]["coarsen_ms"].get<double>() <= points[i - 1]["coarsen_ms"].get<double>()) {
        monotone = false;
      }
    }
    report["monotone"] = monotone;
  }
  report["environment"] = environment(c);
  write_json(dir / "bench_scaling.json", report);
  return report;
}

struct GenCmd {
  std::string kind;
  std::size_t n = 100;
  double p = 0.1;
  double avg_degree = 0.0;
  std::string blocks = "50,50";
  double p_in = 0.25;
  double p_out = 0.01;
  double noise = 0.5;
  std::string features_format = "csv";
};

json cmd_gen(const Common& c, const GenCmd& cmd) {
  const fs::path dir = prepare_out_dir(c);
  Graph g;
  std::optional<FeatureMatrix> features;
  std::optional<LabelVector> labels;
  if (cmd.kind == "er") {
    g = cmd.avg_degree > 0 ? erdos_renyi_avg_degree(cmd.n, cmd.avg_degree, c.seed) : erdos_renyi(cmd.n, cmd.p, c.seed);
  } else if (cmd.kind == "cycle") {
    g = cycle_graph(cmd.n);
  } else if (cmd.kind == "path") {
    g = path_graph(cmd.n);
  } else if (cmd.kind == "star") {
    g = star_graph(cmd.n);
  } else if (cmd.kind == "sbm") {
    const std::vector<std::size_t> sizes = parse_sizes(cmd.blocks);
    PlantedGraph pg = stochastic_block_model(sizes, cmd.p_in, cmd.p_out, mix_seed(c.seed, 0));
    g = std::move(pg.graph);
    features = one_hot_noise_features(pg.blocks, sizes.size(), cmd.noise, mix_seed(c.seed, 1));
    labels = LabelVector::from_labels(std::move(pg.blocks));
  } else if (cmd.kind == "cora-like" || cmd.kind == "two-block") {
    SyntheticDataset ds = cmd.kind == "cora-like" ? cora_like(c.seed) : two_block_fixture(c.seed, cmd.noise);
    g = std::move(ds.graph);
    features = std::move(ds.features);
    labels = std::move(ds.labels);
  } else {
    throw UsageError("unknown --kind '" + cmd.kind + "' (er, sbm, cycle, path, star, cora-like, two-block)");
  }
  if (g.num_nodes() == 0) throw UsageError("generated graph is empty");

  json files;
  write_edge_list(g, dir / "edges.txt");
  files["edges"] = "edges.txt";
  if (labels) {
    write_labels(*labels, dir / "labels.txt");
    files["labels"] = "labels.txt";
    write_roles(random_split(g.num_nodes(), 0.6, 0.2, mix_seed(c.seed, 11)), dir / "roles.txt");
    files["roles"] = "roles.txt";
  }
  if (features) {
    if (cmd.features_format == "binary") {
      write_features_binary(*features, dir / "features.gbfm");
      files["features"] = "features.gbfm";
    } else if (cmd.features_format == "csv") {
      write_features_csv(*features, dir / "features.csv");
      files["features"] = "features.csv";
    } else {
      throw UsageError("unknown --features-format '" + cmd.features_format + "'");
    }
  }
  json report;
  report["command"] = "gen";
  report["kind"] = cmd.kind;
  report["seed"] = c.seed;
  report["num_nodes"] = g.num_nodes();
  report["num_edges"] = g.num_edges();
  report["num_classes"] = labels ? labels->num_classes : 0;
  report["num_features"] = features ? features->num_cols : 0;
  report["files"] = files;
  write_json(dir / "gen.json", report);
  return report;
}

// ---------------------------------------------------------------------------
// Argument handling

std::string flag_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) {
      if (e.is_array() || e.is_object()) throw UsageError("config arrays must hold scalars");
      if (!s.empty()) s += ',';
      s += flag_value(e);
    }
    return s;
  }
  throw UsageError("config values must be scalars or arrays of scalars");
}

// Splices `--config` entries in right after the subcommand so that
// explicit flags, which come later, win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (!path || args.empty()) return args;
  std::ifstream in(*path);
  if (!in) throw UsageError("cannot open config " + *path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + *path + " is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config " + *path + " must hold a JSON object");
  std::vector<std::string> out{args[0]};
  for (const auto& [key, value] : cfg.items()) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (flag == "config") throw UsageError("config files cannot nest --config");
    if (value.is_null()) continue;
    out.push_back("--" + flag + "=" + flag_value(value));
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

void error_json(std::ostream& err, const std::string& type, const std::string& message, const std::string& command) {
  json j;
  j["error"] = {{"type", type}, {"message", message}, {"command", command}};
  err << j.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Granular-ball graph coarsening and minibatch GCN training", "gbc"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  CoarsenCmd coarsen_cmd;
  TrainCmd train_cmd;
  ExperimentCmd ablate_cmd;
  ExperimentCmd sweep_cmd;
  ExperimentCmd modes_cmd;
  std::string multipliers = "1/4,1/3,1/2,1,2,3,4";
  BenchCmd bench_cmd;
  GenCmd gen_cmd;

  auto* sc = app.add_subcommand("coarsen", "Coarsen a graph into granular balls");
  add_common(sc, common);
  add_coarsen_flags(sc, coarsen_cmd.flags);
  sc->add_option("--rayleigh-trials", coarsen_cmd.rayleigh_trials, "Random vectors for the Rayleigh report");
  sc->add_flag("--trace", coarsen_cmd.trace, "Write every considered split to split_trace.jsonl");

  auto* st = app.add_subcommand("train", "Coarsen (or load a partition) and train the GCN");
  add_common(st, common);
  add_coarsen_flags(st, train_cmd.coarsen);
  add_train_flags(st, train_cmd.train);
  st->add_option("--partition", train_cmd.partition, "Existing partition file (one ball id per line)");

  auto add_experiment = [&](CLI::App* a, ExperimentCmd& e) {
    add_common(a, common);
    add_coarsen_flags(a, e.coarsen);
    add_train_flags(a, e.train);
    a->add_option("--repeats", e.repeats, "Coarsening runs per timing (median)")->check(CLI::PositiveNumber);
    a->add_flag("--no-train", e.no_train, "Report coarsening only");
  };
  add_experiment(app.add_subcommand("ablate", "Compare full, w/o B and w/o I pipelines"), ablate_cmd);
  auto* ssk = app.add_subcommand("sweep-k", "Sweep the initial partition size");
  add_experiment(ssk, sweep_cmd);
  ssk->add_option("--multipliers", multipliers, "Comma-separated multiples of sqrt(N)");
  add_experiment(app.add_subcommand("quality-modes", "Compare ball quality modes"), modes_cmd);

  auto* sb = app.add_subcommand("bench-scaling", "Time coarsening on growing random graphs");
  add_common(sb, common);
  add_coarsen_flags(sb, bench_cmd.coarsen);
  sb->add_option("--sizes", bench_cmd.sizes, "Comma-separated node counts");
  sb->add_option("--avg-degree", bench_cmd.avg_degree, "Expected average degree");
  sb->add_option("--repeats", bench_cmd.repeats, "Runs per size (median)")->check(CLI::PositiveNumber);

  auto* sg = app.add_subcommand("gen", "Generate a synthetic dataset");
  add_common(sg, common);
  sg->add_option("--kind", gen_cmd.kind, "er | sbm | cycle | path | star | cora-like | two-block")->required();
  sg->add_option("--n", gen_cmd.n, "Node count");
  sg->add_option("--p", gen_cmd.p, "Edge probability (er)");
  sg->add_option("--avg-degree", gen_cmd.avg_degree, "Expected average degree (er; overrides --p)");
  sg->add_option("--blocks", gen_cmd.blocks, "Comma-separated block sizes (sbm)");
  sg->add_option("--p-in", gen_cmd.p_in, "Within-block probability (sbm)");
  sg->add_option("--p-out", gen_cmd.p_out, "Across-block probability (sbm)");
  sg->add_option("--noise", gen_cmd.noise, "Feature noise std (sbm, two-block)");
  sg->add_option("--features-format", gen_cmd.features_format, "csv | binary");

  const std::string command = raw_args.empty() ? "" : raw_args[0];
  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      error_json(err, "usage", e.what(), command);
      return 2;
    }
    json report;
    if (sc->parsed()) {
      report = cmd_coarsen(common, coarsen_cmd);
    } else if (st->parsed()) {
      report = cmd_train(common, train_cmd);
    } else if (app.got_subcommand("ablate")) {
      report = cmd_ablate(common, ablate_cmd);
    } else if (ssk->parsed()) {
      report = cmd_sweep_k(common, sweep_cmd, multipliers);
    } else if (app.got_subcommand("quality-modes")) {
      report = cmd_quality_modes(common, modes_cmd);
    } else if (sb->parsed()) {
      report = cmd_bench_scaling(common, bench_cmd);
    } else if (sg->parsed()) {
      report = cmd_gen(common, gen_cmd);
    }
    out << report.dump(2) << '\n';
    return 0;
  } catch (const UsageError& e) {
    error_json(err, "usage", e.what(), command);
    return 2;
  } catch (const DataError& e) {
    error_json(err, "data", e.what(), command);
    return 1;
  } catch (const std::invalid_argument& e) {
    error_json(err, "invalid_argument", e.what(), command);
    return 1;
  } catch (const std::exception& e) {
    error_json(err, "runtime", e.what(), command);
    return 1;
  }
}

}  // namespace gbc
