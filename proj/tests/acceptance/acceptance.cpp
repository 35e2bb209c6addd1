// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
//   acceptance                    criteria 1-11 (6 runs on real Cora only when GBC_CORA_DIR is set)
//   acceptance --cora             criterion 6 on real Cora; exits 77 when GBC_CORA_DIR is unset
//   acceptance --only 1,4         a subset
//   acceptance --expect-fail 10   still print FAIL for 10 but do not count it in the exit code

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gbc/commands.hpp"
#include "gbc/gcn.hpp"
#include "gbc/granular_ball.hpp"
#include "gbc/supergraph.hpp"
#include "gbc/synthetic.hpp"
#include "gbc/timer.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace gbc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::kPass : Status::kFail, std::move(detail)}; }

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

fs::path work_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gbc_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int cli(const std::vector<std::string>& args, std::string* err = nullptr) {
  std::ostringstream out;
  std::ostringstream e;
  const int code = run_cli(args, out, e);
  if (err) *err = e.str();
  return code;
}

// Dataset flags for real Cora in GBC_CORA_DIR, empty when unset.
std::vector<std::string> cora_flags() {
  const char* dir = std::getenv("GBC_CORA_DIR");
  if (!dir || !*dir) return {};
  const fs::path d(dir);
  std::vector<std::string> flags{"--edges", (d / "edges.txt").string(), "--labels", (d / "labels.txt").string()};
  const fs::path bin = d / "features.gbfm";
  flags.insert(flags.end(), {"--features", (fs::exists(bin) ? bin : d / "features.csv").string()});
  if (fs::exists(d / "roles.txt")) flags.insert(flags.end(), {"--roles", (d / "roles.txt").string()});
  return flags;
}

// Cora when available, otherwise the Cora-shaped surrogate.
std::vector<std::string> cora_scale_flags(std::string& name) {
  auto flags = cora_flags();
  if (!flags.empty()) {
    name = "Cora";
    return flags;
  }
  name = "cora-like surrogate";
  return {"--synthetic", "cora-like", "--seed", "0"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// ---------------------------------------------------------------------------

Graph random_case(int index, std::mt19937_64& gen) {
  const std::size_t n = 2 + gen() % 1999;
  switch (index % 5) {
    case 0:
      return oracle::random_er(std::min<std::size_t>(n, 600), (1.0 + static_cast<double>(gen() % 8)) / 300.0, gen);
    case 1: {
      const std::size_t blocks = 2 + gen() % 4;
      return oracle::random_sbm(blocks, 10 + gen() % 100, 0.1, 0.005, gen);
    }
    case 2:
      return oracle::path(n);
    case 3:
      return oracle::star(n);
    default: {
      std::vector<Graph> parts;
      const std::size_t k = 2 + gen() % 4;
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t m = 1 + gen() % 120;
        parts.push_back(i % 2 ? oracle::path(m) : oracle::random_er(m, 0.08, gen));
      }
      return oracle::disjoint_union(parts);
    }
  }
}

Outcome criterion1() {
  Stopwatch watch;
  std::mt19937_64 gen(1);
  std::size_t balls = 0;
  for (int i = 0; i < 200; ++i) {
    const Graph g = random_case(i, gen);
    CoarsenConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(i);
    cfg.record_trace = true;
    const CoarsenResult res = coarsen(g, cfg);
    const std::string problem = oracle::check_partition(g, res.partition);
    if (!problem.empty()) return verdict(false, "graph " + std::to_string(i) + ": " + problem);
    for (const SplitRecord& r : res.splits.trace) {
      const bool strict = (r.quality_a + r.quality_b) / 2.0 > r.quality_parent;
      if (r.accepted != strict) return verdict(false, "graph " + std::to_string(i) + ": trace record breaks strictness");
    }
    for (const Ball& b : res.partition.balls) {
      if (b.size() < 2) continue;
      const auto [ca, cb] = pick_split_centers(g, b);
      const auto [x, y] = dual_bfs_split(g, b, ca, cb);
      if (adaptive_should_split(b.quality, x.quality, y.quality)) {
        return verdict(false, "graph " + std::to_string(i) + ": final ball still splits");
      }
    }
    balls += res.partition.num_balls();
  }
  const double s = watch.elapsed_ms() / 1000.0;
  return verdict(s <= 60.0, "200 graphs, " + std::to_string(balls) + " balls, " + fmt(s, 3) + " s");
}

Outcome criterion2() {
  std::mt19937_64 gen(2);
  for (int i = 0; i < 200; ++i) {
    const Graph g = oracle::random_er(5 + gen() % 80, 0.02 + 0.1 * static_cast<double>(gen() % 10) / 10.0, gen);
    std::vector<NodeId> nodes;
    for (NodeId v = 0; v < g.num_nodes(); ++v)
      if (gen() % 3 != 0) nodes.push_back(v);
    if (nodes.size() < 2) nodes = {0, 1};
    const Ball ball = Ball::make(g, nodes);
    const NodeId a = nodes[gen() % nodes.size()];
    NodeId b = a;
    while (b == a) b = nodes[gen() % nodes.size()];
    const auto [x, y] = dual_bfs_split(g, ball, a, b);
    const auto [ox, oy] = oracle::split_by_distance(g, nodes, a, b);
    if (x.nodes != ox || y.nodes != oy) return verdict(false, "ball " + std::to_string(i) + " differs from BFS oracle");
  }
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + gen() % 99;
    const Graph g = oracle::random_er(n, 0.1, gen);
    const std::size_t t = 1 + gen() % n;
    std::vector<std::uint32_t> ids(n);
    for (std::size_t v = 0; v < n; ++v) ids[v] = static_cast<std::uint32_t>(v < t ? v : gen() % t);
    std::shuffle(ids.begin(), ids.end(), gen);
    const BallPartition p = BallPartition::from_assignment(g, ids);
    const CoarsenedGraph cg = build_supergraph(g, p);
    const auto brute = oracle::brute_supergraph(g, p.ball_of, t);
    if (cg.internal_edges != brute.internal || cg.num_superedges() != brute.cross.size()) {
      return verdict(false, "supergraph " + std::to_string(i) + " differs from pair enumeration");
    }
    for (const auto& [key, count] : brute.cross) {
      if (cg.cross_count(key.first, key.second) != count) return verdict(false, "cross count mismatch");
    }
  }
  return verdict(true, "200 balls and 100 supergraphs match exactly");
}

Outcome criterion3() {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Graph g = oracle::random_er(100, 0.1, gen);
    BallPartition p;
    if (i % 2 == 0) {
      CoarsenConfig cfg;
      cfg.seed = static_cast<std::uint64_t>(i);
      p = coarsen(g, cfg).partition;
    } else {
      const std::size_t t = 1 + gen() % 40;
      std::vector<std::uint32_t> ids(100);
      for (std::size_t v = 0; v < 100; ++v) ids[v] = static_cast<std::uint32_t>(v < t ? v : gen() % t);
      p = BallPartition::from_assignment(g, ids);
    }
    const CoarsenedGraph cg = build_supergraph(g, p, false);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> xbar(p.num_balls());
      for (double& v : xbar) v = normal(gen);
      const double fine = laplacian_quadratic(g, project_up(p, xbar));
      const double coarse = coarse_laplacian_quadratic(cg, xbar);
      worst = std::max(worst, std::abs(coarse - fine) / std::max(1.0, std::abs(fine)));
    }
  }
  return verdict(worst <= 1e-9, "max scaled deviation " + fmt(worst, 3));
}

Matrix<double> random_matrix(std::size_t r, std::size_t c, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix<double> m(r, c);
  for (double& v : m.data) v = normal(gen);
  return m;
}

BallPartition whole(const Graph& g) {
  return BallPartition::from_assignment(g, std::vector<std::uint32_t>(g.num_nodes(), 0));
}

Outcome criterion4() {
  Stopwatch watch;
  std::mt19937_64 gen(4);
  double worst = 0.0;
  for (int cfg = 0; cfg < 20; ++cfg) {
    const std::size_t layers = 1 + cfg % 3;
    const std::size_t n = 6 + gen() % 6;
    const std::size_t f = 2 + gen() % 6;
    const std::size_t h = 2 + gen() % 6;
    const std::size_t c = 2 + gen() % 5;
    const Graph g = oracle::random_er(n, 0.35, gen);
    const Matrix<double> x = random_matrix(n, f, gen);
    std::vector<std::int32_t> yv(n);
    for (std::size_t i = 0; i < n; ++i) yv[i] = static_cast<std::int32_t>(i % c);
    const LabelVector y = LabelVector::from_labels(yv);
    RoleMask m;
    m.roles.assign(n, Role::kTrain);
    std::vector<Matrix<double>> ws;
    for (std::size_t l = 0; l < layers; ++l) ws.push_back(random_matrix(l == 0 ? f : h, l + 1 == layers ? c : h, gen, 0.7));
    const std::vector<std::uint32_t> ids{0};
    const auto batch = build_batch(g, x, y, m, whole(g), ids, false);
    Rng rng(0);
    const auto analytic = loss_and_grads(ModelParams<double>::from_weights(ws), batch, 0.0, LossMode::kBatchMean, rng);
    auto loss_at = [&](const std::vector<Matrix<double>>& w) {
      return loss_and_grads(ModelParams<double>::from_weights(w), batch, 0.0, LossMode::kBatchMean, rng)->loss;
    };
    const double step = 1e-5;
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t i = 0; i < ws[l].data.size(); ++i) {
        auto plus = ws;
        auto minus = ws;
        plus[l].data[i] += step;
        minus[l].data[i] -= step;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * step);
        const double an = analytic->grads[l].data[i];
        const double scale = std::max({std::abs(fd), std::abs(an), 1e-4});
        worst = std::max(worst, std::abs(fd - an) / scale);
      }
    }
  }
  const double s = watch.elapsed_ms() / 1000.0;
  return verdict(worst <= 1e-4 && s <= 30.0, "max relative error " + fmt(worst, 3) + ", " + fmt(s, 3) + " s");
}

Outcome criterion5() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PlantedGraph pg = stochastic_block_model(std::vector<std::size_t>{25, 25}, 0.2, 0.02, seed);
    const FeatureMatrix f = one_hot_noise_features(pg.blocks, 2, 0.5, seed);
    const LabelVector y = LabelVector::from_labels(pg.blocks);
    const RoleMask m = random_split(50, 0.6, 0.2, seed);
    TrainConfig cfg;
    cfg.hidden_dim = 16;
    cfg.max_epochs = 20;
    cfg.seed = seed;
    const TrainResult res = train(pg.graph, f, y, m, whole(pg.graph), cfg);
    Rng rng(0);
    const auto logits = forward(res.params, normalize_adjacency<double>(pg.graph), to_matrix(f), false, 0.0, rng).logits;
    std::vector<oracle::DenseMat> dw;
    for (const auto& w : res.params.weights) dw.push_back(oracle::to_dense(w));
    const auto ref = oracle::gcn_logits(pg.graph, oracle::to_dense(to_matrix(f)), dw);
    for (std::size_t i = 0; i < logits.rows; ++i)
      for (std::size_t j = 0; j < logits.cols; ++j) worst = std::max(worst, std::abs(logits(i, j) - ref[i][j]));
  }
  return verdict(worst <= 1e-9, "max logit deviation " + fmt(worst, 3) + " over 5 trained models");
}

Outcome train_cora_scale(const std::vector<std::string>& data, const std::string& tag, double& f1, double& seconds) {
  const fs::path dir = work_dir("c6_" + tag);
  Stopwatch watch;
  std::string err;
  const int code = cli(concat({"train", "--out-dir", dir.string(), "--seed", "0", "--layers", "2", "--hidden", "64",
                               "--dropout", "0.5", "--balls-per-batch", "1"},
                              data),
                       &err);
  seconds = watch.elapsed_ms() / 1000.0;
  if (code != 0) return verdict(false, "train failed: " + err);
  f1 = json::parse(slurp(dir / "report.json"))["test_micro_f1"].get<double>();
  return verdict(f1 >= 0.80 && seconds <= 120.0, "");
}

Outcome criterion6(bool require_real) {
  const auto real = cora_flags();
  double f1 = 0.0;
  double s = 0.0;
  if (!real.empty()) {
    Outcome o = train_cora_scale(real, "cora", f1, s);
    if (o.detail.empty()) o.detail = "Cora test Micro-F1 " + fmt(f1) + ", " + fmt(s, 3) + " s";
    return o;
  }
  if (require_real) return {Status::kSkip, "GBC_CORA_DIR unset"};
  const Outcome proxy = train_cora_scale({"--synthetic", "cora-like"}, "surrogate", f1, s);
  if (proxy.status == Status::kFail && !proxy.detail.empty()) return proxy;
  return {Status::kSkip, "real Cora absent (set GBC_CORA_DIR); cora-like surrogate proxy: test Micro-F1 " + fmt(f1) +
                             ", " + fmt(s, 3) + " s, " + (proxy.status == Status::kPass ? "meets" : "misses") +
                             " the 0.80 band"};
}

Outcome criterion7() {
  std::string worst;
  double min_f1 = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticDataset ds = two_block_fixture(seed);
    const RoleMask m = random_split(100, 0.6, 0.2, seed);
    CoarsenConfig ccfg;
    ccfg.seed = seed;
    const BallPartition p = coarsen(ds.graph, ccfg).partition;
    TrainConfig cfg;
    cfg.max_epochs = 50;
    cfg.seed = seed;
    const TrainResult res = train(ds.graph, ds.features, ds.labels, m, p, cfg);
    min_f1 = std::min(min_f1, res.best_val_f1);
  }
  return verdict(min_f1 >= 0.95, "min best val Micro-F1 over 5 seeds " + fmt(min_f1));
}

Outcome criterion8() {
  const fs::path dir = work_dir("c8");
  Stopwatch watch;
  std::string err;
  if (cli({"bench-scaling", "--out-dir", dir.string(), "--seed", "0"}, &err) != 0) return verdict(false, err);
  const double minutes = watch.elapsed_ms() / 60000.0;
  const json r = json::parse(slurp(dir / "bench_scaling.json"));
  const double slope = r["slope"].get<double>();
  const bool monotone = r["monotone"].get<bool>();
  return verdict(slope <= 1.3 && monotone && minutes <= 15.0,
                 "log-log slope " + fmt(slope, 3) + (monotone ? ", monotone" : ", NOT monotone") + ", " +
                     fmt(minutes, 3) + " min");
}

Outcome criterion9() {
  std::string name;
  const auto data = cora_scale_flags(name);
  const fs::path dir = work_dir("c9");
  std::string err;
  if (cli(concat({"ablate", "--no-train", "--repeats", "5", "--out-dir", dir.string()}, data), &err) != 0) {
    return verdict(false, err);
  }
  const json r = json::parse(slurp(dir / "ablate.json"));
  const auto& v = r["variants"];
  const auto& c = r["checks"];
  const bool ok = c["wob_t_equals_initial_k"] && c["woi_t_below_half_full"] && c["full_time_within_3x_wob"];
  return verdict(ok, name + ": t full/w-o-B/w-o-I = " + std::to_string(v[0]["t"].get<int>()) + "/" +
                         std::to_string(v[1]["t"].get<int>()) + "/" + std::to_string(v[2]["t"].get<int>()) +
                         ", time full/w-o-B " + fmt(v[0]["coarsen_ms"].get<double>() / v[1]["coarsen_ms"].get<double>(), 3));
}

Outcome criterion10() {
  std::string name;
  const auto data = cora_scale_flags(name);
  const fs::path dir = work_dir("c10");
  std::string err;
  if (cli(concat({"quality-modes", "--no-train", "--repeats", "5", "--out-dir", dir.string()}, data), &err) != 0) {
    return verdict(false, err);
  }
  const json r = json::parse(slurp(dir / "quality_modes.json"));
  const auto& ad = r["modes"][0];
  const auto& purity = r["modes"][1];
  const double ratio = purity["coarsen_ms"].get<double>() / ad["coarsen_ms"].get<double>();
  const double split_ratio = purity["split_ms"].get<double>() / ad["split_ms"].get<double>();
  return verdict(ratio >= 2.0, name + ": purity/AD coarsen time " + fmt(ratio, 3) + " (split phase alone " +
                                   fmt(split_ratio, 3) + ", init " + fmt(ad["init_ms"].get<double>(), 3) + " ms of " +
                                   fmt(ad["coarsen_ms"].get<double>(), 3) + " ms)");
}

bool replay_identical(const std::vector<std::string>& args, const std::string& tag, std::string& why) {
  std::vector<std::string> runs[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path dir = work_dir("c11_" + tag + std::to_string(k));
    std::ostringstream out;
    std::ostringstream err;
    if (run_cli(concat(args, {"--out-dir", dir.string()}), out, err) != 0) {
      why = tag + " failed: " + err.str();
      return false;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string text = out.str();
    // The output directory is echoed in the config; drop it before comparing.
    const std::string d = dir.string();
    for (std::size_t pos; (pos = text.find(d)) != std::string::npos;) text.erase(pos, d.size());
    runs[k].push_back(text);
    for (const auto& f : files) {
      std::string bytes = slurp(f);
      for (std::size_t pos; (pos = bytes.find(d)) != std::string::npos;) bytes.erase(pos, d.size());
      runs[k].push_back(f.filename().string() + "\n" + bytes);
    }
  }
  if (runs[0] != runs[1]) {
    why = tag + " output differs between runs";
    return false;
  }
  return true;
}

Outcome criterion11() {
  const std::vector<std::string> fixed{"--seed", "7", "--threads", "1", "--no-timings"};
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
      {"coarsen", {"coarsen", "--synthetic", "cora-like", "--trace"}},
      {"train", {"train", "--synthetic", "cora-like", "--max-epochs", "20"}},
      {"ablate", {"ablate", "--synthetic", "two-block", "--max-epochs", "10"}},
      {"sweep-k", {"sweep-k", "--synthetic", "two-block", "--max-epochs", "10"}},
      {"quality-modes", {"quality-modes", "--synthetic", "two-block", "--max-epochs", "10"}},
      {"bench-scaling", {"bench-scaling", "--sizes", "2000,4000"}},
      {"gen", {"gen", "--kind", "cora-like"}},
  };
  std::string why;
  for (const auto& [tag, args] : cases) {
    if (!replay_identical(concat(args, fixed), tag, why)) return verdict(false, why);
  }
  return verdict(true, "7 commands replay byte-identically (timing fields zeroed)");
}

const char* status_name(Status s) {
  switch (s) {
    case Status::kPass:
      return "PASS";
    case Status::kFail:
      return "FAIL";
    default:
      return "SKIP";
  }
}

std::set<int> parse_ids(const std::string& text) {
  std::set<int> ids;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) ids.insert(std::stoi(item));
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gbc acceptance suite"};
  bool cora = false;
  std::string only;
  std::string expect_fail;
  app.add_flag("--cora", cora, "Run criterion 6 on real Cora from GBC_CORA_DIR (exit 77 when unset)");
  app.add_option("--only", only, "Comma-separated criteria to run");
  app.add_option("--expect-fail", expect_fail, "Comma-separated criteria whose FAIL does not change the exit code");
  CLI11_PARSE(app, argc, argv);

  if (cora) {
    if (cora_flags().empty()) {
      std::cout << "criterion  6: SKIP  GBC_CORA_DIR unset\n";
      return 77;
    }
    only = "6";
  }
  const std::set<int> selected = parse_ids(only);
  const std::set<int> tolerated = parse_ids(expect_fail);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"coarsening invariants on 200 random graphs", criterion1},
      {"split and supergraph oracles", criterion2},
      {"coarse quadratic identity", criterion3},
      {"gradient check", criterion4},
      {"full-batch equivalence with dense GCN", criterion5},
      {"Cora node classification", [cora] { return criterion6(cora); }},
      {"two-block fixture val F1 within 50 epochs", criterion7},
      {"coarsening scales linearly", criterion8},
      {"ablation directionality", criterion9},
      {"purity mode at least 2x slower than AD", criterion10},
      {"deterministic replay", criterion11},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    std::string note;
    if (o.status == Status::kFail) {
      if (tolerated.count(id)) {
        note = " [known failure, see README]";
      } else {
        ++failures;
      }
    }
    std::cout << "criterion " << (id < 10 ? " " : "") << id << ": " << status_name(o.status) << "  "
              << criteria[i].first << " (" << o.detail << ")" << note << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
