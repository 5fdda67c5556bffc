// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
//   acceptance [--cli <denoise binary>] [--work <dir>] [--only 1,2,...]
//
// Exit status is non-zero when a gating criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "denoise/harness.hpp"
#include "denoise/losses.hpp"
#include "denoise/trainer.hpp"
#include "denoise/tu_parser.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace denoise;
using namespace test_support;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

struct Options {
  std::string cli;
  fs::path work = fs::temp_directory_path() / "denoise_acceptance";
  std::set<int> only;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

Outcome verdict(bool ok, const std::string& detail) { return {ok ? Status::Pass : Status::Fail, detail}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1 ------------------------------------------------------------------------
Outcome gradient_integrity() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  std::string worst_name;
  auto track = [&](double e, const std::string& name) {
    if (e > worst) {
      worst = e;
      worst_name = name;
    }
  };
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix other = random_matrix(5, 5, rng, 0.2, 1.0);
    for (auto kind : ad::kAllOpKinds) {
      const Matrix x = random_matrix(5, 5, rng, 0.2, 1.2);
      const Matrix w = random_matrix(12, 12, rng);
      const auto f = [&](const ad::Tensor& t) {
        ad::OpArgs args;
        args.scalar = 1.3;
        args.indices = {4, 0, 2};
        const ad::Tensor ops[] = {t, ad::Tensor::constant(other)};
        const auto y = ad::forward(kind, ops, args);
        return ad::sum(ad::mul(y, ad::Tensor::constant(w.topLeftCorner(y.rows(), y.cols()))));
      };
      track(ad::grad_check(f, x), ad::to_string(kind));
    }
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 4);
    const auto g = random_graph(n, 0.5, 3, rng);
    const Matrix adj = g.adjacency();
    const auto model = init_model({3, 6, 2}, static_cast<std::uint64_t>(trial));
    const auto prop = ad::Tensor::constant(normalize_adjacency(adj));
    track(ad::grad_check(
              [&](const ad::Tensor& w0) {
                const auto z = encode(ad::Tensor::constant(g.attrs()), prop, EncoderParams{{w0, model.encoder.weights[1]}});
                return feature_loss(ad::Tensor::constant(g.attrs()), decode_attributes(z, model.decoder, prop)).total;
              },
              model.encoder.weights[0].value()),
          "L_F");
    track(ad::grad_check(
              [&](const ad::Tensor& w0) {
                const auto z = encode(ad::Tensor::constant(g.attrs()), prop, EncoderParams{{w0, model.encoder.weights[1]}});
                return structure_loss(adj, decode_structure(z, model.decoder, prop), 1.0).total;
              },
              model.encoder.weights[0].value()),
          "L_S");
    const Matrix pos = random_matrix(3, 6, rng), neg = random_matrix(3, 6, rng);
    AnchorBank bank;
    bank.rows = random_matrix(4, 6, rng);
    track(ad::grad_check(
              [&](const ad::Tensor& w0) {
                const auto z = encode(ad::Tensor::constant(g.attrs()), prop, EncoderParams{{w0, model.encoder.weights[1]}});
                return contrastive_loss(readout(mixup_fuse(z, bank, 0.8, MixupMode::SoftmaxNormalized)), pos, neg, 0.5);
              },
              model.encoder.weights[0].value()),
          "L_cont");
  }
  const double secs = seconds_since(t0);
  return verdict(worst <= 1e-4 && secs <= 60.0,
                 "max rel err " + fmt(worst) + " (" + worst_name + "), " + fmt(secs, 3) + " s");
}

// 2 ------------------------------------------------------------------------
Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  std::uniform_real_distribution<double> u(0, 1);
  const int cases = 1000;
  double q_err = 0, eta_err = 0, mix_err = 0, auc_err = 0;
  int topk_bad = 0;
  for (int c = 0; c < cases; ++c) {
    std::vector<double> v(1 + c % 23);
    for (auto& x : v) x = u(rng) < 0.1 ? 0.5 : u(rng) * 4 - 2;
    const double q = u(rng);
    q_err = std::max(q_err, std::abs(quantile(v, q) - oracle::quantile(v, q)));

    const Matrix z = random_matrix(2 + c % 7, 1 + c % 5, rng);
    const auto got = graph_similarity_scores(z);
    const auto want = oracle::eta(z);
    for (std::size_t i = 0; i < got.size(); ++i) eta_err = std::max(eta_err, std::abs(got[i] - want[i]));

    std::vector<NormalGraphNodes> normals;
    std::vector<std::vector<double>> scores;
    for (int g = 0; g < 1 + c % 4; ++g) {
      const int n = 1 + (c + g) % 5;
      normals.push_back({static_cast<std::size_t>(7 * g + c % 3), random_matrix(n, 2, rng)});
      std::vector<double> s(static_cast<std::size_t>(n));
      for (auto& x : s) x = std::round(u(rng) * 4) / 4;  // coarse values force ties
      scores.push_back(s);
    }
    const std::size_t k = 1 + static_cast<std::size_t>(c % 9);
    if (select_topk_nodes(scores, normals, k).source != oracle::topk(scores, normals, k)) ++topk_bad;

    const Matrix zn = random_matrix(1 + c % 6, 3, rng);
    AnchorBank bank;
    bank.rows = random_matrix(1 + c % 4, 3, rng);
    const double lambda = u(rng);
    const bool soft = c % 2 == 0;
    const Matrix fused =
        mixup_fuse(ad::Tensor::constant(zn), bank, lambda, soft ? MixupMode::SoftmaxNormalized : MixupMode::Verbatim)
            .value();
    mix_err = std::max(mix_err, (fused - oracle::mixup(zn, bank.rows, lambda, soft)).cwiseAbs().maxCoeff());

    std::vector<double> s(static_cast<std::size_t>(2 + c % 40));
    std::vector<int> l(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = std::round(u(rng) * 10) / 10;
      l[i] = u(rng) < 0.4 ? 1 : 0;
    }
    l[0] = 0;
    l[1] = 1;
    auc_err = std::max(auc_err, std::abs(auroc(s, l) - oracle::auroc(s, l)));
  }
  const double secs = seconds_since(t0);
  const bool ok = q_err <= 1e-12 && eta_err <= 1e-12 && mix_err <= 1e-12 && auc_err <= 1e-12 && topk_bad == 0 &&
                  secs <= 60.0;
  return verdict(ok, std::to_string(cases) + " cases each; max err quantile " + fmt(q_err) + ", eta " + fmt(eta_err) +
                         ", mixup " + fmt(mix_err) + ", auroc " + fmt(auc_err) + ", top-k mismatches " +
                         std::to_string(topk_bad) + ", " + fmt(secs, 3) + " s");
}

// 3 ------------------------------------------------------------------------
Outcome loss_identities() {
  Rng rng(303);
  double lf = 0, ls_excess = -INFINITY, lc = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t % 12);
    const auto g = random_graph(n, 0.3, 4, rng);
    const auto x = ad::Tensor::constant(g.attrs());
    lf = std::max(lf, std::abs(feature_loss(x, x).total.item()));
    const Matrix adj = g.adjacency();
    const double ls = structure_loss(adj, ad::clamp(ad::Tensor::constant(adj), ad::kEps, 1 - ad::kEps), 1.0).total.item();
    const double bound = 2 * ad::kEps * static_cast<double>(n * n);
    ls_excess = std::max(ls_excess, ls - bound);
    const Matrix pool = random_matrix(4, 5, rng);
    lc = std::max(lc, std::abs(contrastive_loss(ad::Tensor::constant(random_matrix(6, 5, rng)), pool, pool, 0.5).item() +
                               std::log(2.0)));
  }
  return verdict(lf <= 1e-9 && ls_excess <= 0 && lc <= 1e-9,
                 "|L_F(X,X)| " + fmt(lf) + ", L_S - 2*eps*n^2 max " + fmt(ls_excess) + ", |L_cont + log 2| " + fmt(lc));
}

// 4 ------------------------------------------------------------------------
Outcome permutation_invariance() {
  Rng rng(404);
  SynthConfig sc;
  const auto d = gen_synthetic(sc, 4);
  std::vector<Graph> train(d.graphs.begin(), d.graphs.begin() + 40);
  TrainConfig tc;
  tc.epochs = 5;
  tc.seed = 4;
  const auto model = denoise::train(train, tc).model;
  std::vector<AggErrorVector> vs;
  for (const auto& g : train) vs.push_back(agg_error_vector(g, model, 1.0));
  const auto head = fit_score_head(vs, {.seed = 4});

  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-12, std::abs(b)); };
  double emb = 0, agg = 0, score = 0;
  for (int gi = 0; gi < 20; ++gi) {
    const auto& g = d.graphs[static_cast<std::size_t>(100 + gi)];
    const Matrix e0 = readout(encode(g.attrs(), g.adjacency(), model.encoder)).value();
    const auto z0 = agg_error_vector(g, model, 1.0);
    const double s0 = anomaly_score(z0, head);
    for (int p = 0; p < 5; ++p) {
      const auto h = permute_nodes(g, random_permutation(g.num_nodes(), rng));
      const Matrix e1 = readout(encode(h.attrs(), h.adjacency(), model.encoder)).value();
      emb = std::max(emb, (e1 - e0).cwiseAbs().maxCoeff() / std::max(1e-12, e0.cwiseAbs().maxCoeff()));
      const auto z1 = agg_error_vector(h, model, 1.0);
      for (int j = 0; j < 4; ++j) agg = std::max(agg, rel(z1.z[j], z0.z[j]));
      score = std::max(score, rel(anomaly_score(z1, head), s0));
    }
  }
  return verdict(emb <= 1e-6 && agg <= 1e-6 && score <= 1e-6,
                 "20 graphs x 5 permutations; max rel change embedding " + fmt(emb) + ", z_agg " + fmt(agg) +
                     ", score " + fmt(score));
}

// 5-7 ----------------------------------------------------------------------
ExperimentConfig synthetic_config(double anom_frac, double beta) {
  ExperimentConfig cfg;
  cfg.synth.n_graphs = 300;
  cfg.synth.p_normal = 0.1;
  cfg.synth.p_anom = 0.3;
  cfg.synth.attr_shift = 1.0;
  cfg.synth.anom_frac = anom_frac;
  cfg.beta = beta;
  cfg.trials = 5;
  cfg.train.epochs = 100;
  return cfg;
}

std::string aucs(const TrialReport& r) {
  std::string s = "[";
  for (const auto& t : r.trials) s += (s.size() > 1 ? " " : "") + fmt(t.test_auc, 3);
  return s + "]";
}

Outcome synthetic_end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_experiment(synthetic_config(0.2, 0.2));
  const double secs = seconds_since(t0);
  return verdict(r.mean_auc >= 0.90 && secs <= 600.0,
                 "beta 0.2, mean AUC " + fmt(r.mean_auc) + " +- " + fmt(r.std_auc) + " " + aucs(r) + ", " +
                     fmt(secs, 4) + " s");
}

struct RobustnessRuns {
  TrialReport clean;
  TrialReport noisy;
  bool done = false;
};

RobustnessRuns& robustness_runs() {
  static RobustnessRuns runs;
  if (!runs.done) {
    runs.clean = run_experiment(synthetic_config(0.3, 0.0));
    runs.noisy = run_experiment(synthetic_config(0.3, 0.3));
    runs.done = true;
  }
  return runs;
}

Outcome contamination_robustness() {
  const auto& r = robustness_runs();
  const double drop = r.clean.mean_auc - r.noisy.mean_auc;
  return verdict(r.noisy.mean_auc >= r.clean.mean_auc - 0.05,
                 "mean AUC beta 0: " + fmt(r.clean.mean_auc) + " " + aucs(r.clean) + ", beta 0.3: " +
                     fmt(r.noisy.mean_auc) + " " + aucs(r.noisy) + ", drop " + fmt(drop));
}

Outcome ablation_boundary() {
  const auto& r = robustness_runs();
  auto cfg = synthetic_config(0.3, 0.3);
  cfg.train.w = 0.0;
  const auto ablated = run_experiment(cfg);
  const double gap = r.noisy.mean_auc - ablated.mean_auc;
  return verdict(gap >= 0.02, "beta 0.3 mean AUC full " + fmt(r.noisy.mean_auc) + ", w=0 " + fmt(ablated.mean_auc) +
                                  " " + aucs(ablated) + ", gap " + fmt(gap));
}

// 8 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome determinism(const Options& o) {
  if (o.cli.empty()) return {Status::Skip, "no --cli binary given"};
  const fs::path a = o.work / "det_a", b = o.work / "det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  for (const auto& dir : {a, b}) {
    const std::string cmd = "\"" + o.cli + "\" run --seed 7 --trials 2 --out \"" + dir.string() + "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {Status::Fail, "command failed: " + cmd};
  }
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(a)) files.push_back(e.path().filename().string());
  std::sort(files.begin(), files.end());
  bool ok = files.size() >= 3;
  std::string differing;
  for (const auto& f : files) {
    if (!fs::exists(b / f) || slurp(a / f) != slurp(b / f)) {
      ok = false;
      differing += " " + f;
    }
  }
  return verdict(ok, "run --seed 7 twice (2 trials): " + std::to_string(files.size()) + " files compared" +
                         (differing.empty() ? ", all byte-identical" : ", differing:" + differing));
}

// 9, 10 ---------------------------------------------------------------------
fs::path aids_dir() {
  if (const char* env = std::getenv("DENOISE_AIDS_DIR")) return env;
  return fs::path(DENOISE_TEST_DATA) / ".." / ".." / "data" / "AIDS";
}

bool aids_present() { return fs::exists(aids_dir() / "AIDS_A.txt"); }

Outcome aids_integration() {
  if (!aids_present()) return {Status::Skip, "AIDS files not found at " + aids_dir().string() + " (set DENOISE_AIDS_DIR)"};
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.dataset = aids_dir().string();
  cfg.trials = 5;
  std::string detail;
  bool ok = true;
  for (double beta : {0.0, 0.3}) {
    cfg.beta = beta;
    const auto r = run_experiment(cfg);
    ok = ok && r.mean_auc >= 0.95;
    detail += "beta " + fmt(beta, 2) + ": " + fmt(r.mean_auc) + " +- " + fmt(r.std_auc) + "; ";
  }
  const double secs = seconds_since(t0);
  return verdict(ok && secs <= 1800.0, detail + fmt(secs, 4) + " s (non-gating)");
}

Outcome parser_fidelity() {
  const auto d = parse_tudataset(TuSourceDir::from_directory(fixture_dir()));
  Matrix x0(2, 3), x1(1, 3);
  x0 << 1, 0, 0, 0, 1, 0;
  x1 << 0, 0, 1;
  const std::vector<Edge> e0 = {{0, 1}};
  const bool toy = d.size() == 2 && d.graphs[0] == Graph::build(2, e0, x0, GraphLabel::Normal) &&
                   d.graphs[1] == Graph::build(1, {}, x1, GraphLabel::Anomalous);
  std::string detail = std::string("toy fixture ") + (toy ? "exact" : "MISMATCH");
  if (!aids_present()) return verdict(toy, detail + "; AIDS part skipped (files absent)");

  const auto aids = parse_tudataset(TuSourceDir::from_directory(aids_dir()));
  const auto r = validate_dataset(aids);
  const bool count = r.graph_count == 2000;
  const bool nodes = std::abs(r.all.mean_nodes / 15.7 - 1.0) <= 0.01;
  const bool edges = std::abs(r.all.mean_directed_edges / 32.4 - 1.0) <= 0.01;
  detail += "; AIDS " + std::to_string(r.graph_count) + " graphs, avg nodes " + fmt(r.all.mean_nodes) +
            ", avg edges (directed) " + fmt(r.all.mean_directed_edges);
  return verdict(toy && count && nodes && edges, detail);
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) {
      o.cli = argv[++i];
    } else if (a == "--work" && i + 1 < argc) {
      o.work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) o.only.insert(std::stoi(tok));
    } else {
      std::cerr << "usage: acceptance [--cli path] [--work dir] [--only 1,2,...]\n";
      return 2;
    }
  }
  fs::create_directories(o.work);

  struct Criterion {
    int id;
    const char* name;
    bool gating;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient integrity", true, gradient_integrity},
      {2, "oracle equivalence", true, oracle_equivalence},
      {3, "loss identities", true, loss_identities},
      {4, "permutation invariance", true, permutation_invariance},
      {5, "synthetic end-to-end", true, synthetic_end_to_end},
      {6, "contamination robustness", true, contamination_robustness},
      {7, "ablation boundary", true, ablation_boundary},
      {8, "determinism", true, [&] { return determinism(o); }},
      {9, "AIDS integration", false, aids_integration},
      {10, "parser fidelity", true, parser_fidelity},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!o.only.empty() && !o.only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = out.status == Status::Pass ? "PASS" : out.status == Status::Fail ? "FAIL" : "SKIP";
    std::printf("[%s] criterion %d %s: %s (%.1f s)\n", tag, c.id, c.name, out.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (out.status == Status::Fail && c.gating) ++failures;
  }
  std::printf("%d gating criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
