#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "denoise/checkpoint.hpp"
#include "denoise/config.hpp"
#include "denoise/errors.hpp"
#include "denoise/harness.hpp"
#include "denoise/trainer.hpp"
#include "denoise/tu_parser.hpp"

namespace fs = std::filesystem;
using namespace denoise;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct Options {
  std::string config;
  std::string dataset;
  std::optional<double> beta;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> jobs;
  std::string out;
  std::string model;
};

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (!o.dataset.empty()) cfg.dataset = o.dataset;
  if (o.beta) cfg.beta = *o.beta;
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.jobs) cfg.jobs = *o.jobs;
  cfg.validate();
  return cfg;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) fail(ErrorCode::InvalidConfig, std::string(flag) + " is required");
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) fail(ErrorCode::Io, "cannot write " + p.string());
  return os;
}

int cmd_parse(const Options& o) {
  const auto cfg = resolve(o);
  require(o.dataset, "--dataset");
  TuParseStats stats;
  TuParseOptions popt;
  popt.policy = cfg.anomaly_class ? AnomalyClassPolicy::explicit_class(*cfg.anomaly_class)
                                  : AnomalyClassPolicy::minority();
  popt.features = cfg.node_features;
  popt.max_degree = cfg.max_degree;
  const auto d = parse_tudataset(TuSourceDir::from_directory(cfg.dataset), popt, &stats);
  const auto report = validate_dataset(d);
  if (o.out.empty()) {
    write_report_csv(report, std::cout);
  } else {
    auto os = open_out(o.out);
    write_report_csv(report, os);
  }
  std::cerr << d.name << ": " << report.graph_count << " graphs, features from " << stats.feature_source << ", "
            << stats.self_loops_dropped << " self-loops dropped\n";
  if (!report.ok()) {
    std::cerr << "dataset has " << report.non_finite_graphs.size() << " graphs with non-finite attributes\n";
    return kExitData;
  }
  return 0;
}

int cmd_synth(const Options& o) {
  auto cfg = resolve(o);
  require(o.out, "--out");
  if (o.seed) cfg.synth_seed = *o.seed;
  const auto d = gen_synthetic(cfg.synth, cfg.synth_seed);
  write_tudataset(d, fs::path(o.out) / d.name, d.name);
  std::cout << "wrote " << d.size() << " graphs to " << (fs::path(o.out) / d.name).string() << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  const auto cfg = resolve(o);
  require(o.out, "--out");
  const auto d = load_dataset(cfg);
  const auto seed = trial_seed(cfg.seed, 0);
  auto split = split_dataset(d, seed);
  const auto ids = inject_noise(d, split, cfg.beta, seed);
  std::vector<Graph> graphs;
  for (auto id : ids) graphs.push_back(d.graphs[id]);

  TrainConfig tc = cfg.train;
  tc.seed = seed;
  auto result = train(graphs, tc);
  std::vector<AggErrorVector> vectors;
  for (const auto& g : graphs) vectors.push_back(agg_error_vector(g, result.model, tc.tau_exp));
  ScoreHeadConfig hc = cfg.head;
  hc.seed = seed;

  const fs::path out = o.out;
  fs::create_directories(out);
  save_checkpoint(Checkpoint{result.model, fit_score_head(vectors, hc), tc.tau_exp}, out / "model.ckpt");
  auto hist = open_out(out / "history.csv");
  result.history.write_csv(hist);
  std::cout << "trained on " << graphs.size() << " graphs, checkpoint at " << (out / "model.ckpt").string() << '\n';
  return 0;
}

int cmd_score(const Options& o) {
  const auto cfg = resolve(o);
  require(o.model, "--model");
  require(o.out, "--out");
  const auto ckpt = load_checkpoint(fs::path(o.model));
  if (!ckpt.head) fail(ErrorCode::UnfittedHead, "checkpoint has no score head");
  const auto d = load_dataset(cfg);
  std::vector<ScoredGraph> rows;
  std::vector<double> scores;
  std::vector<int> labels;
  for (std::size_t i = 0; i < d.size(); ++i) {
    ScoredGraph s;
    s.graph_id = i;
    s.label = d.graphs[i].is_anomalous() ? 1 : 0;
    s.z = agg_error_vector(d.graphs[i], ckpt.model, ckpt.tau_exp);
    s.score = anomaly_score(s.z, *ckpt.head);
    rows.push_back(s);
    scores.push_back(s.score);
    labels.push_back(s.label);
  }
  auto os = open_out(o.out);
  write_scores_csv(rows, os);
  const auto counts = d.class_counts();
  if (counts.normals > 0 && counts.anomalies > 0) std::cout << "AUROC " << auroc(scores, labels) << '\n';
  return 0;
}

void print_report(const TrialReport& r) {
  std::cout.precision(6);
  for (const auto& t : r.trials) std::cout << "trial " << t.trial << " seed " << t.seed << " AUC " << t.test_auc << '\n';
  std::cout << "mean AUC " << r.mean_auc << " +- " << r.std_auc << '\n';
}

int cmd_run(const Options& o) {
  const auto cfg = resolve(o);
  const auto start = std::chrono::steady_clock::now();
  const auto report = run_experiment(cfg, o.out.empty() ? fs::path{} : fs::path(o.out));
  print_report(report);
  std::cerr << "elapsed " << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
            << " s\n";
  return 0;
}

int cmd_sweep(const Options& o) {
  const auto cfg = resolve(o);
  const auto rows = sweep(cfg, o.out.empty() ? fs::path{} : fs::path(o.out));
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.point) std::cout << k << '=' << v.dump() << ' ';
    std::cout << "mean AUC " << r.report.mean_auc << " +- " << r.report.std_auc << '\n';
  }
  return 0;
}

int cmd_dump(const Options& o) {
  const auto cfg = resolve(o);
  require(o.model, "--model");
  require(o.out, "--out");
  const auto ckpt = load_checkpoint(fs::path(o.model));
  const auto d = load_dataset(cfg);
  const auto seed = trial_seed(cfg.seed, 0);
  auto split = split_dataset(d, seed);
  inject_noise(d, split, cfg.beta, seed);
  auto os = open_out(o.out);
  dump_embeddings(ckpt.model, d, split, os);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contamination-robust graph-level anomaly detection"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--dataset", o.dataset, "TU dataset directory or 'synthetic'");
    sub->add_option("--beta", o.beta, "contamination ratio");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--trials", o.trials, "number of trials");
    sub->add_option("--jobs", o.jobs, "concurrent trials");
    sub->add_option("--out", o.out, "output directory or file");
  };

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
    bool takes_model;
  };
  const Command commands[] = {
      {"parse", "validate a TU dataset directory", cmd_parse, false},
      {"synth", "emit a synthetic dataset in TU layout", cmd_synth, false},
      {"train", "train one model and save a checkpoint", cmd_train, false},
      {"score", "score every graph of a dataset with a checkpoint", cmd_score, true},
      {"run", "full multi-trial experiment", cmd_run, false},
      {"sweep", "hyperparameter grid", cmd_sweep, false},
      {"dump-embeddings", "write graph embeddings of a checkpoint", cmd_dump, true},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    if (c.takes_model) sub->add_option("--model", o.model, "checkpoint path");
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    for (const auto& [sub, cmd] : subs) {
      if (sub->parsed()) return cmd->run(o);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    switch (category(e.code())) {
      case ErrorCategory::Config: return kExitConfig;
      case ErrorCategory::Data: return kExitData;
      case ErrorCategory::Numeric: return kExitNumeric;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
