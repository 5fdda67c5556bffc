#include "denoise/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "denoise/errors.hpp"
#include "denoise/rng.hpp"
#include "denoise/trainer.hpp"
#include "denoise/tu_parser.hpp"

namespace denoise {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSplitTag = 10;
constexpr std::uint64_t kInjectTag = 11;
constexpr std::uint64_t kHeadTag = 12;

std::size_t round_count(double x) { return static_cast<std::size_t>(std::llround(x)); }

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) fail(ErrorCode::Io, "cannot write " + p.string());
  return os;
}

double population_std(std::span<const double> xs, double mean) {
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

std::vector<ScoredGraph> score_ids(const Dataset& d, std::span<const std::size_t> ids, const ModelParams& model,
                                   const ScoreHead& head, double tau_exp) {
  std::vector<ScoredGraph> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) {
    ScoredGraph s;
    s.graph_id = id;
    s.label = d.graphs[id].is_anomalous() ? 1 : 0;
    s.z = agg_error_vector(d.graphs[id], model, tau_exp);
    s.score = anomaly_score(s.z, head);
    out.push_back(s);
  }
  return out;
}

double auc_or_nan(std::span<const ScoredGraph> rows) {
  std::vector<double> s;
  std::vector<int> l;
  for (const auto& r : rows) {
    s.push_back(r.score);
    l.push_back(r.label);
  }
  const bool both = std::count(l.begin(), l.end(), 1) > 0 && std::count(l.begin(), l.end(), 0) > 0;
  return both ? auroc(s, l) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

const char* to_string(SplitRole role) {
  switch (role) {
    case SplitRole::Train: return "train";
    case SplitRole::Val: return "val";
    case SplitRole::Test: return "test";
    case SplitRole::Unused: break;
  }
  return "unused";
}

std::vector<std::size_t> SplitSpec::ids(SplitRole role) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] == role) out.push_back(i);
  }
  return out;
}

std::size_t SplitSpec::count(SplitRole role) const {
  return static_cast<std::size_t>(std::count(roles.begin(), roles.end(), role));
}

SplitSpec split_dataset(const Dataset& d, std::uint64_t seed) {
  std::vector<std::size_t> normals;
  std::vector<std::size_t> anomalies;
  for (std::size_t i = 0; i < d.size(); ++i) (d.graphs[i].is_anomalous() ? anomalies : normals).push_back(i);
  if (normals.empty() || anomalies.empty()) {
    fail(ErrorCode::SingleClassDataset, "dataset '" + d.name + "' needs both normal and anomalous graphs");
  }

  auto rng = make_rng(seed, kSplitTag);
  std::shuffle(normals.begin(), normals.end(), rng);
  std::shuffle(anomalies.begin(), anomalies.end(), rng);

  SplitSpec split;
  split.seed = seed;
  split.roles.assign(d.size(), SplitRole::Unused);

  const std::size_t n = normals.size();
  const std::size_t n_val = std::min(n, round_count(0.1 * static_cast<double>(n)));
  const std::size_t n_test = std::min(n - n_val, round_count(0.1 * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    split.roles[normals[i]] = i < n_test ? SplitRole::Test : i < n_test + n_val ? SplitRole::Val : SplitRole::Train;
  }

  const std::size_t a = anomalies.size();
  const std::size_t per_side = std::max<std::size_t>(1, round_count(0.05 * static_cast<double>(a)));
  const std::size_t a_test = std::min(a, per_side);
  const std::size_t a_val = std::min(a - a_test, per_side);
  for (std::size_t i = 0; i < a_test + a_val; ++i) {
    split.roles[anomalies[i]] = i < a_test ? SplitRole::Test : SplitRole::Val;
  }
  return split;
}

std::vector<std::size_t> inject_noise(const Dataset& d, SplitSpec& split, double beta, std::uint64_t seed) {
  if (!(beta >= 0.0 && beta < 1.0)) fail(ErrorCode::InvalidConfig, "beta must lie in [0, 1)");
  if (split.roles.size() != d.size()) fail(ErrorCode::ShapeMismatch, "split does not match dataset");
  std::vector<std::size_t> train;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (split.roles[i] == SplitRole::Train) train.push_back(i);
    if (split.roles[i] == SplitRole::Unused && d.graphs[i].is_anomalous()) pool.push_back(i);
  }
  const std::size_t train_normals = static_cast<std::size_t>(
      std::count_if(train.begin(), train.end(), [&](std::size_t i) { return !d.graphs[i].is_anomalous(); }));
  const std::size_t want = round_count(beta * static_cast<double>(train_normals));
  if (want > pool.size()) {
    fail(ErrorCode::PoolExhausted, "need " + std::to_string(want) + " anomalies to inject, pool holds " +
                                       std::to_string(pool.size()));
  }
  auto rng = make_rng(seed, kInjectTag);
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t i = 0; i < want; ++i) {
    split.roles[pool[i]] = SplitRole::Train;
    train.push_back(pool[i]);
  }
  split.beta = beta;
  std::sort(train.begin(), train.end());
  return train;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) fail(ErrorCode::ShapeMismatch, "scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) {
        pos += 1.0;
        rank_sum += mid_rank;
      } else if (labels[order[t]] != 0) {
        fail(ErrorCode::SingleClassLabels, "labels must be 0 or 1");
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(scores.size()) - pos;
  if (pos == 0.0 || neg == 0.0) fail(ErrorCode::SingleClassLabels, "AUROC needs both classes");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

void write_scores_csv(std::span<const ScoredGraph> rows, std::ostream& os) {
  const auto old = os.precision(17);
  os << "graph_id,label,score,z_agg0,z_agg1,z_agg2,z_agg3\n";
  for (const auto& r : rows) {
    os << r.graph_id << ',' << r.label << ',' << r.score;
    for (double z : r.z.z) os << ',' << z;
    os << '\n';
  }
  os.precision(old);
}

json TrialReport::to_json() const {
  json trials_json = json::array();
  for (const auto& t : trials) {
    trials_json.push_back({{"trial", t.trial},
                           {"seed", t.seed},
                           {"test_auc", t.test_auc},
                           {"val_auc", std::isnan(t.val_auc) ? json(nullptr) : json(t.val_auc)},
                           {"train_normals", t.train_normals},
                           {"injected", t.injected},
                           {"test_size", t.test_scores.size()}});
  }
  return {{"dataset", dataset_name},
          {"config", config},
          {"trials", trials_json},
          {"mean_auc", mean_auc},
          {"std_auc", std_auc}};
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset == "synthetic") return gen_synthetic(cfg.synth, cfg.synth_seed);
  TuParseOptions options;
  options.policy = cfg.anomaly_class ? AnomalyClassPolicy::explicit_class(*cfg.anomaly_class)
                                     : AnomalyClassPolicy::minority();
  options.features = cfg.node_features;
  options.max_degree = cfg.max_degree;
  return parse_tudataset(TuSourceDir::from_directory(cfg.dataset), options);
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t t) { return master + t; }

TrialOutcome run_trial(const Dataset& d, const ExperimentConfig& cfg, std::size_t t) {
  TrialOutcome out;
  out.trial = t;
  out.seed = trial_seed(cfg.seed, t);

  out.split = split_dataset(d, out.seed);
  out.train_normals = out.split.count(SplitRole::Train);
  const auto train_ids = inject_noise(d, out.split, cfg.beta, out.seed);
  out.injected = train_ids.size() - out.train_normals;

  std::vector<Graph> train_graphs;
  train_graphs.reserve(train_ids.size());
  for (std::size_t id : train_ids) train_graphs.push_back(d.graphs[id]);

  TrainConfig tc = cfg.train;
  tc.seed = out.seed;
  out.model = train(train_graphs, tc).model;

  std::vector<AggErrorVector> train_vectors;
  train_vectors.reserve(train_graphs.size());
  for (const auto& g : train_graphs) train_vectors.push_back(agg_error_vector(g, out.model, tc.tau_exp));
  ScoreHeadConfig hc = cfg.head;
  hc.seed = derive_seed(out.seed, kHeadTag);
  out.head = fit_score_head(train_vectors, hc);

  const auto val_ids = out.split.ids(SplitRole::Val);
  const auto test_ids = out.split.ids(SplitRole::Test);
  out.val_auc = auc_or_nan(score_ids(d, val_ids, out.model, out.head, tc.tau_exp));
  out.test_scores = score_ids(d, test_ids, out.model, out.head, tc.tau_exp);
  out.test_auc = auc_or_nan(out.test_scores);
  if (std::isnan(out.test_auc)) fail(ErrorCode::SingleClassLabels, "test split lacks a class");
  return out;
}

TrialReport run_experiment(const Dataset& d, const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  TrialReport report;
  report.dataset_name = d.name;
  report.config = config_to_json(cfg);
  report.trials.resize(cfg.trials);

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t t = next++; t < cfg.trials; t = next++) {
      try {
        report.trials[t] = run_trial(d, cfg, t);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::min(cfg.jobs, cfg.trials);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<double> aucs;
  for (const auto& t : report.trials) aucs.push_back(t.test_auc);
  report.mean_auc = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
  report.std_auc = population_std(aucs, report.mean_auc);

  if (!out.empty()) {
    std::filesystem::create_directories(out);
    open_out(out / "report.json") << report.to_json().dump(2) << '\n';
    auto csv = open_out(out / "trials.csv");
    csv.precision(17);
    csv << "trial,seed,test_auc,val_auc,train_normals,injected\n";
    for (const auto& t : report.trials) {
      csv << t.trial << ',' << t.seed << ',' << t.test_auc << ',';
      if (!std::isnan(t.val_auc)) csv << t.val_auc;
      csv << ',' << t.train_normals << ',' << t.injected << '\n';
    }
    for (const auto& t : report.trials) {
      auto scores = open_out(out / ("scores_trial" + std::to_string(t.trial) + ".csv"));
      write_scores_csv(t.test_scores, scores);
      if (cfg.dump_embeddings) {
        auto emb = open_out(out / ("embeddings_trial" + std::to_string(t.trial) + ".csv"));
        dump_embeddings(t.model, d, t.split, emb);
      }
    }
  }
  return report;
}

TrialReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  return run_experiment(load_dataset(cfg), cfg, out);
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  if (cfg.grid.empty()) fail(ErrorCode::EmptyGrid, "sweep needs a non-empty grid");
  for (const auto& [key, values] : cfg.grid) {
    if (values.empty()) fail(ErrorCode::EmptyGrid, "grid axis '" + key + "' has no values");
  }
  const Dataset d = load_dataset(cfg);

  std::size_t cells = 1;
  for (const auto& axis : cfg.grid) cells *= axis.second.size();

  std::vector<SweepRow> rows;
  for (std::size_t c = 0; c < cells; ++c) {
    ExperimentConfig point_cfg = cfg;
    point_cfg.grid.clear();
    SweepRow row;
    std::size_t rest = c;
    for (std::size_t a = cfg.grid.size(); a-- > 0;) {
      const auto& [key, values] = cfg.grid[a];
      const auto& v = values[rest % values.size()];
      rest /= values.size();
      set_config_key(point_cfg, key, v);
      row.point.emplace(row.point.begin(), key, v);
    }
    std::filesystem::path cell_out;
    if (!out.empty()) cell_out = out / ("cell" + std::to_string(c));
    row.report = run_experiment(d, point_cfg, cell_out);
    rows.push_back(std::move(row));
  }

  if (!out.empty()) {
    std::filesystem::create_directories(out);
    auto csv = open_out(out / "sweep.csv");
    csv.precision(17);
    for (const auto& [key, values] : cfg.grid) csv << key << ',';
    csv << "mean_auc,std_auc\n";
    for (const auto& r : rows) {
      for (const auto& [key, value] : r.point) {
        const std::string v = value.dump();
        csv << (value.is_array() ? "\"" + v + "\"" : v) << ',';
      }
      csv << r.report.mean_auc << ',' << r.report.std_auc << '\n';
    }
  }
  return rows;
}

void dump_embeddings(const ModelParams& model, const Dataset& d, const SplitSpec& split, std::ostream& os) {
  if (split.roles.size() != d.size()) fail(ErrorCode::ShapeMismatch, "split does not match dataset");
  const auto emb = embed_graphs(model, std::span<const Graph>(d.graphs));
  const auto old = os.precision(17);
  os << "graph_id,split,label";
  for (Eigen::Index c = 0; c < emb.graphs.cols(); ++c) os << ",e" << c;
  os << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    os << i << ',' << to_string(split.roles[i]) << ',' << (d.graphs[i].is_anomalous() ? 1 : 0);
    for (Eigen::Index c = 0; c < emb.graphs.cols(); ++c) os << ',' << emb.graphs(static_cast<Eigen::Index>(i), c);
    os << '\n';
  }
  os.precision(old);
  if (!os) fail(ErrorCode::Io, "embedding dump failed");
}

}  // namespace denoise
