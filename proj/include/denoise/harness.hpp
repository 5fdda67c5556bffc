#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "denoise/config.hpp"
#include "denoise/graph.hpp"
#include "denoise/model.hpp"
#include "denoise/scorer.hpp"

namespace denoise {

enum class SplitRole { Train, Val, Test, Unused };
const char* to_string(SplitRole role);

/// Per-graph split assignment. Anomalies left Unused form the injection pool.
struct SplitSpec {
  std::vector<SplitRole> roles;
  std::uint64_t seed = 0;
  double beta = 0.0;

  std::vector<std::size_t> ids(SplitRole role) const;
  std::size_t count(SplitRole role) const;
};

/// Normals 80/10/10 (val and test rounded, train takes the remainder);
/// round(5%) of the anomalies, at least one while any remain, go to val and
/// to test. Test is filled before val.
SplitSpec split_dataset(const Dataset& d, std::uint64_t seed);

/// Train ids after injecting round(beta * #train normals) pool anomalies.
/// Returned sorted; `split` gains the injected graphs as Train and records beta.
std::vector<std::size_t> inject_noise(const Dataset& d, SplitSpec& split, double beta, std::uint64_t seed);

/// Mann–Whitney AUROC with ties counted one half. labels: 1 = anomalous.
double auroc(std::span<const double> scores, std::span<const int> labels);

struct ScoredGraph {
  std::size_t graph_id = 0;
  int label = 0;
  double score = 0.0;
  AggErrorVector z;
};

void write_scores_csv(std::span<const ScoredGraph> rows, std::ostream& os);

struct TrialOutcome {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double test_auc = 0.0;
  double val_auc = 0.0;  // NaN when val lacks a class
  std::size_t train_normals = 0;
  std::size_t injected = 0;
  std::vector<ScoredGraph> test_scores;
  ModelParams model;
  SplitSpec split;
  ScoreHead head;
};

struct TrialReport {
  std::vector<TrialOutcome> trials;
  double mean_auc = 0.0;
  double std_auc = 0.0;  // population
  nlohmann::json config;
  std::string dataset_name;

  nlohmann::json to_json() const;
};

Dataset load_dataset(const ExperimentConfig& cfg);

/// Seed of trial t; stable when the trial count grows.
std::uint64_t trial_seed(std::uint64_t master, std::size_t t);

/// split → inject → train → fit head on train → score val/test.
TrialOutcome run_trial(const Dataset& d, const ExperimentConfig& cfg, std::size_t t);

/// Runs all trials (cfg.jobs at a time). When `out` is non-empty writes
/// report.json, trials.csv, scores_trial<t>.csv and optionally
/// embeddings_trial<t>.csv.
TrialReport run_experiment(const Dataset& d, const ExperimentConfig& cfg, const std::filesystem::path& out = {});
TrialReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out = {});

struct SweepRow {
  std::vector<std::pair<std::string, nlohmann::json>> point;
  TrialReport report;
};

/// Cartesian product over cfg.grid; writes sweep.csv into `out` when given.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::filesystem::path& out = {});

/// graph_id,split,label,e0..e{d-1}
void dump_embeddings(const ModelParams& model, const Dataset& d, const SplitSpec& split, std::ostream& os);

}  // namespace denoise
