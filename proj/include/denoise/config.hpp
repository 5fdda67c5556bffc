#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "denoise/graph.hpp"
#include "denoise/scorer.hpp"
#include "denoise/trainer.hpp"
#include "denoise/tu_parser.hpp"

namespace denoise {

/// Everything an experiment needs, loaded from a flat JSON object.
struct ExperimentConfig {
  std::string dataset = "synthetic";  // "synthetic" or a TU directory
  SynthConfig synth;
  std::uint64_t synth_seed = 0;
  std::optional<long> anomaly_class;  // unset: minority class
  NodeFeatures node_features = NodeFeatures::Labels;
  std::size_t max_degree = kDefaultMaxDegree;

  double beta = 0.0;
  std::size_t trials = 5;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool dump_embeddings = false;

  TrainConfig train;
  ScoreHeadConfig head;

  /// Sweep axes: key → candidate values (JSON scalars or [lo,hi] for lambda_interval).
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> grid;

  void validate() const;
};

/// Sets one key; unknown keys and ill-typed values raise InvalidConfig
/// naming the key.
void set_config_key(ExperimentConfig& cfg, const std::string& key, const nlohmann::json& value);

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Flat snapshot of every key except grid.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Keys accepted by set_config_key, in snapshot order.
const std::vector<std::string>& config_keys();

}  // namespace denoise
