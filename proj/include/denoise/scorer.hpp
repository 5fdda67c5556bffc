#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "denoise/graph.hpp"
#include "denoise/losses.hpp"
#include "denoise/model.hpp"

namespace denoise {

/// (mean feature error, mean structure error, std feature error, std structure error).
struct AggErrorVector {
  std::array<double, 4> z{};
};

/// Per-node errors of the model on the unperturbed graph.
ReconErrors reconstruction_errors(const Graph& g, const ModelParams& model, double tau_exp);
AggErrorVector aggregate(const ReconErrors& errors);
AggErrorVector agg_error_vector(const Graph& g, const ModelParams& model, double tau_exp);

enum class ScoreNormalizer { Variance, StdDev };

struct ScoreHeadConfig {
  std::size_t hidden = 16;
  std::size_t steps = 500;
  double lr = 1e-2;
  std::uint64_t seed = 0;
  ScoreNormalizer normalizer = ScoreNormalizer::Variance;
  bool standardize_inputs = true;
};

/// 4→h→4 ReLU MLP acting on standardized error vectors, plus the training
/// statistics μ_j and σ_j² (population variance, floored at ε).
struct ScoreHead {
  Matrix w1;  // 4×h
  Matrix b1;  // 1×h
  Matrix w2;  // h×4
  Matrix b2;  // 1×4
  std::array<double, 4> mu{};
  std::array<double, 4> sigma2{};
  ScoreNormalizer normalizer = ScoreNormalizer::Variance;
  bool standardized = false;  // MLP sees (v - μ)/σ and emits in those units
  bool fitted = false;

  /// MLP(v) expressed back in the original units.
  std::array<double, 4> reconstruct(const AggErrorVector& v) const;
};

ScoreHead fit_score_head(std::span<const AggErrorVector> train_vectors, const ScoreHeadConfig& cfg);

/// (1/4) Σ_j (MLP(v)_j - v_j)² / σ_j² (or / σ_j in StdDev mode).
double anomaly_score(const AggErrorVector& v, const ScoreHead& head);

}  // namespace denoise
