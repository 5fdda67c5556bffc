#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "denoise/adam.hpp"
#include "denoise/anchor.hpp"
#include "denoise/discriminator.hpp"
#include "denoise/model.hpp"

namespace denoise {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t s1_steps = 1;
  std::size_t s2_steps = 1;
  double w = 200.0;
  double lr = 1e-3;
  double drop_rate = 0.1;
  double alpha = 0.15;
  std::size_t k = 256;
  double lambda_lo = 0.7;
  double lambda_hi = 0.9;
  std::size_t pool_size = 20;  // K
  double beta1 = 0.9;
  double beta2 = 0.1;
  double temp = 0.5;
  double tau_exp = 1.0;
  std::uint64_t seed = 0;
  MixupMode mixup = MixupMode::SoftmaxNormalized;
  std::size_t hidden = 64;
  std::size_t layers = 2;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double recon = 0.0;
  double cont = 0.0;
  std::size_t flagged = 0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  /// epoch,L_recon,L_cont,flagged_count,seconds
  void write_csv(std::ostream& os) const;
  /// Equality on everything except wall-clock time.
  bool same_trajectory(const TrainHistory& other) const;
};

/// A training graph with its fixed inputs precomputed.
struct PreparedGraph {
  ad::Tensor attrs;
  Matrix adjacency;
  ad::Tensor clean_propagation;
};

std::vector<PreparedGraph> prepare_graphs(std::span<const Graph> graphs);

struct GraphEmbeddings {
  std::vector<Matrix> nodes;  // per graph, n×hidden
  Matrix graphs;              // M×hidden readouts
};

/// Inference pass over the unperturbed adjacency; no tape is recorded.
GraphEmbeddings embed_graphs(const ModelParams& model, std::span<const PreparedGraph> graphs);
GraphEmbeddings embed_graphs(const ModelParams& model, std::span<const Graph> graphs);

/// Positive and negative anchor embeddings drawn from the sample pools.
struct ContrastTargets {
  Matrix positives;
  Matrix negatives;
};

ContrastTargets make_targets(const Matrix& graph_embeddings, const SamplePools& pools);

/// One full-batch reconstruction step over θ (encoder + decoders).
/// `propagations` are the perturbed, normalized adjacencies for this epoch.
double stage1_step(std::span<const PreparedGraph> graphs, std::span<const ad::Tensor> propagations,
                   const ModelParams& model, ad::Adam& optimizer, double tau_exp);

/// One full-batch contrastive step over φ (encoder only): descends -w·L_cont
/// on the mixup-fused graph embeddings. Returns L_cont. With w = 0 the
/// optimizer is not touched.
double stage2_step(std::span<const PreparedGraph> graphs, std::span<const ad::Tensor> propagations,
                   const ModelParams& model, const AnchorBank& bank, const ContrastTargets& targets,
                   ad::Adam& optimizer, double w, double lambda, double temp, MixupMode mode);

struct TrainResult {
  ModelParams model;
  TrainHistory history;
  AnchorBank bank;
};

/// Alternating schedule per epoch: stage-1 steps, discriminator refresh
/// (pseudo-labels, anchor bank, pools), stage-2 steps.
TrainResult train(std::span<const Graph> graphs, const TrainConfig& cfg);

}  // namespace denoise
