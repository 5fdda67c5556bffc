#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "denoise/graph.hpp"
#include "denoise/rng.hpp"
#include "denoise/tensor.hpp"

namespace denoise {

/// Node embeddings of one pseudo-normal graph, tagged with its dataset-level id.
struct NormalGraphNodes {
  std::size_t graph_id = 0;
  Matrix nodes;  // n×d
};

/// I(z) for every node of every normal graph: mean cosine between the node
/// embedding and each normal graph-level embedding. `graph_embeddings` has
/// one row per entry of `normals`.
std::vector<std::vector<double>> node_info_scores(std::span<const NormalGraphNodes> normals,
                                                  const Matrix& graph_embeddings);

struct AnchorBank {
  Matrix rows;                                           // k×d
  std::vector<std::pair<std::size_t, std::size_t>> source;  // (graph id, node id)

  std::size_t k() const { return static_cast<std::size_t>(rows.rows()); }
  bool empty() const { return rows.rows() == 0; }
};

/// The k highest-scoring node embeddings across all normal graphs. Ties go to
/// the smaller (graph id, node id). If fewer than k nodes exist all are taken.
AnchorBank select_topk_nodes(std::span<const std::vector<double>> scores, std::span<const NormalGraphNodes> normals,
                             std::size_t k);

enum class MixupMode { SoftmaxNormalized, Verbatim };

/// Ẑ = λZ + (1-λ)·T·B with T = ZBᵀ (row-softmaxed in SoftmaxNormalized mode).
/// The bank B is a constant; gradient flows to `z_node` only.
ad::Tensor mixup_fuse(const ad::Tensor& z_node, const AnchorBank& bank, double lambda, MixupMode mode);

/// Draws λ ~ Uniform[lo, hi] once, then fuses.
ad::Tensor mixup_fuse(const ad::Tensor& z_node, const AnchorBank& bank, double lambda_lo, double lambda_hi,
                      Rng& rng, MixupMode mode);

double draw_lambda(double lo, double hi, Rng& rng);

struct SamplePools {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  double beta1 = 0.0;
  double beta2 = 0.0;
  bool positives_with_replacement = false;
  bool negatives_with_replacement = false;
};

/// Positives: η above the β1 quantile; negatives: η below the β2 quantile.
/// K from each region, without replacement unless the region is smaller than K.
SamplePools sample_pools(std::span<const double> eta, double beta1, double beta2, std::size_t k_samples, Rng& rng);

}  // namespace denoise
