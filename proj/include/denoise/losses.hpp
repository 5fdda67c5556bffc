#pragma once

#include <vector>

#include "denoise/tensor.hpp"

namespace denoise {

/// Per-node reconstruction errors plus their means. `per_node` is n×1 and
/// differentiable; `total` is the 1×1 mean.
struct LossTerm {
  ad::Tensor per_node;
  ad::Tensor total;
};

struct ReconErrors {
  std::vector<double> feature_per_node;    // 1 - cosine, in [0, 2]
  std::vector<double> structure_per_node;  // row mean of weighted BCE
  double feature_total = 0.0;
  double structure_total = 0.0;
};

/// Mean over nodes of 1 - cos(X_i, X̂_i). Rows where either side has zero
/// norm contribute 0 but still count toward n.
LossTerm feature_loss(const ad::Tensor& x, const ad::Tensor& x_hat);

/// Imbalance weight ω = (ΣA / Σ(1-A))^tau_exp; 1 when the graph has no edges.
double structure_weight(const Matrix& adj, double tau_exp);

/// -(ω A log Â + (1-A) log(1-Â)) averaged over the n² entries; per-node
/// values are row means. `adj` must be binary.
LossTerm structure_loss(const Matrix& adj, const ad::Tensor& a_hat, double tau_exp);

/// (1/M) Σ_i log(ℓ⁺_i / (ℓ⁺_i + ℓ⁻_i)) with ℓ± = Σ_j exp(cos(ẑ_i, anchor_j) / temp).
/// Anchors are constants; only `z_hat` carries gradient.
ad::Tensor contrastive_loss(const ad::Tensor& z_hat, const Matrix& positives, const Matrix& negatives, double temp);

ReconErrors to_recon_errors(const LossTerm& feature, const LossTerm& structure);

}  // namespace denoise
