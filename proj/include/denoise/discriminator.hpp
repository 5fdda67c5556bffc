#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "denoise/graph.hpp"

namespace denoise {

/// η_i: mean cosine similarity of row i against every other row.
std::vector<double> graph_similarity_scores(const Matrix& z_graphs);

/// Lower-tail empirical quantile with linear interpolation between order
/// statistics (q = 0 gives the minimum, q = 1 the maximum).
double quantile(std::span<const double> values, double q);

struct PseudoLabels {
  std::vector<double> eta;
  double threshold = 0.0;
  std::vector<int> labels;  // 1 = suspected anomaly (η below threshold)
  double alpha = 0.0;

  std::size_t flagged() const;
  std::vector<std::size_t> normal_indices() const;
};

PseudoLabels assign_pseudo_labels(std::span<const double> eta, double alpha);

}  // namespace denoise
