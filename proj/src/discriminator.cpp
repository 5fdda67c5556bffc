#include "denoise/discriminator.hpp"

#include <algorithm>
#include <cmath>

#include "denoise/errors.hpp"
#include "denoise/tensor.hpp"

namespace denoise {

std::vector<double> graph_similarity_scores(const Matrix& z_graphs) {
  const auto m = z_graphs.rows();
  if (m < 2) fail(ErrorCode::TooFewGraphs, "similarity scores need at least two graphs");
  const Eigen::VectorXd norms = z_graphs.rowwise().norm().cwiseMax(ad::kEps);
  const Matrix unit = z_graphs.array().colwise() / norms.array();
  const Matrix sim = unit * unit.transpose();
  std::vector<double> eta(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    eta[static_cast<std::size_t>(i)] = (sim.row(i).sum() - sim(i, i)) / static_cast<double>(m - 1);
  }
  return eta;
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) fail(ErrorCode::EmptyVector, "quantile of an empty vector");
  if (!(q >= 0.0 && q <= 1.0)) fail(ErrorCode::InvalidConfig, "quantile level must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::size_t PseudoLabels::flagged() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

std::vector<std::size_t> PseudoLabels::normal_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) out.push_back(i);
  }
  return out;
}

PseudoLabels assign_pseudo_labels(std::span<const double> eta, double alpha) {
  PseudoLabels out;
  out.eta.assign(eta.begin(), eta.end());
  out.alpha = alpha;
  out.threshold = quantile(eta, alpha);
  out.labels.reserve(eta.size());
  for (double e : eta) out.labels.push_back(e < out.threshold ? 1 : 0);
  return out;
}

}  // namespace denoise
