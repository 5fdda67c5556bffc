#include "denoise/anchor.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "denoise/discriminator.hpp"
#include "denoise/errors.hpp"

namespace denoise {

std::vector<std::vector<double>> node_info_scores(std::span<const NormalGraphNodes> normals,
                                                  const Matrix& graph_embeddings) {
  if (normals.empty()) fail(ErrorCode::NoNormalGraphs, "no pseudo-normal graphs to score nodes against");
  if (static_cast<std::size_t>(graph_embeddings.rows()) != normals.size()) {
    fail(ErrorCode::ShapeMismatch, "one graph embedding per normal graph is required");
  }
  // Mean of cosines = unit(z) · mean of unit graph embeddings.
  const Eigen::VectorXd gnorm = graph_embeddings.rowwise().norm().cwiseMax(ad::kEps);
  const Matrix gunit = graph_embeddings.array().colwise() / gnorm.array();
  const Eigen::RowVectorXd centroid = gunit.colwise().mean();

  std::vector<std::vector<double>> out;
  out.reserve(normals.size());
  for (const auto& g : normals) {
    if (g.nodes.cols() != graph_embeddings.cols()) fail(ErrorCode::ShapeMismatch, "node/graph embedding width differ");
    const Eigen::VectorXd nnorm = g.nodes.rowwise().norm().cwiseMax(ad::kEps);
    const Eigen::VectorXd s = (g.nodes * centroid.transpose()).cwiseQuotient(nnorm);
    out.emplace_back(s.data(), s.data() + s.size());
  }
  return out;
}

AnchorBank select_topk_nodes(std::span<const std::vector<double>> scores, std::span<const NormalGraphNodes> normals,
                             std::size_t k) {
  if (k < 1) fail(ErrorCode::InvalidConfig, "k must be >= 1");
  if (scores.size() != normals.size()) fail(ErrorCode::ShapeMismatch, "scores and graphs differ in count");

  struct Candidate {
    double score;
    std::size_t graph_id;
    std::size_t node;
    std::size_t slot;
  };
  std::vector<Candidate> all;
  Eigen::Index width = 0;
  for (std::size_t s = 0; s < normals.size(); ++s) {
    if (scores[s].size() != static_cast<std::size_t>(normals[s].nodes.rows())) {
      fail(ErrorCode::ShapeMismatch, "score count differs from node count");
    }
    width = normals[s].nodes.cols();
    for (std::size_t i = 0; i < scores[s].size(); ++i) all.push_back({scores[s][i], normals[s].graph_id, i, s});
  }
  const auto take = std::min(k, all.size());
  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.graph_id, a.node) < std::tie(b.graph_id, b.node);
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), better);

  AnchorBank bank;
  bank.rows.resize(static_cast<Eigen::Index>(take), width);
  for (std::size_t r = 0; r < take; ++r) {
    const auto& c = all[r];
    bank.rows.row(static_cast<Eigen::Index>(r)) = normals[c.slot].nodes.row(static_cast<Eigen::Index>(c.node));
    bank.source.emplace_back(c.graph_id, c.node);
  }
  return bank;
}

ad::Tensor mixup_fuse(const ad::Tensor& z_node, const AnchorBank& bank, double lambda, MixupMode mode) {
  if (bank.empty()) fail(ErrorCode::EmptyBank, "anchor bank is empty");
  if (bank.rows.cols() != z_node.cols()) fail(ErrorCode::ShapeMismatch, "bank width differs from embedding width");
  if (lambda == 1.0) return z_node;
  auto b = ad::Tensor::constant(bank.rows);
  auto t = ad::matmul(z_node, ad::transpose(b));
  if (mode == MixupMode::SoftmaxNormalized) t = ad::softmax_rows(t);
  auto mixed = ad::matmul(t, b);
  return ad::add(ad::scale(z_node, lambda), ad::scale(mixed, 1.0 - lambda));
}

double draw_lambda(double lo, double hi, Rng& rng) {
  if (!(lo <= hi) || lo < 0.0 || hi > 1.0) fail(ErrorCode::InvalidConfig, "lambda interval must satisfy 0 <= lo <= hi <= 1");
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

ad::Tensor mixup_fuse(const ad::Tensor& z_node, const AnchorBank& bank, double lambda_lo, double lambda_hi, Rng& rng,
                      MixupMode mode) {
  return mixup_fuse(z_node, bank, draw_lambda(lambda_lo, lambda_hi, rng), mode);
}

namespace {

std::vector<std::size_t> draw(std::vector<std::size_t> region, std::size_t k, bool& with_replacement, Rng& rng) {
  std::vector<std::size_t> out;
  if (region.size() >= k) {
    std::shuffle(region.begin(), region.end(), rng);
    out.assign(region.begin(), region.begin() + static_cast<std::ptrdiff_t>(k));
    with_replacement = false;
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, region.size() - 1);
    for (std::size_t i = 0; i < k; ++i) out.push_back(region[pick(rng)]);
    with_replacement = true;
  }
  return out;
}

}  // namespace

SamplePools sample_pools(std::span<const double> eta, double beta1, double beta2, std::size_t k_samples, Rng& rng) {
  if (!(beta2 > 0.0 && beta2 < beta1 && beta1 < 1.0)) fail(ErrorCode::InvalidConfig, "need 0 < beta2 < beta1 < 1");
  if (k_samples < 1) fail(ErrorCode::InvalidConfig, "K must be >= 1");
  const double hi = quantile(eta, beta1);
  const double lo = quantile(eta, beta2);
  std::vector<std::size_t> high;
  std::vector<std::size_t> low;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta[i] > hi) high.push_back(i);
    if (eta[i] < lo) low.push_back(i);
  }
  if (high.empty() || low.empty()) fail(ErrorCode::DegeneratePools, "a similarity region is empty");

  SamplePools pools;
  pools.beta1 = beta1;
  pools.beta2 = beta2;
  pools.positives = draw(std::move(high), k_samples, pools.positives_with_replacement, rng);
  pools.negatives = draw(std::move(low), k_samples, pools.negatives_with_replacement, rng);
  return pools;
}

}  // namespace denoise
