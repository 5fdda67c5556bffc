#include "denoise/losses.hpp"

#include <cmath>

#include "denoise/errors.hpp"

namespace denoise {

LossTerm feature_loss(const ad::Tensor& x, const ad::Tensor& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) {
    fail(ErrorCode::ShapeMismatch, "feature_loss operands differ in shape");
  }
  if (x.rows() == 0) fail(ErrorCode::EmptyGraph, "feature_loss on zero nodes");

  const Eigen::VectorXd nx = x.value().rowwise().norm();
  const Eigen::VectorXd nh = x_hat.value().rowwise().norm();
  Matrix mask(x.rows(), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) mask(i, 0) = (nx(i) > ad::kEps && nh(i) > ad::kEps) ? 1.0 : 0.0;

  auto cos = ad::cosine_rows(x, x_hat);
  auto err = ad::mul(ad::Tensor::constant(mask), ad::sub(ad::Tensor::constant(mask), cos));
  return {err, ad::mean(err)};
}

double structure_weight(const Matrix& adj, double tau_exp) {
  const double ones = adj.sum();
  const double zeros = static_cast<double>(adj.size()) - ones;
  if (ones == 0.0 || zeros == 0.0) return 1.0;
  return std::pow(ones / zeros, tau_exp);
}

LossTerm structure_loss(const Matrix& adj, const ad::Tensor& a_hat, double tau_exp) {
  if (adj.rows() != adj.cols() || adj.rows() != a_hat.rows() || adj.cols() != a_hat.cols()) {
    fail(ErrorCode::ShapeMismatch, "structure_loss operands differ in shape");
  }
  if (!((adj.array() == 0.0) || (adj.array() == 1.0)).all()) {
    fail(ErrorCode::NonBinaryAdjacency, "adjacency target must be 0/1");
  }
  const double omega = structure_weight(adj, tau_exp);
  const Matrix ones = Matrix::Ones(adj.rows(), adj.cols());
  auto pos = ad::mul(ad::Tensor::constant(omega * adj), ad::log(a_hat));
  auto negt = ad::mul(ad::Tensor::constant(ones - adj), ad::log(ad::sub(ad::Tensor::constant(ones), a_hat)));
  auto per_node = ad::neg(ad::rowmean(ad::add(pos, negt)));
  return {per_node, ad::mean(per_node)};
}

ad::Tensor contrastive_loss(const ad::Tensor& z_hat, const Matrix& positives, const Matrix& negatives, double temp) {
  if (positives.rows() == 0 || negatives.rows() == 0) fail(ErrorCode::EmptyAnchorSet, "contrastive anchors are empty");
  if (!(temp > 0.0)) fail(ErrorCode::InvalidConfig, "temperature must be positive");
  if (positives.cols() != z_hat.cols() || negatives.cols() != z_hat.cols()) {
    fail(ErrorCode::ShapeMismatch, "anchor width differs from embedding width");
  }
  auto q = ad::l2_normalize_rows(z_hat);
  auto affinity = [&](const Matrix& anchors) {
    auto a = ad::Tensor::constant(anchors).detach();
    auto unit = ad::l2_normalize_rows(a);
    return ad::rowsum(ad::exp(ad::scale(ad::matmul(q, ad::transpose(unit)), 1.0 / temp)));
  };
  auto lp = affinity(positives);
  auto ln = affinity(negatives);
  auto ratio = ad::sub(ad::log(lp), ad::log(ad::add(lp, ln)));
  return ad::mean(ratio);
}

ReconErrors to_recon_errors(const LossTerm& feature, const LossTerm& structure) {
  ReconErrors r;
  const auto& f = feature.per_node.value();
  const auto& s = structure.per_node.value();
  r.feature_per_node.assign(f.data(), f.data() + f.size());
  r.structure_per_node.assign(s.data(), s.data() + s.size());
  r.feature_total = feature.total.item();
  r.structure_total = structure.total.item();
  return r;
}

}  // namespace denoise
