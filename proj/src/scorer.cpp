#include "denoise/scorer.hpp"

#include <cmath>

#include "denoise/adam.hpp"
#include "denoise/errors.hpp"
#include "denoise/rng.hpp"

namespace denoise {

ReconErrors reconstruction_errors(const Graph& g, const ModelParams& model, double tau_exp) {
  const auto frozen = model.frozen();
  const Matrix adj = g.adjacency();
  auto prop = ad::Tensor::constant(normalize_adjacency(adj));
  auto x = ad::Tensor::constant(g.attrs());
  auto z = encode(x, prop, frozen.encoder);
  auto a_hat = decode_structure(z, frozen.decoder, prop);
  auto x_hat = decode_attributes(z, frozen.decoder, prop);
  return to_recon_errors(feature_loss(x, x_hat), structure_loss(adj, a_hat, tau_exp));
}

AggErrorVector aggregate(const ReconErrors& errors) {
  auto stats = [](const std::vector<double>& v) {
    if (v.empty()) fail(ErrorCode::EmptyGraph, "no per-node errors to aggregate");
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    return std::pair{m, std::sqrt(var / static_cast<double>(v.size()))};
  };
  const auto [fm, fs] = stats(errors.feature_per_node);
  const auto [sm, ss] = stats(errors.structure_per_node);
  return {{fm, sm, fs, ss}};
}

AggErrorVector agg_error_vector(const Graph& g, const ModelParams& model, double tau_exp) {
  return aggregate(reconstruction_errors(g, model, tau_exp));
}

namespace {

Matrix head_inputs(std::span<const AggErrorVector> vs, const ScoreHead& head) {
  Matrix m(static_cast<Eigen::Index>(vs.size()), 4);
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (int j = 0; j < 4; ++j) {
      const double z = vs[i].z[j];
      m(static_cast<Eigen::Index>(i), j) = head.standardized ? (z - head.mu[j]) / std::sqrt(head.sigma2[j]) : z;
    }
  }
  return m;
}

Matrix glorot(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < fan_in; ++i) {
    for (Eigen::Index j = 0; j < fan_out; ++j) w(i, j) = dist(rng);
  }
  return w;
}

}  // namespace

std::array<double, 4> ScoreHead::reconstruct(const AggErrorVector& v) const {
  if (!fitted) fail(ErrorCode::UnfittedHead, "score head has not been fitted");
  const AggErrorVector one[] = {v};
  const Matrix u = head_inputs(one, *this);
  const Matrix hidden = ((u * w1).rowwise() + b1.row(0)).cwiseMax(0.0);
  const Matrix out = (hidden * w2).rowwise() + b2.row(0);
  std::array<double, 4> r{};
  for (int j = 0; j < 4; ++j) r[j] = standardized ? mu[j] + std::sqrt(sigma2[j]) * out(0, j) : out(0, j);
  return r;
}

ScoreHead fit_score_head(std::span<const AggErrorVector> train_vectors, const ScoreHeadConfig& cfg) {
  if (train_vectors.size() < 2) fail(ErrorCode::TooFewVectors, "score head needs at least two training vectors");
  if (cfg.hidden < 1) fail(ErrorCode::InvalidConfig, "score head hidden width must be >= 1");

  ScoreHead head;
  head.normalizer = cfg.normalizer;
  head.standardized = cfg.standardize_inputs;
  const auto n = static_cast<double>(train_vectors.size());
  for (int j = 0; j < 4; ++j) {
    double m = 0.0;
    for (const auto& v : train_vectors) m += v.z[j];
    m /= n;
    double var = 0.0;
    for (const auto& v : train_vectors) var += (v.z[j] - m) * (v.z[j] - m);
    head.mu[j] = m;
    head.sigma2[j] = std::max(var / n, ad::kEps);
  }

  Rng rng(cfg.seed);
  const auto h = static_cast<Eigen::Index>(cfg.hidden);
  auto w1 = ad::Tensor::parameter(glorot(4, h, rng));
  auto b1 = ad::Tensor::parameter(Matrix::Zero(1, h));
  auto w2 = ad::Tensor::parameter(glorot(h, 4, rng));
  auto b2 = ad::Tensor::parameter(Matrix::Zero(1, 4));
  ad::Adam opt({w1, b1, w2, b2}, {.lr = cfg.lr});

  auto target = ad::Tensor::constant(head_inputs(train_vectors, head));
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    opt.zero_grad();
    auto hidden = ad::relu(ad::add(ad::matmul(target, w1), b1));
    auto out = ad::add(ad::matmul(hidden, w2), b2);
    auto diff = ad::sub(out, target);
    ad::backward(ad::mean(ad::mul(diff, diff)));
    opt.step();
  }
  head.w1 = w1.value();
  head.b1 = b1.value();
  head.w2 = w2.value();
  head.b2 = b2.value();
  head.fitted = true;
  return head;
}

double anomaly_score(const AggErrorVector& v, const ScoreHead& head) {
  const auto r = head.reconstruct(v);
  double s = 0.0;
  for (int j = 0; j < 4; ++j) {
    const double d = r[j] - v.z[j];
    const double denom = head.normalizer == ScoreNormalizer::Variance ? head.sigma2[j] : std::sqrt(head.sigma2[j]);
    s += d * d / denom;
  }
  return s / 4.0;
}

}  // namespace denoise
