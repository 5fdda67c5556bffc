#include "denoise/model.hpp"

#include <cmath>

#include "denoise/errors.hpp"

namespace denoise {

namespace {

ad::Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
  }
  return ad::Tensor::parameter(std::move(w));
}

ModelParams map_params(const ModelParams& src, ad::Tensor (*fn)(const ad::Tensor&)) {
  ModelParams out;
  for (const auto& w : src.encoder.weights) out.encoder.weights.push_back(fn(w));
  out.decoder.structure_conv = fn(src.decoder.structure_conv);
  out.decoder.structure_out = fn(src.decoder.structure_out);
  out.decoder.attribute_conv = fn(src.decoder.attribute_conv);
  out.decoder.attribute_out = fn(src.decoder.attribute_out);
  return out;
}

}  // namespace

std::vector<ad::Tensor> ModelParams::decoder_params() const {
  return {decoder.structure_conv, decoder.structure_out, decoder.attribute_conv, decoder.attribute_out};
}

std::vector<ad::Tensor> ModelParams::all() const {
  auto out = encoder.weights;
  for (auto& t : decoder_params()) out.push_back(t);
  return out;
}

std::size_t ModelParams::in_dim() const { return static_cast<std::size_t>(encoder.weights.front().rows()); }
std::size_t ModelParams::hidden_dim() const { return static_cast<std::size_t>(encoder.weights.back().cols()); }

ModelParams ModelParams::frozen() const {
  return map_params(*this, [](const ad::Tensor& t) { return t.detach(); });
}

ModelParams ModelParams::clone() const {
  return map_params(*this, [](const ad::Tensor& t) { return ad::Tensor::parameter(t.value()); });
}

bool ModelParams::values_equal(const ModelParams& other) const {
  const auto a = all();
  const auto b = other.all();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols() || a[i].value() != b[i].value()) return false;
  }
  return true;
}

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.layers < 1) fail(ErrorCode::InvalidConfig, "encoder needs at least one layer");
  if (cfg.in_dim < 1 || cfg.hidden < 1) fail(ErrorCode::InvalidConfig, "model dimensions must be positive");
  Rng rng(seed);
  ModelParams p;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    p.encoder.weights.push_back(glorot(l == 0 ? cfg.in_dim : cfg.hidden, cfg.hidden, rng));
  }
  p.decoder.structure_conv = glorot(cfg.hidden, cfg.hidden, rng);
  p.decoder.structure_out = glorot(cfg.hidden, cfg.hidden, rng);
  p.decoder.attribute_conv = glorot(cfg.hidden, cfg.hidden, rng);
  p.decoder.attribute_out = glorot(cfg.hidden, cfg.in_dim, rng);
  return p;
}

Matrix perturb_edges(const Graph& g, double drop_rate, Rng& rng) {
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) fail(ErrorCode::InvalidConfig, "drop_rate must lie in [0, 1)");
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Matrix a = Matrix::Zero(n, n);
  std::bernoulli_distribution drop(drop_rate);
  for (auto [u, v] : g.edges()) {
    if (drop_rate > 0.0 && drop(rng)) continue;
    a(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = 1.0;
    a(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) = 1.0;
  }
  return a;
}

Matrix normalize_adjacency(const Matrix& adj) {
  if (adj.rows() != adj.cols()) fail(ErrorCode::ShapeMismatch, "adjacency must be square");
  Matrix a = adj;
  a.diagonal().array() += 1.0;
  const Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

ad::Tensor encode(const ad::Tensor& attrs, const ad::Tensor& propagation, const EncoderParams& p) {
  if (propagation.rows() != attrs.rows() || propagation.cols() != attrs.rows()) {
    fail(ErrorCode::ShapeMismatch, "propagation matrix does not match node count");
  }
  if (p.weights.empty()) fail(ErrorCode::InvalidConfig, "encoder has no layers");
  ad::Tensor h = attrs;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    h = ad::matmul(ad::matmul(propagation, h), p.weights[l]);
    if (l + 1 < p.weights.size()) h = ad::relu(h);
  }
  return h;
}

ad::Tensor encode(const Matrix& attrs, const Matrix& adj, const EncoderParams& p) {
  return encode(ad::Tensor::constant(attrs), ad::Tensor::constant(normalize_adjacency(adj)), p);
}

ad::Tensor decode_structure(const ad::Tensor& z_node, const DecoderParams& p, const ad::Tensor& propagation) {
  auto h = ad::matmul(ad::relu(ad::matmul(ad::matmul(propagation, z_node), p.structure_conv)), p.structure_out);
  auto gram = ad::matmul(h, ad::transpose(h));
  // GEMM blocking can break bitwise symmetry; average with the transpose.
  auto logits = ad::scale(ad::add(gram, ad::transpose(gram)), 0.5);
  return ad::clamp(ad::sigmoid(logits), ad::kEps, 1.0 - ad::kEps);
}

ad::Tensor decode_attributes(const ad::Tensor& z_node, const DecoderParams& p, const ad::Tensor& propagation) {
  return ad::matmul(ad::relu(ad::matmul(ad::matmul(propagation, z_node), p.attribute_conv)), p.attribute_out);
}

ad::Tensor readout(const ad::Tensor& z_node) {
  if (z_node.rows() == 0) fail(ErrorCode::EmptyGraph, "readout of a graph with no nodes");
  return ad::colmean(z_node);
}

}  // namespace denoise
