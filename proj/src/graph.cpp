#include "denoise/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "denoise/errors.hpp"
#include "denoise/rng.hpp"

namespace denoise {

Graph Graph::build(std::size_t n, std::span<const Edge> edges, Matrix attrs, GraphLabel label) {
  if (n == 0) fail(ErrorCode::EmptyGraph, "graph must have at least one node");
  if (static_cast<std::size_t>(attrs.rows()) != n) {
    fail(ErrorCode::ShapeMismatch, "attribute rows " + std::to_string(attrs.rows()) + " != node count " +
                                       std::to_string(n));
  }
  if (attrs.cols() < 1) fail(ErrorCode::ShapeMismatch, "attribute width must be >= 1");

  Graph g;
  g.n_ = n;
  g.edges_.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) {
      fail(ErrorCode::IndexOutOfRange,
           "edge (" + std::to_string(u) + "," + std::to_string(v) + ") with n=" + std::to_string(n));
    }
    if (u == v) fail(ErrorCode::SelfLoop, "self-loop on node " + std::to_string(u));
    g.edges_.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());
  g.attrs_ = std::move(attrs);
  g.label_ = label;
  return g;
}

Matrix Graph::adjacency() const {
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
  for (auto [u, v] : edges_) {
    a(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = 1.0;
    a(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) = 1.0;
  }
  return a;
}

std::vector<std::size_t> Graph::degrees() const {
  std::vector<std::size_t> deg(n_, 0);
  for (auto [u, v] : edges_) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

bool Graph::operator==(const Graph& other) const {
  return n_ == other.n_ && label_ == other.label_ && edges_ == other.edges_ &&
         attrs_.rows() == other.attrs_.rows() && attrs_.cols() == other.attrs_.cols() &&
         attrs_ == other.attrs_;
}

ClassCounts Dataset::class_counts() const {
  ClassCounts c;
  for (const auto& g : graphs) (g.is_anomalous() ? c.anomalies : c.normals)++;
  return c;
}

Dataset make_dataset(std::string name, std::vector<Graph> graphs) {
  if (!graphs.empty()) {
    const auto d = graphs.front().attr_dim();
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      if (graphs[i].attr_dim() != d) {
        fail(ErrorCode::ShapeMismatch, "graph " + std::to_string(i) + " has attr_dim " +
                                           std::to_string(graphs[i].attr_dim()) + ", expected " +
                                           std::to_string(d));
      }
    }
  }
  return Dataset{std::move(name), std::move(graphs)};
}

std::vector<std::size_t> invert_permutation(std::span<const std::size_t> p) {
  std::vector<std::size_t> inv(p.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] >= p.size() || inv[p[i]] != p.size()) {
      fail(ErrorCode::NotAPermutation, "entry " + std::to_string(i) + " breaks bijectivity");
    }
    inv[p[i]] = i;
  }
  return inv;
}

Graph permute_nodes(const Graph& g, std::span<const std::size_t> p) {
  if (p.size() != g.num_nodes()) {
    fail(ErrorCode::NotAPermutation,
         "permutation length " + std::to_string(p.size()) + " != n=" + std::to_string(g.num_nodes()));
  }
  invert_permutation(p);  // validates

  std::vector<Edge> edges;
  edges.reserve(g.num_edges());
  for (auto [u, v] : g.edges()) edges.emplace_back(p[u], p[v]);

  Matrix attrs(g.attrs().rows(), g.attrs().cols());
  for (std::size_t i = 0; i < p.size(); ++i) {
    attrs.row(static_cast<Eigen::Index>(p[i])) = g.attrs().row(static_cast<Eigen::Index>(i));
  }
  return Graph::build(g.num_nodes(), edges, std::move(attrs), g.label());
}

Graph degree_features(const Graph& g, std::size_t max_deg) {
  if (max_deg < 1) fail(ErrorCode::InvalidConfig, "max_deg must be >= 1");
  const auto deg = g.degrees();
  Matrix attrs = Matrix::Zero(static_cast<Eigen::Index>(g.num_nodes()), static_cast<Eigen::Index>(max_deg + 1));
  for (std::size_t i = 0; i < deg.size(); ++i) {
    attrs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(std::min(deg[i], max_deg))) = 1.0;
  }
  return Graph::build(g.num_nodes(), g.edges(), std::move(attrs), g.label());
}

namespace {

Graph erdos_renyi(std::size_t n, double p, double shift, std::size_t dim, GraphLabel label, Rng& rng) {
  std::bernoulli_distribution coin(p);
  std::normal_distribution<double> gauss(shift, 1.0);
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (coin(rng)) edges.emplace_back(u, v);
    }
  }
  Matrix attrs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < attrs.rows(); ++i) {
    for (Eigen::Index j = 0; j < attrs.cols(); ++j) attrs(i, j) = gauss(rng);
  }
  return Graph::build(n, edges, std::move(attrs), label);
}

}  // namespace

Dataset gen_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  auto in_open_unit = [](double p) { return p > 0.0 && p < 1.0; };
  if (!in_open_unit(cfg.p_normal) || !in_open_unit(cfg.p_anom)) {
    fail(ErrorCode::InvalidConfig, "edge probabilities must lie in (0, 1)");
  }
  if (!(cfg.anom_frac >= 0.0 && cfg.anom_frac < 1.0)) fail(ErrorCode::InvalidConfig, "anom_frac must lie in [0, 1)");
  if (cfg.n_graphs == 0) fail(ErrorCode::InvalidConfig, "n_graphs must be positive");
  if (cfg.nodes_lo < 1 || cfg.nodes_hi < cfg.nodes_lo) fail(ErrorCode::InvalidConfig, "need 1 <= nodes_lo <= nodes_hi");
  if (cfg.attr_dim < 1) fail(ErrorCode::InvalidConfig, "attr_dim must be >= 1");
  if (!std::isfinite(cfg.attr_shift)) fail(ErrorCode::InvalidConfig, "attr_shift must be finite");

  Rng rng(seed);
  const auto n_anom = static_cast<std::size_t>(std::llround(cfg.anom_frac * static_cast<double>(cfg.n_graphs)));
  std::vector<GraphLabel> labels(cfg.n_graphs, GraphLabel::Normal);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_anom), GraphLabel::Anomalous);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::uniform_int_distribution<std::size_t> size_dist(cfg.nodes_lo, cfg.nodes_hi);
  std::vector<Graph> graphs;
  graphs.reserve(cfg.n_graphs);
  for (auto label : labels) {
    const auto n = size_dist(rng);
    const bool anom = label == GraphLabel::Anomalous;
    graphs.push_back(erdos_renyi(n, anom ? cfg.p_anom : cfg.p_normal, anom ? cfg.attr_shift : 0.0, cfg.attr_dim,
                                 label, rng));
  }
  return make_dataset("SYNTH", std::move(graphs));
}

}  // namespace denoise
