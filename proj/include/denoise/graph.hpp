#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace denoise {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Edge = std::pair<std::size_t, std::size_t>;

enum class GraphLabel : int { Normal = 0, Anomalous = 1 };

/// Undirected simple graph with a dense node-attribute matrix.
///
/// Edges are kept canonical: (u, v) with u < v, sorted, unique. The dense
/// adjacency is only materialized on request.
class Graph {
 public:
  /// Validates and canonicalizes. Accepts either orientation of each edge
  /// and drops duplicate pairs; rejects self-loops and out-of-range ids.
  static Graph build(std::size_t n, std::span<const Edge> edges, Matrix attrs, GraphLabel label);

  std::size_t num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t attr_dim() const { return static_cast<std::size_t>(attrs_.cols()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Matrix& attrs() const { return attrs_; }
  GraphLabel label() const { return label_; }
  bool is_anomalous() const { return label_ == GraphLabel::Anomalous; }

  Matrix adjacency() const;
  std::vector<std::size_t> degrees() const;

  bool operator==(const Graph& other) const;

 private:
  Graph() = default;

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  Matrix attrs_;
  GraphLabel label_ = GraphLabel::Normal;
};

struct ClassCounts {
  std::size_t normals = 0;
  std::size_t anomalies = 0;
  bool operator==(const ClassCounts&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;

  std::size_t size() const { return graphs.size(); }
  std::size_t attr_dim() const { return graphs.empty() ? 0 : graphs.front().attr_dim(); }
  ClassCounts class_counts() const;
};

/// Builds a dataset and checks that every graph shares the same attribute width.
Dataset make_dataset(std::string name, std::vector<Graph> graphs);

/// Relabels node i as p[i].
Graph permute_nodes(const Graph& g, std::span<const std::size_t> p);
std::vector<std::size_t> invert_permutation(std::span<const std::size_t> p);

/// Replaces attributes by one-hot(min(degree, max_deg)), width max_deg + 1.
Graph degree_features(const Graph& g, std::size_t max_deg);

inline constexpr std::size_t kDefaultMaxDegree = 64;

struct SynthConfig {
  std::size_t n_graphs = 300;
  std::size_t nodes_lo = 10;
  std::size_t nodes_hi = 20;
  double p_normal = 0.1;
  double p_anom = 0.3;
  double attr_shift = 1.0;
  double anom_frac = 0.2;
  std::size_t attr_dim = 8;
};

/// Erdős–Rényi normals with unit-Gaussian attributes; anomalies use p_anom
/// and attributes shifted by attr_shift. round(anom_frac * n_graphs) graphs
/// are anomalous, placed at seeded random positions.
Dataset gen_synthetic(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace denoise
