#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "denoise/graph.hpp"

namespace denoise {

/// A directory holding the TUDataset flat files DS_A.txt, DS_graph_indicator.txt,
/// and optionally DS_graph_labels.txt, DS_node_attributes.txt, DS_node_labels.txt.
struct TuSourceDir {
  std::filesystem::path root;
  std::string name;  // the DS prefix

  /// Uses the directory's last component as the prefix.
  static TuSourceDir from_directory(const std::filesystem::path& root);
  std::filesystem::path file(const std::string& suffix) const;
};

struct AnomalyClassPolicy {
  enum class Kind { Minority, Explicit };
  Kind kind = Kind::Minority;
  long class_id = 0;

  static AnomalyClassPolicy minority() { return {}; }
  static AnomalyClassPolicy explicit_class(long id) { return {Kind::Explicit, id}; }
};

/// Which per-node file becomes the attribute matrix. Whatever is preferred
/// but missing falls back to the other file, then to degree one-hot.
enum class NodeFeatures {
  Labels,      // one-hot node labels
  Attributes,  // DS_node_attributes.txt
  Both,        // attributes followed by one-hot labels
};

struct TuParseOptions {
  AnomalyClassPolicy policy;
  NodeFeatures features = NodeFeatures::Labels;
  std::size_t max_degree = kDefaultMaxDegree;
};

struct TuParseStats {
  std::size_t directed_lines = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t indicator_lines = 0;
  std::string feature_source;
};

Dataset parse_tudataset(const TuSourceDir& src, const TuParseOptions& options = {},
                        TuParseStats* stats = nullptr);

/// Writes a dataset in TUDataset layout (both edge directions, 1-based ids,
/// graph label 1 = anomalous, attributes with round-trip precision).
void write_tudataset(const Dataset& d, const std::filesystem::path& dir, const std::string& name);

struct ClassSummary {
  std::size_t count = 0;
  double mean_nodes = 0.0;
  double mean_edges = 0.0;           // undirected
  double mean_directed_edges = 0.0;  // adjacency nonzeros, as TU statistics count them
};

struct ValidationReport {
  std::size_t graph_count = 0;
  std::size_t attr_dim = 0;
  ClassCounts class_counts;
  ClassSummary all;
  ClassSummary normal;
  ClassSummary anomalous;
  std::vector<std::size_t> non_finite_graphs;
  std::vector<std::size_t> edgeless_graphs;

  bool ok() const { return non_finite_graphs.empty() && graph_count > 0; }
};

ValidationReport validate_dataset(const Dataset& d);
void write_report_csv(const ValidationReport& r, std::ostream& os);

}  // namespace denoise
