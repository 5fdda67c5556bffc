#include "denoise/tu_parser.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "denoise/errors.hpp"

namespace denoise {

TuSourceDir TuSourceDir::from_directory(const std::filesystem::path& root) {
  auto p = root;
  if (!p.has_filename()) p = p.parent_path();
  return {root, p.filename().string()};
}

std::filesystem::path TuSourceDir::file(const std::string& suffix) const { return root / (name + "_" + suffix + ".txt"); }

namespace {

// Splits on commas and whitespace; empty fields are dropped.
std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ',' || std::isspace(static_cast<unsigned char>(line[i])))) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ',' && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) fail(ErrorCode::MissingFile, path.string());
  }

  // Returns false at EOF. Blank lines are skipped but still counted.
  bool next(std::vector<std::string_view>& tokens) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      tokens = tokenize(line_);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void malformed(const std::string& why) const {
    fail(ErrorCode::MalformedLine, path_.filename().string() + ":" + std::to_string(line_no_) + ": " + why);
  }

  long parse_long(std::string_view tok) const {
    long v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) malformed("expected integer, got '" + std::string(tok) + "'");
    return v;
  }

  double parse_double(std::string_view tok) const {
    double v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) malformed("expected real, got '" + std::string(tok) + "'");
    return v;
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

std::vector<long> read_int_column(const std::filesystem::path& path) {
  LineReader r(path);
  std::vector<long> out;
  std::vector<std::string_view> tok;
  while (r.next(tok)) {
    if (tok.size() != 1) r.malformed("expected a single integer");
    out.push_back(r.parse_long(tok[0]));
  }
  return out;
}

Matrix one_hot(const std::vector<long>& values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const auto width = static_cast<Eigen::Index>(*hi - *lo + 1);
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(values.size()), width);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), values[i] - *lo) = 1.0;
  return m;
}

}  // namespace

Dataset parse_tudataset(const TuSourceDir& src, const TuParseOptions& options, TuParseStats* stats) {
  TuParseStats local;
  auto& st = stats ? *stats : local;

  const auto a_path = src.file("A");
  const auto ind_path = src.file("graph_indicator");
  if (!std::filesystem::exists(a_path)) fail(ErrorCode::MissingFile, a_path.string());
  if (!std::filesystem::exists(ind_path)) fail(ErrorCode::MissingFile, ind_path.string());

  // Node -> graph assignment (both 1-based in the files).
  const auto indicator = read_int_column(ind_path);
  st.indicator_lines = indicator.size();
  if (indicator.empty()) fail(ErrorCode::InconsistentCounts, "graph indicator is empty");
  long max_graph = 0;
  for (std::size_t i = 0; i < indicator.size(); ++i) {
    if (indicator[i] < 1) {
      fail(ErrorCode::MalformedLine, ind_path.filename().string() + ":" + std::to_string(i + 1) + ": graph id < 1");
    }
    max_graph = std::max(max_graph, indicator[i]);
  }
  const auto n_graphs = static_cast<std::size_t>(max_graph);
  std::vector<std::size_t> sizes(n_graphs, 0);
  std::vector<std::size_t> local_id(indicator.size());
  for (std::size_t i = 0; i < indicator.size(); ++i) local_id[i] = sizes[indicator[i] - 1]++;
  for (std::size_t g = 0; g < n_graphs; ++g) {
    if (sizes[g] == 0) fail(ErrorCode::InconsistentCounts, "graph " + std::to_string(g + 1) + " has no nodes");
  }

  std::vector<std::vector<Edge>> edges(n_graphs);
  {
    LineReader r(a_path);
    std::vector<std::string_view> tok;
    while (r.next(tok)) {
      if (tok.size() != 2) r.malformed("expected 'i, j'");
      const long i = r.parse_long(tok[0]);
      const long j = r.parse_long(tok[1]);
      ++st.directed_lines;
      const auto n_nodes = static_cast<long>(indicator.size());
      if (i < 1 || j < 1 || i > n_nodes || j > n_nodes) {
        fail(ErrorCode::DanglingNodeId, "edge (" + std::to_string(i) + "," + std::to_string(j) + ") with " +
                                            std::to_string(n_nodes) + " nodes");
      }
      const auto g = indicator[i - 1];
      if (indicator[j - 1] != g) {
        fail(ErrorCode::InconsistentCounts,
             "edge (" + std::to_string(i) + "," + std::to_string(j) + ") crosses graphs");
      }
      if (i == j) {
        ++st.self_loops_dropped;
        continue;
      }
      edges[g - 1].emplace_back(local_id[i - 1], local_id[j - 1]);
    }
  }

  std::vector<long> graph_labels(n_graphs, 0);
  const auto gl_path = src.file("graph_labels");
  if (std::filesystem::exists(gl_path)) {
    graph_labels = read_int_column(gl_path);
    if (graph_labels.size() != n_graphs) {
      fail(ErrorCode::InconsistentCounts, "graph_labels has " + std::to_string(graph_labels.size()) +
                                              " lines for " + std::to_string(n_graphs) + " graphs");
    }
  }

  std::optional<Matrix> attributes;
  const auto attr_path = src.file("node_attributes");
  if (std::filesystem::exists(attr_path)) {
    LineReader r(attr_path);
    std::vector<std::vector<double>> rows;
    std::vector<std::string_view> tok;
    while (r.next(tok)) {
      if (!rows.empty() && tok.size() != rows.front().size()) r.malformed("ragged attribute row");
      std::vector<double> row;
      row.reserve(tok.size());
      for (auto t : tok) row.push_back(r.parse_double(t));
      rows.push_back(std::move(row));
    }
    if (rows.size() != indicator.size()) {
      fail(ErrorCode::InconsistentCounts, "node_attributes has " + std::to_string(rows.size()) + " rows for " +
                                              std::to_string(indicator.size()) + " nodes");
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    attributes = std::move(m);
  }

  std::optional<Matrix> label_onehot;
  const auto nl_path = src.file("node_labels");
  if (std::filesystem::exists(nl_path)) {
    const auto node_labels = read_int_column(nl_path);
    if (node_labels.size() != indicator.size()) {
      fail(ErrorCode::InconsistentCounts, "node_labels has " + std::to_string(node_labels.size()) +
                                              " lines for " + std::to_string(indicator.size()) + " nodes");
    }
    label_onehot = one_hot(node_labels);
  }

  std::optional<Matrix> features;
  switch (options.features) {
    case NodeFeatures::Labels:
      if (label_onehot) {
        features = label_onehot;
        st.feature_source = "node_labels";
      } else if (attributes) {
        features = attributes;
        st.feature_source = "node_attributes";
      }
      break;
    case NodeFeatures::Attributes:
      if (attributes) {
        features = attributes;
        st.feature_source = "node_attributes";
      } else if (label_onehot) {
        features = label_onehot;
        st.feature_source = "node_labels";
      }
      break;
    case NodeFeatures::Both:
      if (attributes && label_onehot) {
        Matrix m(attributes->rows(), attributes->cols() + label_onehot->cols());
        m << *attributes, *label_onehot;
        features = std::move(m);
        st.feature_source = "node_attributes+node_labels";
      } else if (attributes) {
        features = attributes;
        st.feature_source = "node_attributes";
      } else if (label_onehot) {
        features = label_onehot;
        st.feature_source = "node_labels";
      }
      break;
  }
  if (!features) st.feature_source = "degree";

  // Graph label -> anomaly flag.
  long anomaly_class = options.policy.class_id;
  if (options.policy.kind == AnomalyClassPolicy::Kind::Minority) {
    std::map<long, std::size_t> freq;
    for (auto l : graph_labels) ++freq[l];
    // Least frequent label; ties go to the larger label value.
    auto best = freq.begin();
    for (auto it = freq.begin(); it != freq.end(); ++it) {
      if (it->second <= best->second) best = it;
    }
    anomaly_class = freq.size() > 1 ? best->first : graph_labels.front() + 1;
  }

  // Rows of the global feature matrix belonging to each graph, in node order.
  std::vector<std::vector<Eigen::Index>> members(n_graphs);
  for (std::size_t i = 0; i < indicator.size(); ++i) members[indicator[i] - 1].push_back(static_cast<Eigen::Index>(i));

  std::vector<Graph> graphs;
  graphs.reserve(n_graphs);
  for (std::size_t g = 0; g < n_graphs; ++g) {
    const auto label = graph_labels[g] == anomaly_class ? GraphLabel::Anomalous : GraphLabel::Normal;
    if (features) {
      Matrix x(static_cast<Eigen::Index>(sizes[g]), features->cols());
      for (std::size_t r = 0; r < members[g].size(); ++r) x.row(static_cast<Eigen::Index>(r)) = features->row(members[g][r]);
      graphs.push_back(Graph::build(sizes[g], edges[g], std::move(x), label));
    } else {
      auto bare = Graph::build(sizes[g], edges[g], Matrix::Ones(static_cast<Eigen::Index>(sizes[g]), 1), label);
      graphs.push_back(degree_features(bare, options.max_degree));
    }
  }
  return make_dataset(src.name, std::move(graphs));
}

void write_tudataset(const Dataset& d, const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& suffix) {
    std::ofstream os(dir / (name + "_" + suffix + ".txt"));
    if (!os) fail(ErrorCode::Io, "cannot write " + (dir / (name + "_" + suffix + ".txt")).string());
    return os;
  };
  auto a = open("A");
  auto ind = open("graph_indicator");
  auto gl = open("graph_labels");
  auto na = open("node_attributes");
  na << std::setprecision(17);

  std::size_t offset = 1;
  for (std::size_t g = 0; g < d.graphs.size(); ++g) {
    const auto& graph = d.graphs[g];
    for (auto [u, v] : graph.edges()) {
      a << offset + u << ", " << offset + v << '\n';
      a << offset + v << ", " << offset + u << '\n';
    }
    for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
      ind << g + 1 << '\n';
      const auto row = graph.attrs().row(static_cast<Eigen::Index>(i));
      for (Eigen::Index j = 0; j < row.size(); ++j) na << (j ? ", " : "") << row(j);
      na << '\n';
    }
    gl << (graph.is_anomalous() ? 1 : 0) << '\n';
    offset += graph.num_nodes();
  }
}

namespace {

ClassSummary summarize(const Dataset& d, std::optional<GraphLabel> which) {
  ClassSummary s;
  for (const auto& g : d.graphs) {
    if (which && g.label() != *which) continue;
    ++s.count;
    s.mean_nodes += static_cast<double>(g.num_nodes());
    s.mean_edges += static_cast<double>(g.num_edges());
  }
  if (s.count) {
    s.mean_nodes /= static_cast<double>(s.count);
    s.mean_edges /= static_cast<double>(s.count);
  }
  s.mean_directed_edges = 2.0 * s.mean_edges;
  return s;
}

}  // namespace

ValidationReport validate_dataset(const Dataset& d) {
  ValidationReport r;
  r.graph_count = d.size();
  r.attr_dim = d.attr_dim();
  r.class_counts = d.class_counts();
  r.all = summarize(d, std::nullopt);
  r.normal = summarize(d, GraphLabel::Normal);
  r.anomalous = summarize(d, GraphLabel::Anomalous);
  for (std::size_t i = 0; i < d.graphs.size(); ++i) {
    if (!d.graphs[i].attrs().allFinite()) r.non_finite_graphs.push_back(i);
    if (d.graphs[i].num_edges() == 0) r.edgeless_graphs.push_back(i);
  }
  return r;
}

void write_report_csv(const ValidationReport& r, std::ostream& os) {
  os << "key,value\n";
  os << "graph_count," << r.graph_count << '\n';
  os << "attr_dim," << r.attr_dim << '\n';
  os << "normals," << r.class_counts.normals << '\n';
  os << "anomalies," << r.class_counts.anomalies << '\n';
  auto block = [&](const char* prefix, const ClassSummary& s) {
    os << prefix << "_mean_nodes," << s.mean_nodes << '\n';
    os << prefix << "_mean_edges," << s.mean_edges << '\n';
    os << prefix << "_mean_directed_edges," << s.mean_directed_edges << '\n';
  };
  block("all", r.all);
  block("normal", r.normal);
  block("anomalous", r.anomalous);
  os << "non_finite_graphs," << r.non_finite_graphs.size() << '\n';
  os << "edgeless_graphs," << r.edgeless_graphs.size() << '\n';
  os << "ok," << (r.ok() ? 1 : 0) << '\n';
}

}  // namespace denoise
