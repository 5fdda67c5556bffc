#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "denoise/graph.hpp"
#include "denoise/rng.hpp"

namespace test_support {

using denoise::Edge;
using denoise::Graph;
using denoise::GraphLabel;
using denoise::Matrix;
using denoise::Rng;

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

inline Graph random_graph(std::size_t n, double p, Eigen::Index d, Rng& rng,
                          GraphLabel label = GraphLabel::Normal) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (coin(rng)) edges.emplace_back(u, v);
  return Graph::build(n, edges, random_matrix(static_cast<Eigen::Index>(n), d, rng), label);
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("denoise_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path fixture_dir() { return std::filesystem::path(DENOISE_TEST_DATA) / "TOY"; }

}  // namespace test_support
