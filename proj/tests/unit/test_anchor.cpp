#include <doctest.h>

#include <cmath>

#include "denoise/anchor.hpp"
#include "denoise/errors.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace denoise;
using namespace test_support;

namespace {

std::vector<NormalGraphNodes> random_normals(Rng& rng, int count, Eigen::Index d) {
  std::vector<NormalGraphNodes> out;
  for (int g = 0; g < count; ++g) out.push_back({static_cast<std::size_t>(3 * g + 1), random_matrix(2 + g, d, rng)});
  return out;
}

Matrix readouts(std::span<const NormalGraphNodes> normals) {
  Matrix m(static_cast<Eigen::Index>(normals.size()), normals.front().nodes.cols());
  for (std::size_t i = 0; i < normals.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = normals[i].nodes.colwise().mean();
  return m;
}

}  // namespace

TEST_CASE("node_info_scores") {
  Matrix same(3, 2);
  same << 1, 2, 1, 2, 1, 2;
  const std::vector<NormalGraphNodes> one = {{0, same}};
  const auto scores = node_info_scores(one, same.topRows(1));
  for (double s : scores[0]) CHECK(s == doctest::Approx(1.0));

  Matrix orth(1, 2);
  orth << 0, 1;
  Matrix g(2, 2);
  g << 1, 0, -3, 0;
  const std::vector<NormalGraphNodes> o = {{0, orth}, {1, orth}};
  CHECK(node_info_scores(o, g)[0][0] == 0.0);

  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    const auto normals = random_normals(rng, 3, 4);
    const Matrix gr = readouts(normals);
    const auto got = node_info_scores(normals, gr);
    const auto want = oracle::info_scores(normals, gr);
    for (std::size_t a = 0; a < got.size(); ++a)
      for (std::size_t b = 0; b < got[a].size(); ++b) CHECK(std::abs(got[a][b] - want[a][b]) <= 1e-12);
  }
  CHECK_THROWS_AS(node_info_scores({}, Matrix(0, 2)), Error);
}

TEST_CASE("select_topk_nodes") {
  Rng rng(2);
  const std::vector<NormalGraphNodes> normals = {{5, random_matrix(3, 2, rng)}};
  const std::vector<std::vector<double>> distinct = {{0.1, 0.9, 0.5}};
  const auto bank = select_topk_nodes(distinct, normals, 2);
  CHECK(bank.source == std::vector<std::pair<std::size_t, std::size_t>>{{5, 1}, {5, 2}});
  CHECK(bank.rows.row(0) == normals[0].nodes.row(1));

  const auto all = select_topk_nodes(distinct, normals, 10);
  CHECK(all.k() == 3);

  const std::vector<NormalGraphNodes> two = {{9, random_matrix(2, 2, rng)}, {4, random_matrix(2, 2, rng)}};
  const std::vector<std::vector<double>> ties = {{0.5, 0.5}, {0.5, 0.5}};
  CHECK(select_topk_nodes(ties, two, 2).source == std::vector<std::pair<std::size_t, std::size_t>>{{4, 0}, {4, 1}});
}

TEST_CASE("mixup_fuse") {
  Rng rng(3);
  const auto z = ad::Tensor::constant(random_matrix(4, 3, rng));
  AnchorBank bank;
  bank.rows = random_matrix(2, 3, rng);

  SUBCASE("lambda one is the identity") {
    CHECK(mixup_fuse(z, bank, 1.0, 1.0, rng, MixupMode::SoftmaxNormalized).value() == z.value());
    CHECK(mixup_fuse(z, bank, 1.0, MixupMode::Verbatim).value() == z.value());
  }
  SUBCASE("lambda zero with a single anchor") {
    AnchorBank single;
    single.rows = bank.rows.topRows(1);
    const Matrix out = mixup_fuse(z, single, 0.0, 0.0, rng, MixupMode::SoftmaxNormalized).value();
    for (int i = 0; i < 4; ++i) CHECK((out.row(i) - single.rows.row(0)).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("matches the dense oracle") {
    for (bool soft : {true, false}) {
      const Matrix got = mixup_fuse(z, bank, 0.5, soft ? MixupMode::SoftmaxNormalized : MixupMode::Verbatim).value();
      CHECK((got - oracle::mixup(z.value(), bank.rows, 0.5, soft)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("row norms stay bounded in softmax mode") {
    const Matrix out = mixup_fuse(z, bank, 0.3, MixupMode::SoftmaxNormalized).value();
    const double bound = std::max(z.value().rowwise().norm().maxCoeff(), bank.rows.rowwise().norm().maxCoeff());
    CHECK(out.rowwise().norm().maxCoeff() <= bound + 1e-12);
  }
  SUBCASE("gradient flows to the node embeddings only") {
    const Matrix b = bank.rows;
    CHECK(ad::grad_check(
              [&](const ad::Tensor& t) {
                AnchorBank bk;
                bk.rows = b;
                return ad::sum(ad::mul(mixup_fuse(t, bk, 0.4, MixupMode::SoftmaxNormalized), t));
              },
              z.value()) <= 1e-6);
  }
  SUBCASE("empty bank") {
    try {
      mixup_fuse(z, AnchorBank{}, 0.5, MixupMode::SoftmaxNormalized);
      FAIL("expected EmptyBank");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyBank);
    }
  }
}

TEST_CASE("draw_lambda stays in range") {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const double l = draw_lambda(0.7, 0.9, rng);
    CHECK(l >= 0.7);
    CHECK(l <= 0.9);
  }
  CHECK(draw_lambda(0.3, 0.3, rng) == 0.3);
}

TEST_CASE("sample_pools") {
  std::vector<double> eta;
  for (int i = 0; i < 10; ++i) eta.push_back(0.05 * ((i * 7) % 10));
  Rng rng(5);
  const auto pools = sample_pools(eta, 0.8, 0.2, 2, rng);
  std::vector<std::size_t> order(10);
  for (std::size_t i = 0; i < 10; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return eta[a] < eta[b]; });
  for (auto p : pools.positives) CHECK((p == order[8] || p == order[9]));
  for (auto n : pools.negatives) CHECK((n == order[0] || n == order[1]));
  CHECK_FALSE(pools.positives_with_replacement);

  const auto big = sample_pools(eta, 0.8, 0.2, 5, rng);
  CHECK(big.positives.size() == 5);
  CHECK(big.positives_with_replacement);
  CHECK(big.negatives_with_replacement);

  Rng a(9), b(9);
  CHECK(sample_pools(eta, 0.9, 0.1, 3, a).positives == sample_pools(eta, 0.9, 0.1, 3, b).positives);

  try {
    Rng r(1);
    sample_pools(std::vector<double>(8, 0.5), 0.9, 0.1, 2, r);
    FAIL("expected DegeneratePools");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegeneratePools);
  }
}
