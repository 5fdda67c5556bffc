#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "denoise/errors.hpp"
#include "denoise/harness.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace denoise;
using namespace test_support;
namespace fs = std::filesystem;

namespace {

Dataset labelled(std::size_t normals, std::size_t anomalies) {
  std::vector<Graph> gs;
  for (std::size_t i = 0; i < normals + anomalies; ++i) {
    gs.push_back(Graph::build(1, {}, Matrix::Constant(1, 1, static_cast<double>(i)),
                              i < normals ? GraphLabel::Normal : GraphLabel::Anomalous));
  }
  return make_dataset("L", std::move(gs));
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.synth.n_graphs = 60;
  cfg.synth.anom_frac = 0.3;
  cfg.train.epochs = 3;
  cfg.train.hidden = 8;
  cfg.train.k = 16;
  cfg.train.pool_size = 4;
  cfg.head.steps = 30;
  cfg.trials = 2;
  cfg.beta = 0.1;
  return cfg;
}

}  // namespace

TEST_CASE("split_dataset") {
  const auto d = labelled(100, 20);
  const auto s = split_dataset(d, 3);
  std::size_t tr = 0, va = 0, te = 0, va_a = 0, te_a = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const bool anom = d.graphs[i].is_anomalous();
    switch (s.roles[i]) {
      case SplitRole::Train: CHECK_FALSE(anom); ++tr; break;
      case SplitRole::Val: (anom ? va_a : va)++; break;
      case SplitRole::Test: (anom ? te_a : te)++; break;
      case SplitRole::Unused: CHECK(anom); break;
    }
  }
  CHECK(tr == 80);
  CHECK(va == 10);
  CHECK(te == 10);
  CHECK(va_a == 1);
  CHECK(te_a == 1);

  const auto again = split_dataset(d, 3);
  CHECK(again.roles == s.roles);
  const auto other = split_dataset(d, 4);
  CHECK(other.roles != s.roles);
  CHECK(other.count(SplitRole::Train) == 80);

  try {
    split_dataset(labelled(5, 0), 1);
    FAIL("expected SingleClassDataset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleClassDataset);
  }
}

TEST_CASE("split invariants over random class sizes") {
  Rng rng(1);
  std::uniform_int_distribution<std::size_t> nn(1, 300), na(1, 80);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = nn(rng), a = na(rng);
    const auto d = labelled(n, a);
    const auto s = split_dataset(d, static_cast<std::uint64_t>(t));
    std::size_t normals_by_role[4] = {0, 0, 0, 0}, anoms_by_role[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < d.size(); ++i)
      (d.graphs[i].is_anomalous() ? anoms_by_role : normals_by_role)[static_cast<int>(s.roles[i])]++;
    const double tenth = 0.1 * static_cast<double>(n);
    CHECK(std::abs(static_cast<double>(normals_by_role[1]) - tenth) <= 1.0);
    CHECK(std::abs(static_cast<double>(normals_by_role[2]) - tenth) <= 1.0);
    CHECK(std::abs(static_cast<double>(normals_by_role[0]) - 0.8 * static_cast<double>(n)) <= 2.0);
    CHECK(normals_by_role[3] == 0);
    CHECK(anoms_by_role[0] == 0);
    CHECK(anoms_by_role[2] >= 1);
    CHECK(anoms_by_role[1] + anoms_by_role[2] <= a);
  }
}

TEST_CASE("inject_noise") {
  const auto d = labelled(100, 40);
  SUBCASE("beta zero") {
    auto s = split_dataset(d, 1);
    const auto before = s.ids(SplitRole::Train);
    CHECK(inject_noise(d, s, 0.0, 1) == before);
  }
  SUBCASE("round(beta * train normals) anomalies, disjoint from val and test") {
    auto s = split_dataset(d, 2);
    const auto val = s.ids(SplitRole::Val), test = s.ids(SplitRole::Test);
    const auto train = inject_noise(d, s, 0.3, 2);
    std::size_t injected = 0;
    for (auto i : train) injected += d.graphs[i].is_anomalous() ? 1 : 0;
    CHECK(injected == 24);
    std::set<std::size_t> vt(val.begin(), val.end());
    vt.insert(test.begin(), test.end());
    for (auto i : train) CHECK(vt.count(i) == 0);
    CHECK(s.ids(SplitRole::Train) == train);
  }
  SUBCASE("pool exhausted") {
    const auto small = labelled(100, 10);
    auto s = split_dataset(small, 1);
    try {
      inject_noise(small, s, 0.3, 1);
      FAIL("expected PoolExhausted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PoolExhausted);
    }
  }
}

TEST_CASE("auroc") {
  const std::vector<double> sep = {0.1, 0.2, 0.8, 0.9};
  const std::vector<int> lab = {0, 0, 1, 1};
  CHECK(auroc(sep, lab) == 1.0);
  CHECK(auroc(std::vector<double>(4, 0.5), lab) == 0.5);

  Rng rng(2);
  std::uniform_int_distribution<int> coin(0, 1), level(0, 6);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> s;
    std::vector<int> l;
    for (int i = 0; i < 3 + t % 30; ++i) {
      s.push_back(level(rng) * 0.25);
      l.push_back(coin(rng));
    }
    l[0] = 0;
    l[1] = 1;
    CHECK(std::abs(auroc(s, l) - oracle::auroc(s, l)) <= 1e-12);
  }

  std::vector<double> s = {0.3, 0.1, 0.7, 0.2, 0.9};
  const std::vector<int> l = {1, 0, 0, 1, 1};
  std::vector<double> ns;
  for (double x : s) ns.push_back(-x);
  CHECK(auroc(s, l) == doctest::Approx(1.0 - auroc(ns, l)));

  try {
    auroc(sep, std::vector<int>(4, 1));
    FAIL("expected SingleClassLabels");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleClassLabels);
  }
}

TEST_CASE("run_experiment writes reproducible outputs") {
  const auto cfg = tiny_config();
  const auto a = scratch_dir("run_a"), b = scratch_dir("run_b");
  const auto ra = run_experiment(cfg, a);
  run_experiment(cfg, b);
  CHECK(ra.trials.size() == 2);
  for (const char* f : {"report.json", "trials.csv", "scores_trial0.csv", "scores_trial1.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "scores_trial0.csv").rfind("graph_id,label,score,z_agg0,z_agg1,z_agg2,z_agg3\n", 0) == 0);
  const auto report = nlohmann::json::parse(slurp(a / "report.json"));
  CHECK(report["trials"].size() == 2);
  double m = 0;
  for (const auto& t : report["trials"]) m += t["test_auc"].get<double>() / 2.0;
  CHECK(report["mean_auc"].get<double>() == doctest::Approx(m));
  CHECK(trial_seed(cfg.seed, 1) == ra.trials[1].seed);
}

TEST_CASE("adding trials keeps earlier ones") {
  auto cfg = tiny_config();
  cfg.trials = 1;
  const auto one = run_experiment(cfg);
  cfg.trials = 2;
  const auto two = run_experiment(cfg);
  CHECK(one.trials[0].test_auc == two.trials[0].test_auc);
}

TEST_CASE("parallel trials match sequential ones") {
  auto cfg = tiny_config();
  const auto seq = run_experiment(cfg);
  cfg.jobs = 2;
  const auto par = run_experiment(cfg);
  for (std::size_t t = 0; t < 2; ++t) CHECK(seq.trials[t].test_auc == par.trials[t].test_auc);
}

TEST_CASE("sweep") {
  auto cfg = tiny_config();
  cfg.trials = 1;
  SUBCASE("one point equals run_experiment") {
    cfg.grid = {{"w", {nlohmann::json(200.0)}}};
    const auto rows = sweep(cfg);
    REQUIRE(rows.size() == 1);
    auto plain = cfg;
    plain.grid.clear();
    CHECK(rows[0].report.mean_auc == run_experiment(plain).mean_auc);
  }
  SUBCASE("2x2 grid") {
    cfg.grid = {{"w", {1, 200}}, {"k", {8, 16}}};
    const auto out = scratch_dir("sweep");
    const auto rows = sweep(cfg, out);
    CHECK(rows.size() == 4);
    const auto text = slurp(out / "sweep.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
    CHECK(text.rfind("w,k,mean_auc,std_auc\n", 0) == 0);
    for (const auto& r : rows) CHECK(std::isfinite(r.report.mean_auc));
  }
  SUBCASE("empty grid") {
    try {
      sweep(cfg);
      FAIL("expected EmptyGrid");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyGrid);
    }
  }
}

TEST_CASE("dump_embeddings") {
  SynthConfig sc;
  sc.n_graphs = 10;
  sc.anom_frac = 0.3;
  const auto d = gen_synthetic(sc, 1);
  const auto model = init_model({sc.attr_dim, 6, 2}, 2);
  const auto split = split_dataset(d, 1);
  std::ostringstream a, b;
  dump_embeddings(model, d, split, a);
  dump_embeddings(model, d, split, b);
  CHECK(a.str() == b.str());
  std::istringstream is(a.str());
  std::string line;
  int rows = 0;
  std::getline(is, line);
  CHECK(std::count(line.begin(), line.end(), ',') + 1 == 6 + 3);
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 10);
}
