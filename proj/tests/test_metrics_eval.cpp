#include <doctest.h>

#include <cmath>
#include <set>

#include "botgraph/errors.hpp"
#include "botgraph/evaluate.hpp"
#include "botgraph/metrics.hpp"
#include "botgraph/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace botgraph;

namespace {

std::vector<std::pair<double, bool>> random_scores(DetRng& rng, int n_pos, int n_neg,
                                                   bool quantized) {
  std::vector<std::pair<double, bool>> scored;
  for (int i = 0; i < n_pos; ++i)
    scored.emplace_back(quantized ? rng.below(10) / 10.0 : rng.next_unit(), true);
  for (int i = 0; i < n_neg; ++i)
    scored.emplace_back(quantized ? rng.below(10) / 10.0 : rng.next_unit(), false);
  return scored;
}

FeatureVector fv(double x) {
  FeatureVector v;
  v.fill(x);
  return v;
}

// Separable dataset shaped like assembled + labeled series: bots carry a
// strong periodic pattern, benign hosts stay near a low baseline.
Dataset separable_dataset(const std::string& name, int bots, int benign, int T,
                          uint64_t seed) {
  DetRng rng(seed);
  Dataset ds;
  ds.name = name;
  auto add = [&](const std::string& host, bool malicious) {
    NodeTimeSeries s;
    s.host = host;
    s.seq.resize(T);
    s.present.assign(T, 1);
    s.label.assign(T, malicious ? 1 : 0);
    for (int t = 0; t < T; ++t) {
      const double base = malicious ? (t % 2 ? 0.85 : 0.55) : 0.12;
      s.seq[t] = fv(base + rng.uniform(-0.04, 0.04));
    }
    ds.series.push_back(std::move(s));
  };
  for (int i = 0; i < bots; ++i) add(name + "-bot" + std::to_string(i), true);
  for (int i = 0; i < benign; ++i) add(name + "-host" + std::to_string(i), false);
  return ds;
}

}  // namespace

TEST_CASE("metrics: rates mirror the confusion counts") {
  MetricSet m = metrics({946, 963, 37, 54});
  CHECK(*m.tpr == doctest::Approx(0.946));
  CHECK(*m.tnr == doctest::Approx(0.963));
  CHECK(*m.accuracy == doctest::Approx(0.9545));
  CHECK(*m.fpr == doctest::Approx(0.037));
  CHECK(*m.fnr == doctest::Approx(0.054));
  CHECK(*m.precision == doctest::Approx(946.0 / 983.0));
  CHECK(*m.recall == doctest::Approx(0.946));
}

TEST_CASE("metrics: undefined rates are absent, not zero") {
  MetricSet m = metrics({0, 10, 0, 0});
  CHECK_FALSE(m.precision.has_value());
  CHECK_FALSE(m.tpr.has_value());
  CHECK_FALSE(m.fnr.has_value());
  CHECK_FALSE(m.f_measure.has_value());
  CHECK(m.tnr.has_value());

  MetricSet zero = metrics({0, 0, 0, 0});
  CHECK_FALSE(zero.accuracy.has_value());
}

TEST_CASE("metrics: perfect classifier") {
  MetricSet m = metrics({10, 90, 0, 0});
  CHECK(*m.accuracy == 1.0);
  CHECK(*m.tpr == 1.0);
  CHECK(*m.tnr == 1.0);
  CHECK(*m.fpr == 0.0);
  CHECK(*m.fnr == 0.0);
  CHECK(*m.f_measure == 1.0);
}

TEST_CASE("metrics: complement identities hold exactly in doubles") {
  DetRng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    ConfusionCounts c{static_cast<int64_t>(rng.below(1000)),
                      static_cast<int64_t>(rng.below(1000)),
                      static_cast<int64_t>(rng.below(1000)),
                      static_cast<int64_t>(rng.below(1000))};
    MetricSet m = metrics(c);
    if (m.tpr) CHECK(*m.tpr + *m.fnr == 1.0);
    if (m.tnr) CHECK(*m.tnr + *m.fpr == 1.0);
  }
}

TEST_CASE("roc: perfectly separated scores give auroc 1") {
  std::vector<std::pair<double, bool>> scored{
      {0.9, true}, {0.8, true}, {0.3, false}, {0.1, false}};
  RocCurve curve = roc(scored);
  CHECK(curve.auroc == 1.0);
  CHECK(curve.points.front().fpr == 0.0);
  CHECK(curve.points.front().tpr == 0.0);
  CHECK(curve.points.back().fpr == 1.0);
  CHECK(curve.points.back().tpr == 1.0);
}

TEST_CASE("roc: constant scores give auroc 0.5") {
  std::vector<std::pair<double, bool>> scored{
      {0.4, true}, {0.4, false}, {0.4, true}, {0.4, false}};
  RocCurve curve = roc(scored);
  CHECK(curve.auroc == doctest::Approx(0.5));
  REQUIRE(curve.points.size() == 2);  // (0,0) then the single tie block
}

TEST_CASE("roc: single-class input is an error") {
  std::vector<std::pair<double, bool>> scored{{0.4, true}, {0.6, true}};
  CHECK_THROWS_AS(roc(scored), ConfigError);
}

TEST_CASE("roc: trapezoid equals the pairwise U statistic") {
  DetRng rng(23);
  for (int trial = 0; trial < 120; ++trial) {
    const bool quantized = trial % 2 == 0;  // exercise heavy ties
    auto scored = random_scores(rng, 1 + static_cast<int>(rng.below(40)),
                                1 + static_cast<int>(rng.below(40)), quantized);
    RocCurve curve = roc(scored);
    CHECK(std::fabs(curve.auroc - oracles::auc_pairwise(scored)) <= 1e-12);

    // Curve shape: fpr/tpr are non-decreasing from (0,0) to (1,1).
    for (size_t k = 1; k < curve.points.size(); ++k) {
      CHECK(curve.points[k].fpr >= curve.points[k - 1].fpr);
      CHECK(curve.points[k].tpr >= curve.points[k - 1].tpr);
      CHECK(curve.points[k].threshold < curve.points[k - 1].threshold);
    }
  }
}

TEST_CASE("roc: auroc is invariant under strictly monotone score transforms") {
  DetRng rng(29);
  auto scored = random_scores(rng, 25, 40, false);
  const double base = roc(scored).auroc;
  auto transformed = scored;
  for (auto& [s, l] : transformed) s = std::exp(3.0 * s) - 0.5;
  CHECK(roc(transformed).auroc == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("youden index maximizes tpr - fpr") {
  std::vector<std::pair<double, bool>> scored{
      {0.9, true}, {0.7, true}, {0.6, false}, {0.5, true}, {0.2, false}, {0.1, false}};
  RocCurve curve = roc(scored);
  const size_t yi = youden_index(curve);
  for (const auto& p : curve.points)
    CHECK(curve.points[yi].tpr - curve.points[yi].fpr >= p.tpr - p.fpr);
}

TEST_CASE("split: stratified by host with the worked example counts") {
  std::vector<WindowSample> samples;
  auto add_host = [&](const std::string& host, bool label) {
    for (int w = 0; w < 3; ++w) {
      WindowSample s;
      s.host = host;
      s.start_interval = w * 3;
      s.rows.assign(5, fv(0.1));
      s.label = label;
      samples.push_back(std::move(s));
    }
  };
  for (int i = 0; i < 10; ++i) add_host("bot" + std::to_string(i), true);
  for (int i = 0; i < 100; ++i) add_host("host" + std::to_string(i), false);

  SplitResult parts = split(samples, {0.7, 42});

  std::set<std::string> train_pos, train_neg, test_pos, test_neg;
  for (const auto& h : parts.manifest)
    (h.to_train ? (h.malicious ? train_pos : train_neg)
                : (h.malicious ? test_pos : test_neg))
        .insert(h.host);
  CHECK(train_pos.size() == 7);
  CHECK(test_pos.size() == 3);
  CHECK(train_neg.size() == 70);
  CHECK(test_neg.size() == 30);
  CHECK(parts.train.size() == 77 * 3);
  CHECK(parts.test.size() == 33 * 3);

  SUBCASE("host-disjoint sides") {
    std::set<std::string> train_hosts, test_hosts;
    for (const auto& s : parts.train) train_hosts.insert(s.host);
    for (const auto& s : parts.test) test_hosts.insert(s.host);
    for (const auto& h : train_hosts) CHECK(test_hosts.count(h) == 0);
  }

  SUBCASE("same seed, same split") {
    SplitResult again = split(samples, {0.7, 42});
    REQUIRE(again.manifest.size() == parts.manifest.size());
    for (size_t i = 0; i < parts.manifest.size(); ++i) {
      CHECK(again.manifest[i].host == parts.manifest[i].host);
      CHECK(again.manifest[i].to_train == parts.manifest[i].to_train);
    }
  }
}

TEST_CASE("split: floor on a 3-host class gives 2 train / 1 test") {
  std::vector<WindowSample> samples;
  for (int i = 0; i < 3; ++i) {
    WindowSample s;
    s.host = "bot" + std::to_string(i);
    s.rows.assign(5, fv(0.5));
    s.label = true;
    samples.push_back(s);
  }
  for (int i = 0; i < 4; ++i) {
    WindowSample s;
    s.host = "host" + std::to_string(i);
    s.rows.assign(5, fv(0.1));
    s.label = false;
    samples.push_back(s);
  }
  SplitResult parts = split(samples, {0.7, 1});
  size_t train_pos = 0, test_pos = 0;
  for (const auto& h : parts.manifest)
    if (h.malicious) (h.to_train ? train_pos : test_pos)++;
  CHECK(train_pos == 2);
  CHECK(test_pos == 1);
}

TEST_CASE("split: a class with fewer than 2 hosts fails, naming the class") {
  std::vector<WindowSample> samples;
  WindowSample pos;
  pos.host = "onlybot";
  pos.rows.assign(5, fv(0.9));
  pos.label = true;
  samples.push_back(pos);
  for (int i = 0; i < 5; ++i) {
    WindowSample s;
    s.host = "host" + std::to_string(i);
    s.rows.assign(5, fv(0.1));
    s.label = false;
    samples.push_back(s);
  }
  CHECK_THROWS_WITH_AS(split(samples, {}), doctest::Contains("malicious"), ConfigError);
}

TEST_CASE("evaluate_modes: combined on separable synthetic data is perfect") {
  std::vector<Dataset> datasets{separable_dataset("a", 4, 26, 11, 801),
                                separable_dataset("b", 4, 26, 11, 802)};
  EvalConfig cfg;
  cfg.train.epochs = 120;
  cfg.train.seed = 5;
  cfg.sampling.seed = 5;
  cfg.split_cfg.seed = 5;

  ModeReport report = evaluate_modes(datasets, EvalMode::combined, cfg);
  REQUIRE(report.entries.size() == 1);
  const EvalEntry& e = report.entries[0];
  CHECK(e.curve.auroc == doctest::Approx(1.0));
  CHECK(*e.at_threshold.accuracy == doctest::Approx(1.0));
  CHECK(e.test_hosts_pos > 0);

  // Pooled hosts are namespaced per dataset, so splits stay host-disjoint.
  for (const auto& v : e.verdicts)
    CHECK((v.host.rfind("a:", 0) == 0 || v.host.rfind("b:", 0) == 0));
}

TEST_CASE("evaluate_modes: within mode evaluates each dataset separately") {
  std::vector<Dataset> datasets{separable_dataset("x", 4, 20, 11, 811),
                                separable_dataset("y", 4, 20, 11, 812)};
  EvalConfig cfg;
  cfg.train.epochs = 100;
  ModeReport report = evaluate_modes(datasets, EvalMode::within, cfg);
  REQUIRE(report.entries.size() == 2);
  CHECK(report.entries[0].train_name == "x");
  CHECK(report.entries[0].test_name == "x");
  CHECK(report.entries[1].train_name == "y");
  for (const auto& e : report.entries) CHECK(e.curve.auroc > 0.9);
}

TEST_CASE("evaluate_modes: cross mode emits the full matrix with leakage flags") {
  std::vector<Dataset> datasets{separable_dataset("p", 3, 18, 11, 821),
                                separable_dataset("q", 3, 18, 11, 822)};
  EvalConfig cfg;
  cfg.train.epochs = 100;
  ModeReport report = evaluate_modes(datasets, EvalMode::cross, cfg);
  REQUIRE(report.entries.size() == 4);
  REQUIRE(report.matrix.has_value());
  CHECK(report.matrix->names == std::vector<std::string>{"p", "q"});
  CHECK(report.matrix->values.size() == 2);
  CHECK(report.matrix->test_avg.size() == 2);

  int leaky = 0;
  for (const auto& e : report.entries)
    if (e.leakage) {
      ++leaky;
      CHECK(e.train_name == e.test_name);
    }
  CHECK(leaky == 2);

  // Matrix cells match the entries they came from.
  for (const auto& e : report.entries) {
    const size_t a = e.train_name == "p" ? 0 : 1;
    const size_t b = e.test_name == "p" ? 0 : 1;
    CHECK(report.matrix->values[b][a] == e.curve.auroc);
  }
}

TEST_CASE("evaluate_modes: cross mode needs two datasets") {
  std::vector<Dataset> datasets{separable_dataset("solo", 3, 15, 11, 831)};
  CHECK_THROWS_AS(evaluate_modes(datasets, EvalMode::cross, {}), ConfigError);
}

TEST_CASE("evaluate_pretrained scores datasets without training") {
  std::vector<Dataset> datasets{separable_dataset("z", 4, 20, 11, 841)};
  EvalConfig cfg;
  cfg.train.epochs = 100;
  ModeReport trained = evaluate_modes(datasets, EvalMode::within, cfg);
  REQUIRE(trained.entries.size() == 1);

  // A freshly trained separate model, applied via the pretrained path.
  auto samples = slice_windows(undersample(datasets[0].series, cfg.sampling), cfg.sampling);
  TrainResult tr = train(samples, cfg.train);
  ModeReport applied = evaluate_pretrained(tr.params, datasets, cfg);
  REQUIRE(applied.entries.size() == 1);
  CHECK(applied.entries[0].train_name == "pretrained");
  CHECK(applied.entries[0].curve.auroc > 0.9);
}

TEST_CASE("report files are written and deterministic") {
  testutil::TempDir dir("report");
  std::vector<Dataset> datasets{separable_dataset("r", 3, 15, 11, 851)};
  EvalConfig cfg;
  cfg.train.epochs = 60;
  ModeReport report = evaluate_modes(datasets, EvalMode::within, cfg);

  write_mode_report(report, cfg, dir.file("out"));
  CHECK(std::filesystem::exists(dir.file("out") + "/report.txt"));
  CHECK(std::filesystem::exists(dir.file("out") + "/report.jsonl"));
  CHECK(std::filesystem::exists(dir.file("out") + "/roc_r.csv"));
  CHECK(std::filesystem::exists(dir.file("out") + "/roc_r.svg"));
  CHECK(std::filesystem::exists(dir.file("out") + "/hosts_r.csv"));

  write_mode_report(report, cfg, dir.file("out2"));
  CHECK(testutil::read_text(dir.file("out") + "/report.txt") ==
        testutil::read_text(dir.file("out2") + "/report.txt"));
  CHECK(testutil::read_text(dir.file("out") + "/report.jsonl") ==
        testutil::read_text(dir.file("out2") + "/report.jsonl"));

  const std::string roc_text = testutil::read_text(dir.file("out") + "/roc_r.csv");
  CHECK(roc_text.find("fpr,tpr,threshold") != std::string::npos);
  CHECK(roc_text.find("inf") != std::string::npos);
}
