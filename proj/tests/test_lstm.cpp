#include <doctest.h>

#include <cmath>

#include "botgraph/errors.hpp"
#include "botgraph/lstm.hpp"
#include "botgraph/rng.hpp"
#include "test_util.hpp"

using namespace botgraph;

namespace {

WindowSample sample_of(std::vector<FeatureVector> rows, bool label,
                       const std::string& host = "10.0.0.1") {
  WindowSample w;
  w.host = host;
  w.start_interval = 0;
  w.rows = std::move(rows);
  w.label = label;
  return w;
}

std::vector<FeatureVector> const_rows(int steps, double value) {
  FeatureVector v;
  v.fill(value);
  return std::vector<FeatureVector>(steps, v);
}

std::vector<FeatureVector> random_rows(DetRng& rng, int steps) {
  std::vector<FeatureVector> rows(steps);
  for (auto& r : rows)
    for (double& v : r) v = rng.uniform(0.0, 1.0);
  return rows;
}

// Linearly separable toy set: positives hover high, negatives low.
std::vector<WindowSample> separable_set(int n_pos, int n_neg, uint64_t seed) {
  DetRng rng(seed);
  std::vector<WindowSample> samples;
  for (int i = 0; i < n_pos; ++i) {
    auto rows = const_rows(5, 0.8);
    for (auto& r : rows)
      for (double& v : r) v += rng.uniform(-0.05, 0.05);
    samples.push_back(sample_of(rows, true, "10.1.0." + std::to_string(i + 1)));
  }
  for (int i = 0; i < n_neg; ++i) {
    auto rows = const_rows(5, 0.15);
    for (auto& r : rows)
      for (double& v : r) v += rng.uniform(-0.05, 0.05);
    samples.push_back(sample_of(rows, false, "10.0.0." + std::to_string(i + 1)));
  }
  return samples;
}

bool params_equal(LstmParams& a, LstmParams& b) {
  auto ta = a.tensors(), tb = b.tensors();
  for (size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].size != tb[i].size) return false;
    for (size_t e = 0; e < ta[i].size; ++e)
      if (ta[i].data[e] != tb[i].data[e]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("init: deterministic per seed, forget bias one") {
  LstmParams a = init_params(7);
  LstmParams b = init_params(7);
  CHECK(params_equal(a, b));

  for (double v : a.bf) CHECK(v == 1.0);
  for (double v : a.bi) CHECK(v == 0.0);
  CHECK(a.b_out == 0.0);

  LstmParams c = init_params(8);
  CHECK_FALSE(params_equal(a, c));

  // Bounds: |w| <= sqrt(1/fan_in).
  for (double v : a.wi.a) CHECK(std::fabs(v) <= std::sqrt(1.0 / 10));
  for (double v : a.ui.a) CHECK(std::fabs(v) <= std::sqrt(1.0 / 64));
}

TEST_CASE("forward: all-zero weights and input score 0.5") {
  LstmParams p = LstmParams::zeros(10, 64);
  Prediction pred = forward(p, const_rows(5, 0.0));
  CHECK(pred.score == 0.5);
  CHECK(pred.label_at(0.5));
  CHECK_FALSE(pred.label_at(0.500001));
}

TEST_CASE("forward: scores stay inside (0,1)") {
  DetRng rng(3);
  LstmParams p = init_params(3);
  for (int trial = 0; trial < 50; ++trial) {
    Prediction pred = forward(p, random_rows(rng, 5));
    CHECK(pred.score > 0.0);
    CHECK(pred.score < 1.0);
  }
}

TEST_CASE("forward: non-finite input is rejected") {
  LstmParams p = init_params(1);
  auto rows = const_rows(5, 0.5);
  rows[2][3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(forward(p, rows), InputError);
}

TEST_CASE("forward matches a hand-unrolled scalar recurrence (1 hidden unit)") {
  LstmParams p = init_params(99, 10, 1);
  DetRng rng(5);
  auto rows = random_rows(rng, 5);

  // Independent scalar unroll of the same cell.
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  double h = 0.0, c = 0.0;
  for (int t = 0; t < 5; ++t) {
    double zi = p.bi[0], zf = p.bf[0], zo = p.bo[0], zg = p.bc[0];
    for (int k = 0; k < 10; ++k) {
      zi += p.wi(0, k) * rows[t][k];
      zf += p.wf(0, k) * rows[t][k];
      zo += p.wo(0, k) * rows[t][k];
      zg += p.wc(0, k) * rows[t][k];
    }
    zi += p.ui(0, 0) * h;
    zf += p.uf(0, 0) * h;
    zo += p.uo(0, 0) * h;
    zg += p.uc(0, 0) * h;
    c = sig(zf) * c + sig(zi) * std::tanh(zg);
    h = sig(zo) * std::tanh(c);
  }
  const double expected = sig(p.w_out[0] * h + p.b_out);

  Prediction pred = forward(p, rows);
  CHECK(pred.score == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("weighted_mse matches the stated examples") {
  CHECK(weighted_mse(std::vector<double>{1.0, 0.0},
                     std::vector<uint8_t>{1, 0}, 6.0) == 0.0);
  CHECK(weighted_mse(std::vector<double>{0.5}, std::vector<uint8_t>{0}, 6.0) ==
        doctest::Approx(0.25));
  CHECK(weighted_mse(std::vector<double>{0.5}, std::vector<uint8_t>{1}, 6.0) ==
        doctest::Approx(1.5));
}

TEST_CASE("gradient check: analytic BPTT matches central differences") {
  DetRng rng(21);
  SUBCASE("small hidden dimension, every parameter") {
    for (uint64_t seed = 1; seed <= 6; ++seed) {
      LstmParams p = init_params(seed, 10, 6);
      WindowSample s = sample_of(random_rows(rng, 5), seed % 2 == 0);
      GradCheckReport report = gradient_check(p, s, 6.0);
      CAPTURE(seed);
      CHECK(report.max_rel_error < 1e-4);
      CHECK(report.per_tensor.size() == 14);  // every tensor reported
    }
  }
  SUBCASE("full-size model") {
    LstmParams p = init_params(17, 10, 64);
    WindowSample s = sample_of(random_rows(rng, 5), true);
    GradCheckReport report = gradient_check(p, s, 6.0);
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_CASE("gradient check: error scales like the h^2 truncation term") {
  DetRng rng(31);
  LstmParams p = init_params(4, 10, 4);
  WindowSample s = sample_of(random_rows(rng, 5), true);
  const double e1 = gradient_check(p, s, 6.0, 1e-3).max_rel_error;
  const double e2 = gradient_check(p, s, 6.0, 2e-3).max_rel_error;
  CHECK(e2 > e1);
  CHECK(e2 / e1 == doctest::Approx(4.0).epsilon(0.6));
}

TEST_CASE("train: separable set reaches perfect training accuracy") {
  auto samples = separable_set(6, 14, 55);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 9;
  TrainResult result = train(samples, cfg);

  REQUIRE(result.loss_history.size() == 200);
  CHECK(result.loss_history.back() < result.loss_history.front());

  size_t correct = 0;
  for (const auto& s : samples) {
    const double score = forward(result.params, s.rows).score;
    if ((score >= 0.5) == s.label) ++correct;
  }
  CHECK(correct == samples.size());
}

TEST_CASE("train: zero learning rate leaves parameters untouched") {
  auto samples = separable_set(3, 5, 56);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.learning_rate = 0.0;
  cfg.seed = 12;
  TrainResult result = train(samples, cfg);

  LstmParams initial = init_params(cfg.seed, 10, 64);
  CHECK(params_equal(result.params, initial));
  for (double loss : result.loss_history)
    CHECK(loss == result.loss_history.front());
}

TEST_CASE("train: bitwise deterministic given seed and data") {
  auto samples = separable_set(4, 9, 57);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.seed = 99;
  TrainResult a = train(samples, cfg);
  TrainResult b = train(samples, cfg);
  CHECK(params_equal(a.params, b.params));
  CHECK(a.loss_history == b.loss_history);
}

TEST_CASE("train: single-class input is a configuration error") {
  auto samples = separable_set(0, 5, 58);
  CHECK_THROWS_AS(train(samples, {}), ConfigError);
  samples = separable_set(4, 0, 58);
  CHECK_THROWS_AS(train(samples, {}), ConfigError);
}

TEST_CASE("train: a blown-up step reports divergence with the epoch") {
  // An absurd learning rate overflows parameters to infinity; zero-valued
  // inputs (ubiquitous in zero-padded windows) then produce inf*0 = NaN.
  std::vector<WindowSample> samples;
  for (int i = 0; i < 8; ++i)
    samples.push_back(sample_of(const_rows(5, i % 2 ? 0.9 : 0.0), i % 2 == 1,
                                "10.0.0." + std::to_string(i + 1)));
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.learning_rate = 1e308;
  CHECK_THROWS_WITH_AS(train(samples, cfg), doctest::Contains("epoch"), NumericError);
}

TEST_CASE("inference is independent of sample order") {
  auto samples = separable_set(3, 3, 59);
  TrainConfig cfg;
  cfg.epochs = 10;
  TrainResult result = train(samples, cfg);

  std::vector<double> forward_scores, backward_scores(samples.size());
  for (const auto& s : samples)
    forward_scores.push_back(forward(result.params, s.rows).score);
  for (size_t i = samples.size(); i-- > 0;)
    backward_scores[i] = forward(result.params, samples[i].rows).score;
  CHECK(forward_scores == backward_scores);
}

TEST_CASE("model save/load round-trips forward outputs bitwise") {
  testutil::TempDir dir("model");
  auto samples = separable_set(3, 6, 60);
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.seed = 5;
  TrainResult result = train(samples, cfg);

  PipelineMeta meta;
  save_model(result.params, cfg, meta, dir.file("m.json"));
  LoadedModel loaded = load_model(dir.file("m.json"));

  CHECK(loaded.train_config.epochs == cfg.epochs);
  CHECK(loaded.train_config.seed == cfg.seed);
  CHECK(loaded.pipeline.window.window_s == meta.window.window_s);
  CHECK(params_equal(result.params, loaded.params));

  DetRng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    auto rows = random_rows(rng, 5);
    CHECK(forward(result.params, rows).score == forward(loaded.params, rows).score);
  }

  SUBCASE("saving twice produces identical bytes") {
    save_model(result.params, cfg, meta, dir.file("m2.json"));
    CHECK(testutil::read_text(dir.file("m.json")) == testutil::read_text(dir.file("m2.json")));
  }
}

TEST_CASE("model load rejects broken files") {
  testutil::TempDir dir("model");
  SUBCASE("truncated") {
    LstmParams p = init_params(1, 10, 8);
    save_model(p, {}, {}, dir.file("m.json"));
    std::string text = testutil::read_text(dir.file("m.json"));
    testutil::write_text(dir.file("m.json"), text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_model(dir.file("m.json")), InputError);
  }
  SUBCASE("not json") {
    testutil::write_text(dir.file("m.json"), "definitely not a model");
    CHECK_THROWS_AS(load_model(dir.file("m.json")), InputError);
  }
  SUBCASE("wrong format tag") {
    testutil::write_text(dir.file("m.json"), R"({"format":"other","version":1})");
    CHECK_THROWS_AS(load_model(dir.file("m.json")), InputError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_model(dir.file("absent.json")), InputError);
  }
}

TEST_CASE("model dimensions are data: a 32-unit model loads and predicts") {
  testutil::TempDir dir("model");
  LstmParams p = init_params(2, 10, 32);
  save_model(p, {}, {}, dir.file("m.json"));
  LoadedModel loaded = load_model(dir.file("m.json"));
  CHECK(loaded.params.hidden_dim == 32);
  DetRng rng(62);
  Prediction pred = forward(loaded.params, random_rows(rng, 5));
  CHECK(pred.score > 0.0);
  CHECK(pred.score < 1.0);
}
