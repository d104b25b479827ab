// Copyright 2026 The faqrank Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "faqrank/model.hpp"
#include "testutil.hpp"

using namespace faqrank;

static FeatureVector random_features(Rng& rng, std::size_t max_sparse) {
  FeatureVector x;
  for (double& d : x.dense) d = rng.next_double(-2.0, 2.0);
  for (std::size_t s = 0; s < max_sparse; ++s) {
    if (rng.next_double() < 0.3) x.sparse.push_back(s);
  }
  return x;
}

static ScoringModel random_model(Rng& rng, std::size_t input_dim,
                                 std::size_t hidden_dim, HiddenActivation act) {
  ScoringModel m = init_model(input_dim, hidden_dim, rng.next_u64(), act);
  // Spread parameters beyond the tiny init range.
  for (double& w : m.w1) w = rng.next_double(-0.5, 0.5);
  for (double& b : m.b1) b = rng.next_double(-0.5, 0.5);
  for (double& w : m.w2) w = rng.next_double(-0.5, 0.5);
  m.b2 = rng.next_double(-0.5, 0.5);
  return m;
}

// Central finite differences over every parameter.
static Gradient fd_gradient(const ScoringModel& m, const FeatureVector& x,
                            double dloss, double h = 1e-5) {
  Gradient g = Gradient::zeros_like(m);
  ScoringModel probe = m;
  auto central = [&](double& param) {
    double saved = param;
    param = saved + h;
    double up = score(probe, x);
    param = saved - h;
    double down = score(probe, x);
    param = saved;
    return dloss * (up - down) / (2.0 * h);
  };
  for (std::size_t i = 0; i < m.w1.size(); ++i) g.w1[i] = central(probe.w1[i]);
  for (std::size_t i = 0; i < m.b1.size(); ++i) g.b1[i] = central(probe.b1[i]);
  for (std::size_t i = 0; i < m.w2.size(); ++i) g.w2[i] = central(probe.w2[i]);
  g.b2 = central(probe.b2);
  return g;
}

static void check_close(const std::vector<double>& got, const std::vector<double>& want,
                        double rel) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    double denom = std::max({std::abs(got[i]), std::abs(want[i]), 1e-8});
    CHECK(std::abs(got[i] - want[i]) / denom <= rel);
  }
}

TEST_CASE("score of an all-zero model is 0.5") {
  ScoringModel m = init_model(20, 0, 1);
  std::fill(m.w2.begin(), m.w2.end(), 0.0);
  m.b2 = 0.0;
  Rng rng(2);
  FeatureVector x = random_features(rng, 4);
  CHECK(score(m, x) == 0.5);
}

TEST_CASE("linear model score matches the closed form") {
  ScoringModel m = init_model(kDenseDim, 0, 1);
  std::fill(m.w2.begin(), m.w2.end(), 0.0);
  m.w2[0] = 1.0;
  m.b2 = 0.0;
  FeatureVector x;
  x.dense[0] = 1.0;
  CHECK_THAT(score(m, x), Catch::Matchers::WithinAbs(1.0 / (1.0 + std::exp(-1.0)), 1e-15));
}

TEST_CASE("score is strictly increasing in a weight on a positive input") {
  Rng rng(3);
  ScoringModel m = random_model(rng, kDenseDim, 0, HiddenActivation::Tanh);
  FeatureVector x = random_features(rng, 0);
  x.dense[4] = 0.7;
  double before = score(m, x);
  m.w2[4] += 0.25;
  CHECK(score(m, x) > before);
}

TEST_CASE("score output stays strictly inside (0,1)") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ScoringModel m = random_model(rng, 20, trial % 2 ? 4 : 0, HiddenActivation::Tanh);
    for (double& w : m.w2) w *= 50.0;  // push toward saturation
    FeatureVector x = random_features(rng, 4);
    double s = score(m, x);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
}

TEST_CASE("sparse index out of range is an error") {
  ScoringModel m = init_model(kDenseDim + 2, 0, 1);
  FeatureVector x;
  x.sparse = {2};
  CHECK_THROWS_AS(score(m, x), InternalError);
}

TEST_CASE("zero upstream gradient gives a zero gradient") {
  Rng rng(7);
  ScoringModel m = random_model(rng, 20, 3, HiddenActivation::Tanh);
  FeatureVector x = random_features(rng, 4);
  Gradient g = backward(m, x, 0.0);
  for (double v : g.w1) CHECK(v == 0.0);
  for (double v : g.w2) CHECK(v == 0.0);
  CHECK(g.b2 == 0.0);
}

TEST_CASE("linear-model gradient has the closed form s(1-s)x") {
  Rng rng(9);
  ScoringModel m = random_model(rng, kDenseDim, 0, HiddenActivation::Tanh);
  FeatureVector x = random_features(rng, 0);
  double dloss = 1.7;
  double s = score(m, x);
  Gradient g = backward(m, x, dloss);
  for (std::size_t i = 0; i < kDenseDim; ++i) {
    CHECK_THAT(g.w2[i],
               Catch::Matchers::WithinRel(dloss * s * (1.0 - s) * x.dense[i], 1e-12) ||
                   Catch::Matchers::WithinAbs(0.0, 1e-15));
  }
  CHECK_THAT(g.b2, Catch::Matchers::WithinRel(dloss * s * (1.0 - s), 1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(11);
  const std::vector<std::pair<std::size_t, std::size_t>> shapes = {
      {kDenseDim, 0}, {kDenseDim + 6, 0}, {kDenseDim + 3, 4}, {kDenseDim + 8, 4},
      {kDenseDim, 8}};
  for (int trial = 0; trial < 60; ++trial) {
    auto [input_dim, hidden_dim] = shapes[trial % shapes.size()];
    auto act = trial % 3 == 0 ? HiddenActivation::Sigmoid : HiddenActivation::Tanh;
    ScoringModel m = random_model(rng, input_dim, hidden_dim, act);
    FeatureVector x = random_features(rng, input_dim - kDenseDim);
    double dloss = rng.next_double(-2.0, 2.0);
    Gradient analytic = backward(m, x, dloss);
    Gradient fd = fd_gradient(m, x, dloss);
    check_close(analytic.w1, fd.w1, 1e-4);
    check_close(analytic.b1, fd.b1, 1e-4);
    check_close(analytic.w2, fd.w2, 1e-4);
    check_close({analytic.b2}, {fd.b2}, 1e-4);
  }
}

TEST_CASE("adagrad first step moves by about -lr*sign(g)") {
  ScoringModel m = init_model(kDenseDim, 0, 1);
  std::vector<double> before = m.w2;
  Gradient g = Gradient::zeros_like(m);
  g.w2[3] = 0.25;
  g.w2[5] = -1.5;
  adagrad_step(m, g, 0.1);
  // First step: accum = g^2, so the update is lr*g/(|g| + delta) = lr*sign(g).
  CHECK_THAT(m.w2[3] - before[3], Catch::Matchers::WithinAbs(-0.1, 1e-7));
  CHECK_THAT(m.w2[5] - before[5], Catch::Matchers::WithinAbs(0.1, 1e-7));
  CHECK(m.w2[0] == before[0]);  // zero gradient leaves params alone
}

TEST_CASE("repeated identical adagrad steps shrink") {
  ScoringModel m = init_model(kDenseDim, 0, 1);
  Gradient g = Gradient::zeros_like(m);
  g.w2[0] = 0.5;
  double p0 = m.w2[0];
  adagrad_step(m, g, 0.1);
  double step1 = p0 - m.w2[0];
  double p1 = m.w2[0];
  adagrad_step(m, g, 0.1);
  double step2 = p1 - m.w2[0];
  CHECK(step1 > 0.0);
  CHECK(step2 > 0.0);
  CHECK(step2 < step1);
}

TEST_CASE("adagrad accumulators never decrease") {
  Rng rng(13);
  ScoringModel m = random_model(rng, 20, 3, HiddenActivation::Tanh);
  std::vector<double> prev = m.acc_w2;
  for (int step = 0; step < 20; ++step) {
    FeatureVector x = random_features(rng, 4);
    Gradient g = backward(m, x, rng.next_double(-1.0, 1.0));
    adagrad_step(m, g, 0.1);
    for (std::size_t i = 0; i < m.acc_w2.size(); ++i) {
      CHECK(m.acc_w2[i] >= prev[i]);
    }
    prev = m.acc_w2;
  }
}

TEST_CASE("init is deterministic and bounded") {
  ScoringModel a = init_model(30, 5, 1234);
  ScoringModel b = init_model(30, 5, 1234);
  CHECK(a.w1 == b.w1);
  CHECK(a.w2 == b.w2);
  ScoringModel c = init_model(30, 5, 1235);
  CHECK(a.w1 != c.w1);
  for (double w : a.w1) {
    CHECK(w >= -0.01);
    CHECK(w <= 0.01);
  }
  for (double bias : a.b1) CHECK(bias == 0.0);
  CHECK(a.b2 == 0.0);
  ScoringModel flat = init_model(20, 0, 9);
  CHECK(flat.w1.empty());
  CHECK(flat.w2.size() == 20);
}

TEST_CASE("model serialization round-trips scores exactly") {
  Rng rng(15);
  FeatureStore store;
  store.add({SparseTemplate::QWord, "pay"});
  store.add({SparseTemplate::Pair, "pay bill"});
  store.add({SparseTemplate::CWord, "bill"});
  ScoringModel m = random_model(rng, kDenseDim + store.size(), 4,
                                HiddenActivation::Tanh);
  // Touch the accumulators so they are nontrivial.
  FeatureVector probe = random_features(rng, store.size());
  adagrad_step(m, backward(m, probe, 0.8), 0.1);

  std::ostringstream out;
  save_model_stream(m, store, out);
  std::istringstream in(out.str());
  LoadedModel lm = load_model_stream(in);
  CHECK(lm.store.size() == store.size());
  CHECK(lm.store.find({SparseTemplate::Pair, "pay bill"}) == 1);
  for (int i = 0; i < 20; ++i) {
    FeatureVector x = random_features(rng, store.size());
    CHECK(score(lm.model, x) == score(m, x));
  }
  // Serialization is byte-stable across a round-trip.
  std::ostringstream out2;
  save_model_stream(lm.model, lm.store, out2);
  CHECK(out.str() == out2.str());
}
