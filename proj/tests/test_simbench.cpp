#include "citlab/simbench.hpp"

#include <doctest.h>

#include <cmath>

using namespace citlab;

namespace {

SimLearners ols_sample() {
  SimLearners l;
  l.learner.kind = LearnerKind::ols;
  l.gaussian.estimator = GaussianEstimator::sample;
  return l;
}

SimConfig small_config() {
  SimConfig c;
  c.n = 200;
  c.p = 6;
  c.s = 2;
  c.theta = 0.5;
  return c;
}

ReplicateResult fixture(int setting, int rep, std::vector<bool> rej, std::vector<bool> truth) {
  ReplicateResult r;
  r.setting = setting;
  r.replicate = rep;
  r.method = Method::tpcm;
  r.rejections = std::move(rej);
  r.truth = std::move(truth);
  r.pvalues.assign(r.rejections.size(), 0.5);
  r.wall_time = 1.0 + rep;
  return r;
}

SettingInfo setting_for(const SimConfig& c) {
  SettingInfo s;
  s.vary = "theta";
  s.value = c.theta;
  s.config = c;
  s.methods = {Method::tpcm};
  return s;
}

}  // namespace

TEST_CASE("gam dgp structure") {
  SimConfig c = small_config();
  c.s = c.p;
  const GamInstance g = generate_gam_dgp(c, 5);
  CHECK(g.data.rows() == 200);
  CHECK(g.data.cols() == 6);
  const auto& m = *g.true_mean;
  REQUIRE(m.is_additive());
  VectorXd v(1);
  v << 0.3;
  CHECK(std::abs(m.component(0, v)(0)) == 0.0);  // coordinate 1 is odd
  v << 0.0;
  CHECK(m.component(1, v)(0) == doctest::Approx(-c.theta));
  v << 1.3;
  CHECK(m.component(2, v)(0) == doctest::Approx(c.theta / std::sqrt(2.0)));
  CHECK((g.true_law.covariance() - ar1_covariance(6, 0.5)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gam dgp global null has a zero mean") {
  SimConfig c = small_config();
  c.theta = 0.0;
  const GamInstance g = generate_gam_dgp(c, 6);
  CHECK(g.true_mean->predict(g.data.x).cwiseAbs().maxCoeff() == 0.0);
  c.s = 7;
  CHECK_THROWS_AS(generate_gam_dgp(c, 6), InvalidInput);
}

TEST_CASE("nonnull set has exactly s members and can be pinned") {
  SimConfig c = small_config();
  c.p = 20;
  c.s = 5;
  int differs = 0;
  const auto first = generate_gam_dgp(c, 1).truth;
  for (std::uint64_t r = 2; r < 8; ++r) {
    const auto t = generate_gam_dgp(c, r).truth;
    CHECK(std::count(t.begin(), t.end(), true) == 5);
    if (t != first) ++differs;
  }
  CHECK(differs > 0);
  c.nonnull_seed = 99;
  CHECK(generate_gam_dgp(c, 1).truth == generate_gam_dgp(c, 2).truth);
  CHECK(draw_nonnull_set(4, 0, 1) == std::vector<bool>(4, false));
}

TEST_CASE("oracle gcm replicate performs no fits") {
  SimConfig c = small_config();
  c.theta = 0.0;
  const auto res = run_replicate(c, TestConfig{}, ols_sample(), {Method::oracle_gcm}, 3);
  REQUIRE(res.size() == 1);
  CHECK(res[0].error.empty());
  CHECK(res[0].counters.ml_y_given_x == 0);
  CHECK(res[0].counters.ml_x == 0);
  CHECK(res[0].counters.ml_xj_given_rest == 0);
}

TEST_CASE("tpcm replicate counters at the default setting") {
  const SimConfig c;
  SimLearners l;
  l.gaussian.estimator = GaussianEstimator::sample;
  const auto res = run_replicate(c, TestConfig{}, l, {Method::tpcm}, 4);
  REQUIRE(res.size() == 1);
  CHECK(res[0].error.empty());
  CHECK(res[0].counters.ml_y_given_x == 1);
  CHECK(res[0].counters.ml_x == 1);
  CHECK(res[0].counters.ml_xj_given_rest == 0);
  CHECK(res[0].counters.predict_xj_given_rest == 50 * 25);
  CHECK(res[0].counters.predict_y_given_x == 50 * 25);
}

TEST_CASE("replicates are deterministic and share tpcm/hrt fits") {
  const SimConfig c = small_config();
  TestConfig t;
  t.b_hrt = 199;
  const std::vector<Method> methods{Method::tpcm, Method::hrt, Method::vpcm, Method::oracle_gcm,
                                    Method::tgcm};
  const auto a = run_replicate(c, t, ols_sample(), methods, 8);
  const auto b = run_replicate(c, t, ols_sample(), methods, 8);
  REQUIRE(a.size() == 5);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].error.empty());
    CHECK(a[k].rejections == b[k].rejections);
    CHECK(a[k].pvalues == b[k].pvalues);
  }
  CHECK(a[0].shared_fit);
  CHECK(a[1].shared_fit);
  CHECK_FALSE(a[2].shared_fit);
  CHECK(a[1].counters.ml_y_given_x == 1);
  CHECK(a[1].counters.predict_y_given_x == 6 * 199);
  const auto alone = run_replicate(c, t, ols_sample(), {Method::hrt}, 8);
  CHECK(alone[0].pvalues == a[1].pvalues);
}

TEST_CASE("plain gcm is recorded as a method error") {
  const auto res = run_replicate(small_config(), TestConfig{}, ols_sample(), {Method::gcm}, 1);
  CHECK_FALSE(res[0].error.empty());
  CHECK(res[0].rejections == std::vector<bool>(6, false));
}

TEST_CASE("grid runs every setting, replicate and method") {
  SimConfig base = small_config();
  base.methods = {Method::tpcm, Method::hrt, Method::oracle_gcm};
  TestConfig t;
  t.b_hrt = 99;
  GridOptions opt;
  opt.workers = 3;
  std::size_t calls = 0;
  opt.progress = [&](std::size_t, std::size_t) { ++calls; };
  const ResultStore store = run_grid(base, "n", {150, 200, 250}, 2, t, ols_sample(), opt);
  CHECK(store.settings.size() == 3);
  // HRT only at the default value n = 200.
  CHECK(store.results.size() == 2 * (2 + 3 + 2));
  CHECK(calls == 6);
  for (const auto& s : store.settings)
    CHECK((std::count(s.methods.begin(), s.methods.end(), Method::hrt) == 1) == (s.value == 200.0));

  opt.hrt_everywhere = true;
  opt.workers = 1;
  const ResultStore all = run_grid(base, "n", {150, 200, 250}, 2, t, ols_sample(), opt);
  CHECK(all.results.size() == 3 * 2 * 3);
  CHECK_THROWS_AS(run_grid(base, "lambda", {1.0}, 1, t, ols_sample()), InvalidInput);
}

TEST_CASE("grid results do not depend on the worker count") {
  SimConfig base = small_config();
  base.methods = {Method::tpcm, Method::vpcm};
  GridOptions one;
  GridOptions four;
  four.workers = 4;
  const auto a = run_grid(base, "theta", {0.0, 0.5}, 3, TestConfig{}, ols_sample(), one);
  const auto b = run_grid(base, "theta", {0.0, 0.5}, 3, TestConfig{}, ols_sample(), four);
  REQUIRE(a.results.size() == b.results.size());
  for (std::size_t k = 0; k < a.results.size(); ++k) {
    CHECK(a.results[k].pvalues == b.results[k].pvalues);
    CHECK(a.results[k].method == b.results[k].method);
  }
}

TEST_CASE("metrics on hand-built fixtures") {
  SimConfig c = small_config();
  c.p = 4;
  c.s = 2;
  ResultStore store;
  store.settings.push_back(setting_for(c));
  const std::vector<bool> truth{true, false, true, false};
  store.results.push_back(fixture(0, 0, {true, false, true, false}, truth));   // power 1
  store.results.push_back(fixture(0, 1, {true, true, false, false}, truth));   // false rej, 0.5
  store.results.push_back(fixture(0, 2, {false, false, false, false}, truth)); // 0
  store.results.push_back(fixture(0, 3, {false, false, true, true}, truth));   // false rej, 0.5
  const auto rows = compute_metrics(store);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].metric == "fwer");
  CHECK(*rows[0].estimate == doctest::Approx(0.5));
  CHECK(*rows[0].mc_se == doctest::Approx(0.25));
  CHECK(rows[1].metric == "power");
  CHECK(*rows[1].estimate == doctest::Approx(0.5));
  CHECK(rows[2].metric == "time");
  CHECK(*rows[2].estimate == doctest::Approx(2.5));
}

TEST_CASE("metrics edge cases") {
  SimConfig c = small_config();
  c.p = 3;
  c.s = 1;
  ResultStore none;
  none.settings.push_back(setting_for(c));
  none.results.push_back(fixture(0, 0, {false, false, false}, {true, false, false}));
  none.results.push_back(fixture(0, 1, {false, false, false}, {false, true, false}));
  auto rows = compute_metrics(none);
  CHECK(*rows[0].estimate == 0.0);
  CHECK(*rows[1].estimate == 0.0);

  ResultStore perfect = none;
  perfect.results[0].rejections = {true, false, false};
  perfect.results[1].rejections = {false, true, false};
  rows = compute_metrics(perfect);
  CHECK(*rows[0].estimate == 0.0);
  CHECK(*rows[1].estimate == 1.0);

  ResultStore empty_s = none;
  empty_s.settings[0].config.s = 0;
  rows = compute_metrics(empty_s);
  CHECK_FALSE(rows[1].estimate.has_value());

  ResultStore null_setting = perfect;
  null_setting.settings[0].config.theta = 0.0;
  rows = compute_metrics(null_setting);
  CHECK(*rows[0].estimate == 1.0);
  CHECK_FALSE(rows[1].estimate.has_value());
  CHECK_THROWS_AS(compute_metrics(ResultStore{}), InvalidInput);
}

TEST_CASE("timing sweep resamples and fit counts") {
  CHECK(hrt_sweep_resamples(100, 0.05) == 10000);
  CHECK(hrt_sweep_resamples(200, 0.05) == 20000);
  SimConfig base = small_config();
  TestConfig t;
  const auto rows = timing_sweep(150, {4, 6}, {Method::tpcm, Method::vpcm, Method::hrt}, t, ols_sample(), base);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) {
    const auto p = static_cast<std::uint64_t>(r.p);
    if (r.method == Method::tpcm) {
      CHECK(r.counters.ml_y_given_x == 1);
      CHECK(r.counters.ml_x == 1);
      CHECK(r.resamples == 25);
    } else if (r.method == Method::vpcm) {
      CHECK(r.counters.ml_y_given_x == 2 * p + 1);
    } else {
      CHECK(r.resamples == hrt_sweep_resamples(r.p, 0.05));
      CHECK(r.counters.predict_y_given_x == p * static_cast<std::uint64_t>(r.resamples));
    }
  }
}
