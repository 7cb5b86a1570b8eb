#include "doctest.h"

#include "citlab/additive_spline.hpp"
#include "citlab/learners.hpp"
#include "citlab/rng.hpp"

#include <cmath>

using namespace citlab;

namespace {

MatrixXd normal_matrix(Index n, Index p, std::uint64_t seed) {
  NormalSource z(make_stream(seed, StreamPurpose::misc));
  MatrixXd x(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < p; ++k) x(i, k) = z();
  return x;
}

double l2(const VectorXd& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(v.size())); }

LearnerConfig spline_config() {
  LearnerConfig c;
  c.kind = LearnerKind::additive_spline;
  return c;
}

}  // namespace

TEST_CASE("ols recovers an exact line") {
  MatrixXd x(6, 1);
  x << -2, -1, 0, 1, 2, 5;
  const VectorXd y = (1.5 + 0.25 * x.col(0).array()).matrix();
  const auto m = fit_ols(x, y);
  CHECK(std::abs(m->coefficients()(0) - 0.25) < 1e-10);
  CHECK(std::abs(m->intercept() - 1.5) < 1e-10);
}

TEST_CASE("ols predict on y = 2x") {
  MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  const VectorXd y = 2.0 * x.col(0);
  const auto m = fit_ols(x, y, false);
  MatrixXd q(1, 1);
  q << 3;
  CHECK(std::abs(m->predict(q)(0) - 6.0) < 1e-10);
}

TEST_CASE("predict on zero rows leaves counters unchanged") {
  MatrixXd x = normal_matrix(20, 2, 1);
  const auto m = fit_ols(x, x.col(0));
  CostCounters c;
  const VectorXd out = m->predict(MatrixXd(0, 2), c, PredictTag::y_given_x);
  CHECK(out.size() == 0);
  CHECK(c.snapshot() == CounterSnapshot{});
  CHECK_THROWS_AS(m->predict(MatrixXd::Zero(3, 3)), InvalidInput);
}

TEST_CASE("ols on a rank-deficient design throws") {
  MatrixXd x = normal_matrix(30, 2, 2);
  x.col(1) = 2.0 * x.col(0);
  LearnerConfig c;
  c.kind = LearnerKind::ols;
  CHECK_THROWS_AS(fit(c, x, x.col(0)), NumericalError);
  c.kind = LearnerKind::ridge;
  c.ridge_lambda = 0.1;
  CHECK_NOTHROW(fit(c, x, x.col(0)));
}

TEST_CASE("ridge approaches ols as lambda goes to zero") {
  const MatrixXd x = normal_matrix(100, 4, 3);
  NormalSource z(make_stream(4, StreamPurpose::misc));
  VectorXd y(100);
  for (Index i = 0; i < 100; ++i) y(i) = x(i, 0) - 2 * x(i, 3) + 0.5 + z();
  const auto o = fit_ols(x, y);
  const auto r = fit_ridge(x, y, 1e-10);
  CHECK((o->coefficients() - r->coefficients()).norm() < 1e-6);
  CHECK(std::abs(o->intercept() - r->intercept()) < 1e-6);
}

TEST_CASE("fit records exactly one fit under the given tag") {
  const MatrixXd x = normal_matrix(50, 3, 5);
  CostCounters c;
  LearnerConfig cfg;
  cfg.kind = LearnerKind::ols;
  fit(cfg, x, x.col(0), &c, FitTag::xj_given_rest);
  CHECK(c.snapshot().ml_xj_given_rest == 1);
  CHECK(c.snapshot().ml_y_given_x == 0);
  fit(spline_config(), x, x.col(0), &c, FitTag::y_given_x);
  CHECK(c.snapshot().ml_y_given_x == 1);
  const auto m = fit(spline_config(), x, x.col(0));
  m->predict(x, c, PredictTag::y_given_x);
  CHECK(c.snapshot().predict_y_given_x == 1);
  CHECK(c.snapshot().rows_predicted == 50);
}

TEST_CASE("oracle learner reproduces the known mean") {
  auto truth = std::make_shared<AdditiveFunctionModel>(
      3, 0.0,
      std::vector<AdditiveFunctionModel::Term>{
          {0, [](double v) { return (v - 0.3) * (v - 0.3) / std::sqrt(2.0); }},
          {1, [](double v) { return -std::cos(v); }}});
  LearnerConfig cfg;
  cfg.kind = LearnerKind::oracle;
  cfg.oracle = truth;
  const MatrixXd x = normal_matrix(40, 3, 6);
  CostCounters c;
  const auto m = fit(cfg, x, VectorXd::Zero(40), &c);
  const VectorXd pred = m->predict(x);
  for (Index i = 0; i < 40; ++i)
    CHECK(pred(i) == (x(i, 0) - 0.3) * (x(i, 0) - 0.3) / std::sqrt(2.0) - std::cos(x(i, 1)));
  LearnerConfig bad;
  bad.kind = LearnerKind::oracle;
  CHECK_THROWS_AS(fit(bad, x, VectorXd::Zero(40)), InvalidInput);
}

TEST_CASE("learner config validation") {
  LearnerConfig c = spline_config();
  c.spline_basis_size = 3;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = spline_config();
  c.spline_lambda_grid.clear();
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  CHECK(learner_kind_from_string("gam") == LearnerKind::additive_spline);
  CHECK_THROWS_AS(learner_kind_from_string("forest"), InvalidInput);
}

TEST_CASE("cubic spline basis is a partition of unity with linear tails") {
  const CubicBSpline s(-1.0, 2.0, 10);
  for (double v : {-3.0, -1.0, -0.2, 0.5, 1.99, 2.0, 4.0}) {
    Eigen::RowVectorXd r(10);
    s.basis_row(v, r);
    CHECK(std::abs(r.sum() - 1.0) < 1e-12);
  }
  // A linear coefficient sequence reproduces a linear function everywhere.
  VectorXd c(10);
  for (int k = 0; k < 10; ++k) c(k) = 0.7 * k - 1.0;
  const double f0 = s.evaluate(c, 0.0);
  const double f1 = s.evaluate(c, 1.0);
  CHECK(std::abs(s.evaluate(c, 3.5) - (f0 + 3.5 * (f1 - f0))) < 1e-10);
  CHECK(std::abs(s.evaluate(c, -2.5) - (f0 - 2.5 * (f1 - f0))) < 1e-10);
}

TEST_CASE("additive spline fits a quadratic closely") {
  const Index n = 500;
  MatrixXd x(n, 1);
  for (Index i = 0; i < n; ++i) x(i, 0) = -2.0 + 4.0 * i / (n - 1);
  VectorXd y = ((x.col(0).array() - 0.3).square()).matrix();
  const auto m = fit_additive_spline(spline_config(), x, y);
  CHECK(l2(m->predict(x) - y) < 0.05);
}

TEST_CASE("additive spline matches dense penalized normal equations") {
  for (std::uint64_t seed : {10u, 11u, 12u}) {
    const Index n = 150;
    const MatrixXd x = normal_matrix(n, 3, seed);
    NormalSource z(make_stream(seed + 100, StreamPurpose::misc));
    VectorXd y(n);
    for (Index i = 0; i < n; ++i) y(i) = std::sin(x(i, 0)) + 0.3 * x(i, 1) * x(i, 1) + 0.5 * z();
    LearnerConfig cfg = spline_config();
    const auto m = fit_additive_spline(cfg, x, y);

    const AdditiveSplineBasis basis(x, cfg.spline_basis_size, cfg.spline_shrinkage);
    const MatrixXd d = basis.design(x);
    const MatrixXd s = basis.penalty();
    const double mm = static_cast<double>(n);
    const VectorXd yc = (y.array() - y.mean()).matrix();
    const MatrixXd lhs = d.transpose() * d / mm + m->lambda() * s;
    const VectorXd beta = lhs.ldlt().solve(d.transpose() * yc / mm);
    const VectorXd brute = (d * beta).array() + y.mean();
    CHECK((m->predict(x) - brute).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("additive spline on a dual-form problem (more columns than rows)") {
  const Index n = 40;
  const MatrixXd x = normal_matrix(n, 8, 20);
  const VectorXd y = x.col(0) + x.col(1).cwiseAbs();
  LearnerConfig cfg = spline_config();
  const auto m = fit_additive_spline(cfg, x, y);
  const AdditiveSplineBasis basis(x, cfg.spline_basis_size, cfg.spline_shrinkage);
  CHECK(basis.width() > n);
  const MatrixXd d = basis.design(x);
  const MatrixXd lhs = d.transpose() * d / n + m->lambda() * basis.penalty();
  const VectorXd beta = lhs.ldlt().solve(d.transpose() * (y.array() - y.mean()).matrix() / n);
  const VectorXd brute = (d * beta).array() + y.mean();
  CHECK((m->predict(x) - brute).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("additive spline on constant targets") {
  const MatrixXd x = normal_matrix(80, 3, 21);
  const auto m = fit_additive_spline(spline_config(), x, VectorXd::Constant(80, 2.5));
  CHECK((m->predict(x).array() - 2.5).abs().maxCoeff() < 1e-8);
}

TEST_CASE("additive spline drops constant columns") {
  MatrixXd x = normal_matrix(60, 2, 22);
  x.col(1).setConstant(4.0);
  const auto m = fit_additive_spline(spline_config(), x, x.col(0));
  CHECK(m->components().size() == 1);
  CHECK(m->component(1, x.col(1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("additive spline shrinks noise components") {
  const Index n = 600;
  const MatrixXd x = normal_matrix(n, 5, 23);
  NormalSource z(make_stream(24, StreamPurpose::misc));
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) y(i) = (x(i, 0) - 0.3) * (x(i, 0) - 0.3) + 0.5 * z();
  const auto m = fit_additive_spline(spline_config(), x, y);
  const double signal = l2(m->component(0, x.col(0)));
  for (Index k = 1; k < 5; ++k) CHECK(l2(m->component(k, x.col(k))) < 0.1 * signal);
}

TEST_CASE("additive spline on targets independent of x") {
  const Index n = 600;
  const MatrixXd x = normal_matrix(n, 5, 25);
  NormalSource z(make_stream(26, StreamPurpose::misc));
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) y(i) = z();
  const auto m = fit_additive_spline(spline_config(), x, y);
  const double sd = std::sqrt((y.array() - y.mean()).square().sum() / (n - 1));
  for (Index k = 0; k < 5; ++k) CHECK(l2(m->component(k, x.col(k))) < 0.05 * sd);
}

TEST_CASE("additive spline component of a linear target is linear") {
  const Index n = 300;
  const MatrixXd x = normal_matrix(n, 2, 27);
  const VectorXd y = 1.7 * x.col(0) - 0.4 * x.col(1);
  const auto m = fit_additive_spline(spline_config(), x, y);
  const VectorXd g = m->component(0, x.col(0));
  const auto line = fit_ols(x.leftCols(1), g);
  const VectorXd resid = g - line->predict(x.leftCols(1));
  const double r2 = 1.0 - resid.squaredNorm() / (g.array() - g.mean()).square().sum();
  CHECK(r2 > 0.999);
}

TEST_CASE("fits and predictions are bit-for-bit deterministic") {
  const MatrixXd x = normal_matrix(120, 4, 28);
  const VectorXd y = x.col(0).array().sin().matrix() + x.col(2);
  const auto a = fit_additive_spline(spline_config(), x, y);
  const auto b = fit_additive_spline(spline_config(), x, y);
  CHECK(a->predict(x) == b->predict(x));
}

TEST_CASE("column substitution agrees with direct prediction") {
  const Index n = 100;
  const MatrixXd x = normal_matrix(n, 3, 29);
  const VectorXd y = x.col(0).array().cos().matrix() + x.col(1);
  const VectorXd values = normal_matrix(n, 1, 30).col(0);
  std::vector<RegressionPtr> models{fit_additive_spline(spline_config(), x, y), fit_ols(x, y)};
  models.push_back(std::make_shared<FunctionModel>(
      3, [](const Eigen::Ref<const Eigen::RowVectorXd>& r) { return r(0) * r(1) + r(2); }));
  for (const auto& m : models) {
    for (Index j = 0; j < 3; ++j) {
      const VectorXd base = m->predict(x);
      const auto sub = m->substitution(x, j, base);
      VectorXd out;
      CostCounters c;
      sub->evaluate(values, out, &c);
      MatrixXd xs = x;
      xs.col(j) = values;
      CHECK((out - m->predict(xs)).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(c.snapshot().predict_y_given_x == 1);
      sub->evaluate(x.col(j), out);
      CHECK((out - base).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("substitution of a column the model ignores returns the base exactly") {
  const MatrixXd x = normal_matrix(50, 3, 31);
  const auto m = std::make_shared<LinearModel>(Eigen::Vector3d(1.0, 0.0, 2.0), 0.5);
  const VectorXd base = m->predict(x);
  VectorXd out;
  m->substitution(x, 1, base)->evaluate(normal_matrix(50, 1, 32).col(0), out);
  CHECK(out == base);
}
