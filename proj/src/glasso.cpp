#include "citlab/glasso.hpp"

#include "citlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace citlab {

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double mean_abs_offdiagonal(const MatrixXd& s) {
  const Index p = s.rows();
  if (p < 2) return 1.0;
  const double total = s.cwiseAbs().sum() - s.diagonal().cwiseAbs().sum();
  const double m = total / static_cast<double>(p * (p - 1));
  return m > 0.0 ? m : 1.0;
}

MatrixXd precision_from(const MatrixXd& w, const MatrixXd& beta) {
  const Index p = w.rows();
  MatrixXd theta = MatrixXd::Zero(p, p);
  for (Index j = 0; j < p; ++j) {
    double quad = w(j, j);
    for (Index k = 0; k < p; ++k)
      if (k != j) quad -= w(k, j) * beta(k, j);
    if (!(quad > 0.0)) throw NumericalError("graphical lasso: non-positive Schur complement");
    const double tjj = 1.0 / quad;
    theta(j, j) = tjj;
    for (Index k = 0; k < p; ++k)
      if (k != j) theta(k, j) = -beta(k, j) * tjj;
  }
  return 0.5 * (theta + theta.transpose());
}

}  // namespace

GlassoSolution graphical_lasso(const MatrixXd& s, double lambda, const GlassoSolution* warm,
                               const GlassoOptions& options) {
  const Index p = s.rows();
  if (p < 1 || s.cols() != p) throw InvalidInput("graphical lasso: covariance must be square");
  if (!(lambda >= 0.0)) throw InvalidInput("graphical lasso: lambda must be >= 0");
  for (Index i = 0; i < p; ++i)
    if (!(s(i, i) > 0.0)) throw InvalidInput("graphical lasso: covariance diagonal must be positive");

  GlassoSolution sol;
  sol.covariance = s;
  sol.regression = MatrixXd::Zero(p, p);
  if (warm != nullptr && warm->covariance.rows() == p && warm->regression.rows() == p) {
    sol.covariance = warm->covariance;
    sol.covariance.diagonal() = s.diagonal();
    sol.regression = warm->regression;
  }
  MatrixXd& w = sol.covariance;
  MatrixXd& beta = sol.regression;
  const double scale = mean_abs_offdiagonal(s);

  VectorXd b(p);
  VectorXd wb(p);
  for (int sweep = 1; sweep <= options.max_sweeps && p > 1; ++sweep) {
    double change = 0.0;
    for (Index j = 0; j < p; ++j) {
      b = beta.col(j);
      b(j) = 0.0;
      wb = w * b;
      for (int it = 0; it < options.max_inner_iterations; ++it) {
        double max_delta = 0.0;
        for (Index k = 0; k < p; ++k) {
          if (k == j) continue;
          const double r = s(k, j) - (wb(k) - w(k, k) * b(k));
          const double nb = soft_threshold(r, lambda) / w(k, k);
          const double d = nb - b(k);
          if (d != 0.0) {
            wb += d * w.col(k);
            b(k) = nb;
            max_delta = std::max(max_delta, std::abs(d));
          }
        }
        if (max_delta < options.tolerance) break;
      }
      for (Index k = 0; k < p; ++k) {
        if (k == j) continue;
        change += std::abs(wb(k) - w(k, j));
        w(k, j) = wb(k);
        w(j, k) = wb(k);
      }
      beta.col(j) = b;
    }
    sol.sweeps = sweep;
    if (change / static_cast<double>(p * (p - 1)) < options.tolerance * scale) {
      sol.converged = true;
      break;
    }
  }
  if (p == 1) sol.converged = true;
  sol.precision = precision_from(w, beta);
  return sol;
}

double glasso_kkt_residual(const MatrixXd& s, const MatrixXd& precision, double lambda,
                           double zero_tolerance) {
  const Index p = precision.rows();
  if (s.rows() != p || s.cols() != p) throw InvalidInput("glasso kkt: size mismatch");
  Eigen::LLT<MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("glasso kkt: precision not positive definite");
  const MatrixXd w = llt.solve(MatrixXd::Identity(p, p));
  double worst = 0.0;
  for (Index i = 0; i < p; ++i) {
    for (Index k = 0; k < p; ++k) {
      const double g = s(i, k) - w(i, k);
      double r;
      if (i == k)
        r = std::abs(g);
      else if (std::abs(precision(i, k)) <= zero_tolerance)
        r = std::max(0.0, std::abs(g) - lambda);
      else
        r = std::abs(g + lambda * (precision(i, k) > 0.0 ? 1.0 : -1.0));
      worst = std::max(worst, r);
    }
  }
  return worst;
}

std::vector<double> glasso_lambda_grid(const MatrixXd& s, int points, double min_ratio) {
  if (points < 1) throw InvalidInput("glasso grid: need at least one point");
  if (!(min_ratio > 0.0 && min_ratio <= 1.0)) throw InvalidInput("glasso grid: bad min_ratio");
  double lmax = 0.0;
  for (Index i = 0; i < s.rows(); ++i)
    for (Index k = 0; k < s.cols(); ++k)
      if (i != k) lmax = std::max(lmax, std::abs(s(i, k)));
  if (!(lmax > 0.0)) lmax = 1.0;
  std::vector<double> grid;
  if (points == 1) return {lmax};
  const double lo = std::log(lmax * min_ratio);
  const double hi = std::log(lmax);
  for (int i = 0; i < points; ++i) grid.push_back(std::exp(hi + (lo - hi) * i / (points - 1)));
  return grid;
}

GlassoCvResult fit_graphical_lasso_cv(const MatrixXd& x, std::vector<double> lambda_grid,
                                      int cv_folds, std::uint64_t seed,
                                      const GlassoOptions& options) {
  if (lambda_grid.empty()) throw InvalidInput("graphical lasso: lambda grid is empty");
  if (cv_folds < 2) throw InvalidInput("graphical lasso: cv_folds must be >= 2");
  if (!x.allFinite()) throw InvalidInput("graphical lasso: non-finite entries");
  const Index n = x.rows();
  if (n < 2 * cv_folds) throw InvalidInput("graphical lasso: too few rows for the folds");
  for (double l : lambda_grid)
    if (!(l >= 0.0)) throw InvalidInput("graphical lasso: lambdas must be >= 0");
  std::sort(lambda_grid.begin(), lambda_grid.end(), std::greater<>());

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Engine engine = make_stream(seed, StreamPurpose::cv);
  for (Index i = n - 1; i > 0; --i)
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[uniform_below(engine, static_cast<std::uint64_t>(i + 1))]);

  GlassoCvResult result;
  result.lambdas = lambda_grid;
  result.cv_loglik.assign(lambda_grid.size(), 0.0);
  for (int fold = 0; fold < cv_folds; ++fold) {
    std::vector<Index> train;
    std::vector<Index> test;
    for (Index i = 0; i < n; ++i)
      (i % cv_folds == fold ? test : train).push_back(perm[static_cast<std::size_t>(i)]);
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    const MatrixXd s_train = sample_covariance(select_rows(x, train));
    const MatrixXd xt = select_rows(x, test);
    const MatrixXd ct = xt.rowwise() - xt.colwise().mean();
    const MatrixXd s_test = ct.transpose() * ct / static_cast<double>(xt.rows());
    GlassoSolution prev;
    bool have_prev = false;
    for (std::size_t l = 0; l < lambda_grid.size(); ++l) {
      GlassoSolution sol = graphical_lasso(s_train, lambda_grid[l], have_prev ? &prev : nullptr, options);
      if (!sol.converged) result.converged = false;
      Eigen::LLT<MatrixXd> llt(sol.precision);
      double ll = -std::numeric_limits<double>::infinity();
      if (llt.info() == Eigen::Success) {
        const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        ll = logdet - (s_test.cwiseProduct(sol.precision)).sum();
      }
      result.cv_loglik[l] += ll / cv_folds;
      prev = std::move(sol);
      have_prev = true;
    }
  }

  std::size_t best = 0;
  for (std::size_t l = 1; l < lambda_grid.size(); ++l)
    if (result.cv_loglik[l] > result.cv_loglik[best]) best = l;
  result.selected = best;
  result.selected_lambda = lambda_grid[best];

  const MatrixXd s = sample_covariance(x);
  GlassoSolution sol;
  for (std::size_t l = 0; l <= best; ++l) {
    GlassoSolution next = graphical_lasso(s, lambda_grid[l], l == 0 ? nullptr : &sol, options);
    sol = std::move(next);
  }
  if (!sol.converged) result.converged = false;
  result.kkt_residual = glasso_kkt_residual(s, sol.precision, result.selected_lambda);
  result.model = GaussianModel(x.colwise().mean().transpose(), sol.precision,
                               GaussianEstimator::glasso);
  return result;
}

GaussianModel fit_graphical_lasso(const MatrixXd& x, const std::vector<double>& lambda_grid,
                                  int cv_folds, std::uint64_t seed) {
  GlassoCvResult cv = fit_graphical_lasso_cv(x, lambda_grid, cv_folds, seed);
  if (!cv.converged)
    throw NumericalError("graphical lasso: coordinate descent did not converge within max sweeps");
  return cv.model;
}

}  // namespace citlab
