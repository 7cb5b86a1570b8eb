#pragma once

#include "citlab/gaussian.hpp"

#include <vector>

namespace citlab {

struct GlassoOptions {
  int max_sweeps = 2000;
  int max_inner_iterations = 20000;
  double tolerance = 1e-10;
};

struct GlassoSolution {
  MatrixXd precision;
  MatrixXd covariance;  // working W, the inverse of precision at convergence
  MatrixXd regression;  // column j holds the lasso coefficients of column j (zero at j)
  int sweeps = 0;
  bool converged = false;
};

/// Graphical lasso on covariance `s` with off-diagonal penalty `lambda`
/// (diagonal unpenalized), by blockwise coordinate descent on W = Theta^{-1}.
/// `warm` seeds W and the per-column regressions.
GlassoSolution graphical_lasso(const MatrixXd& s, double lambda,
                               const GlassoSolution* warm = nullptr,
                               const GlassoOptions& options = {});

/// Largest violation of the stationarity conditions at `precision`.
double glasso_kkt_residual(const MatrixXd& s, const MatrixXd& precision, double lambda,
                           double zero_tolerance = 1e-12);

/// max off-diagonal |S_ij| down to max * min_ratio, log-spaced, descending.
std::vector<double> glasso_lambda_grid(const MatrixXd& s, int points, double min_ratio);

struct GlassoCvResult {
  GaussianModel model;
  std::vector<double> lambdas;
  std::vector<double> cv_loglik;  // mean held-out Gaussian log-likelihood per lambda
  std::size_t selected = 0;
  double selected_lambda = 0.0;
  double kkt_residual = 0.0;
  bool converged = true;
};

/// K-fold cross-validated graphical lasso; the selected lambda maximizes the
/// held-out log-likelihood log det Theta - tr(S_test Theta).
GlassoCvResult fit_graphical_lasso_cv(const MatrixXd& x, std::vector<double> lambda_grid,
                                      int cv_folds, std::uint64_t seed = 0,
                                      const GlassoOptions& options = {});

GaussianModel fit_graphical_lasso(const MatrixXd& x, const std::vector<double>& lambda_grid,
                                  int cv_folds, std::uint64_t seed = 0);

}  // namespace citlab
