#pragma once

#include "citlab/core.hpp"
#include "citlab/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace citlab {

enum class GaussianEstimator { sample, banded, glasso, oracle };

std::string to_string(GaussianEstimator e);
GaussianEstimator gaussian_estimator_from_string(const std::string& name);

/// Floor applied to conditional variances before sampling.
inline constexpr double kConditionalVarianceFloor = 1e-8;

/// Law of X_j given X_{-j}: Normal(intercept + coefficients . x_{-j}, variance).
struct ConditionalLaw {
  Index variable = 0;
  VectorXd coefficients;  // length p - 1, ordered as the columns of x without j
  double intercept = 0.0;
  double variance = 1.0;

  /// Conditional mean for a full-width row (column `variable` is ignored).
  double mean(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  /// Conditional means for every row of a full-width matrix.
  VectorXd means(const MatrixXd& x) const;
  /// Conditional mean for a vector of the other p - 1 coordinates.
  double mean_given_rest(const VectorXd& z) const;
  /// sqrt(max(variance, floor)).
  double sampling_sd() const;
};

/// Multivariate normal predictor law in mean / precision form.
class GaussianModel {
 public:
  GaussianModel() = default;
  GaussianModel(VectorXd mean, MatrixXd precision, GaussianEstimator estimator);

  /// Known law given by its covariance (e.g. the true simulation law).
  static GaussianModel from_covariance(VectorXd mean, const MatrixXd& covariance,
                                       GaussianEstimator estimator = GaussianEstimator::oracle);

  Index dimension() const { return mean_.size(); }
  const VectorXd& mean() const { return mean_; }
  const MatrixXd& precision() const { return precision_; }
  GaussianEstimator estimator() const { return estimator_; }
  MatrixXd covariance() const;

  ConditionalLaw conditional_law(Index j) const;

 private:
  VectorXd mean_;
  MatrixXd precision_;
  GaussianEstimator estimator_ = GaussianEstimator::sample;
};

ConditionalLaw conditional_law(const GaussianModel& model, Index j);

/// `count` i.i.d. draws from the conditional law at X_{-j} = z.
VectorXd sample_conditional(const ConditionalLaw& law, const VectorXd& z, Index count,
                            Engine& engine);

/// One draw per row: out_i = means_i + sd * N(0, 1).
void sample_around(const VectorXd& means, double sd, NormalSource& normal, VectorXd& out);

GaussianModel fit_sample_gaussian(const MatrixXd& x);

/// Modified-Cholesky banded precision: regress each column on at most
/// `bandwidth` predecessors and assemble T' D^{-1} T.
GaussianModel fit_banded_precision(const MatrixXd& x, int bandwidth);

/// Unbiased sample covariance.
MatrixXd sample_covariance(const MatrixXd& x);

/// chi^2(N(mu, s2), N(nu, s2)) = exp((mu - nu)^2 / s2) - 1.
double chi2_gaussian(double mu, double nu, double sigma2);
/// chi^2(N(mu, s2), N(nu, t2)) for unequal variances; +inf when 2 t2 <= s2.
double chi2_gaussian(double mu, double s2, double nu, double t2);

/// Sigma_ij = rho^|i-j|.
MatrixXd ar1_covariance(Index p, double rho);

struct GaussianConfig {
  GaussianEstimator estimator = GaussianEstimator::glasso;
  int bandwidth = 1;
  int glasso_grid_size = 20;
  double glasso_min_ratio = 1e-6;
  int cv_folds = 5;
  std::uint64_t cv_seed = 0;
  /// Law returned when estimator == oracle.
  std::optional<GaussianModel> oracle;

  void validate() const;
};

/// Dispatches on the configured estimator and records one ML(X) fit.
GaussianModel fit_gaussian(const GaussianConfig& config, const MatrixXd& x,
                           CostCounters* counters = nullptr);

}  // namespace citlab
