#pragma once

#include "citlab/ci_tests.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace citlab {

/// Both sides of
///   T^HRT = -(2 sigma_hat / sqrt n) T^tPCM + mean(xi_hat^2) + mean((Y - m_j)^2)
/// evaluated from one set of arrays on D1.
struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double error = 0.0;
};

IdentityCheck hrt_identity(const VectorXd& y, const VectorXd& fitted, const VectorXd& tower);

/// Computes the tower mean for `law` with b draws, then returns the identity error.
double check_hrt_identity(const SplitFits& fits, const ConditionalLaw& law, int b, std::uint64_t seed);
double check_hrt_identity(const SplitFits& fits, Index j, int b, std::uint64_t seed);

struct DecisionOptions {
  int b_tower = 25;    // tower mean and conditional second moments
  int b_hrt = 5000;
  int b_sigma = 1000;  // plug-in draws for sigma_n
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

struct DecisionCheck {
  bool agree = false;
  bool hrt_reject = false;
  bool rhrt_reject = false;
  double hrt_pvalue = 1.0;
  double rhrt_pvalue = 1.0;
  double hrt_statistic = 0.0;
  double rhrt_statistic = 0.0;
  double sigma_n = 0.0;
};

/// Runs the MSE-statistic HRT and the rescaled HRT on the same resampled
/// X~_j and compares their decisions. The rHRT p-value is
/// (1 + #{T~^r >= T^r}) / (B + 1).
DecisionCheck check_decision_identity(const SplitFits& fits, const ConditionalLaw& law,
                                      const DecisionOptions& options);
DecisionCheck check_decision_identity(const SplitFits& fits, Index j, const DecisionOptions& options);

/// Inputs of the assumption diagnostics for one variable. The expectations
/// are taken under `true_law`; `fitted_law` is the estimate L^ (nullopt when
/// it is not Gaussian).
struct DiagnosticInputs {
  MatrixXd x1;
  RegressionPtr m_hat;
  std::optional<ConditionalLaw> fitted_law;
  RegressionPtr true_mean;
  ConditionalLaw true_law;
  double noise_variance = 1.0;  // Var(Y | X)
};

/// Keys: sigma_n2, E2_L, E2_m_prime, E2_m, dr_product (sqrt n E_L E_m),
/// raw_chi2, raw_mse, raw_dr_product (the same without the 1/sigma_n^2
/// normalisation). Terms of the form 0/0 are reported as 0.
std::map<std::string, double> assumption_diagnostics(const DiagnosticInputs& in, int b,
                                                     std::uint64_t seed);

/// Linear model: X_{-j} has independent uniform coordinates with unit
/// variance, X_j = X_{-j}'eta + N(0,1), Y = beta X_j + X_{-j}'gamma + N(0,1),
/// with j = 0. m^ is OLS on all of X and L^ = N(OLS fit of X_j on X_{-j}, 1).
/// Each replicate draws n training and n test rows.
struct LinearSuiteConfig {
  std::vector<Index> n_grid{500, 2000};
  int reps = 500;
  VectorXd eta = default_eta();
  VectorXd gamma = default_gamma();
  double beta = 0.0;
  double alpha = 0.05;
  int b_tpcm = 25;
  int b_hrt = 5000;
  bool with_hrt = true;
  bool with_diagnostics = false;
  int b_diagnostics = 200;
  std::uint64_t seed = 0;
  int workers = 1;

  static VectorXd default_eta();
  static VectorXd default_gamma();
  void validate() const;
};

struct EquivalenceReport {
  Index n = 0;
  int reps = 0;
  double identity_max_abs_error = 0.0;
  double decision_agreement_rate = 0.0;
  double agreement_se = 0.0;
  double ks_statistic = 0.0;
  double ks_pvalue = 1.0;
  double level = 0.0;  // tPCM rejection rate
  double level_se = 0.0;
  double hrt_level = 0.0;
  /// Medians over replicates of the assumption_diagnostics keys.
  std::map<std::string, double> assumption_terms;
  std::vector<double> statistics;  // T^tPCM per replicate
};

struct LinearReplicate {
  double tpcm_statistic = 0.0;
  double tpcm_pvalue = 1.0;
  double hrt_pvalue = 1.0;
  double identity_error = 0.0;
  std::map<std::string, double> diagnostics;
};

LinearReplicate linear_replicate(const LinearSuiteConfig& config, Index n, int rep);

std::vector<EquivalenceReport> linear_model_suite(const LinearSuiteConfig& config);

}  // namespace citlab
