#pragma once

#include "citlab/core.hpp"
#include "citlab/gaussian.hpp"
#include "citlab/learners.hpp"
#include "citlab/rng.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace citlab {

struct TestConfig {
  double alpha = 0.05;
  int b_tpcm = 25;
  int b_hrt = 5000;
  double train_proportion_tpcm_hrt = 0.4;
  double train_proportion_pcm = 0.3;
  Sided gcm_sided = Sided::two;
  int cross_fit_folds = 5;
  /// Tower resamples used by the GCM variants.
  int b_gcm = 25;
  /// When set, X_{-j} regressions of vPCM use only columns within this
  /// distance of j. Never inferred from the data.
  std::optional<int> banded_hint;
  int threads = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-observation quantities on D1 for one variable.
struct ResidualTrace {
  VectorXd eps;       // Y_i - m_j(X_{i,-j})
  VectorXd xi_hat;    // m(X_i) - m_j(X_{i,-j})
  VectorXd products;  // eps_i * xi_hat_i
  double sigma_hat = 0.0;
};

ResidualTrace make_trace(const VectorXd& y, const VectorXd& fitted, const VectorXd& tower);

/// sqrt(mean(L^2) - mean(L)^2).
double product_sigma(const VectorXd& products);
/// (sum L / sqrt n) / product_sigma(L).
double product_statistic(const VectorXd& products);

/// True when the spread of the products is negligible relative to `scale`.
bool degenerate_sigma(double sigma_hat, double scale);

/// Rescaled HRT statistic
/// (1 / (sqrt(n) sigma_n)) [sum R_i - 0.5 sum (xi_i^2 - second_moment_i)],
/// where second_moment_i estimates E[xi~_i^2 | X_{i,-j}, D2]. Passing the
/// trace of a resampled X~_j gives the resampled statistic.
double rhrt_statistic(const ResidualTrace& trace, const VectorXd& second_moment, double sigma_n);

/// Monte Carlo average of m(X~_j, X_{-j}) over b conditional draws per row.
/// `base` must equal m.predict(rows). Records b sampling and b prediction batches.
VectorXd tower_mean(const FittedRegression& m, const ConditionalLaw& law, const MatrixXd& rows,
                    const VectorXd& base, int b, Engine& engine, CostCounters* counters = nullptr);
VectorXd tower_mean(const FittedRegression& m, const GaussianModel& model, Index j,
                    const MatrixXd& rows, int b, Engine& engine, CostCounters* counters = nullptr);

/// Fitted nuisances of the split-based model-X tests: m and L(X) on D2, plus
/// the D1 data and fitted values m(X_D1).
struct SplitFits {
  SplitAssignment split;
  RegressionPtr m_hat;
  GaussianModel law;
  MatrixXd x1;
  VectorXd y1;
  VectorXd fitted1;
  CounterSnapshot counters;  // work of the learning step
  double seconds = 0.0;
};

SplitFits fit_split(const Dataset& data, const SplitAssignment& split, const LearnerConfig& learner,
                    const GaussianConfig& gaussian);

/// Per-variable passes reusing `fits`. The returned counters include the
/// learning step recorded in `fits`.
TestRun tpcm_from_fits(const SplitFits& fits, const TestConfig& config);
TestRun hrt_from_fits(const SplitFits& fits, const TestConfig& config);

TestOutcome tpcm_variable(const SplitFits& fits, Index j, int b, std::uint64_t seed);
TestOutcome hrt_variable(const SplitFits& fits, Index j, int b, std::uint64_t seed);
/// Same, with an explicit law for X_j | X_{-j} (j = law.variable).
TestOutcome tpcm_variable(const SplitFits& fits, const ConditionalLaw& law, int b, std::uint64_t seed);
TestOutcome hrt_variable(const SplitFits& fits, const ConditionalLaw& law, int b, std::uint64_t seed);

/// HRT p-value: (1 + #{resampled <= observed}) / (B + 1).
double hrt_pvalue(double observed, const std::vector<double>& resampled);

TestRun tpcm_test(const Dataset& data, const SplitAssignment& split, const LearnerConfig& learner,
                  const GaussianConfig& gaussian, const TestConfig& config);
TestRun hrt_test(const Dataset& data, const SplitAssignment& split, const LearnerConfig& learner,
                 const GaussianConfig& gaussian, const TestConfig& config);
TestRun vpcm_test(const Dataset& data, const SplitAssignment& split, const LearnerConfig& learner,
                  const TestConfig& config);

/// Generic GCM on full data. `tower_source(j)` returns m_j(X_{i,-j}) and
/// `cond_mean_source(j)` returns E[X_j | X_{i,-j}] for every row.
using RowSource = std::function<VectorXd(Index)>;
TestRun gcm_test(const Dataset& data, const RowSource& tower_source,
                 const RowSource& cond_mean_source, Sided sided);

/// GCM outcome from explicit residual vectors.
TestOutcome gcm_outcome(const VectorXd& eps, const VectorXd& x_resid, Sided sided);

/// GCM with the true mean and law: tower mean of the true m under the true
/// Gaussian with `b` draws, true conditional means, no splitting.
TestRun oracle_gcm_test(const Dataset& data, const FittedRegression& true_mean,
                        const GaussianModel& true_law, const TestConfig& config);

/// Fold labels 0..K-1 of near-equal sizes, randomly assigned.
std::vector<int> cross_fit_folds(Index rows, int folds, std::uint64_t seed);

/// Cross-fitted GCM with tower-based m_j. When `folds` is empty the labels
/// come from cross_fit_folds(config.cross_fit_folds, seed).
TestRun tgcm_test(const Dataset& data, const LearnerConfig& learner, const GaussianConfig& gaussian,
                  const TestConfig& config, std::vector<int> folds = {});

/// Cost-model counters a full run of `method` records on p variables.
/// tGCM assumes config.cross_fit_folds folds.
CounterSnapshot predicted_counters(Method method, Index p, const TestConfig& config);

/// Runs fn(0..count-1) on up to `threads` workers; rethrows the first error.
void parallel_for(Index count, int threads, const std::function<void(Index)>& fn);

}  // namespace citlab
