#pragma once

#include "citlab/ci_tests.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace citlab {

struct SimConfig {
  Index n = 1200;
  Index p = 50;
  Index s = 12;
  double rho = 0.5;
  double theta = 0.25;
  double alpha = 0.05;
  int replicates = 400;
  std::vector<Method> methods{Method::tpcm, Method::vpcm, Method::hrt, Method::oracle_gcm};
  std::uint64_t seed = 0;
  /// When set, the nonnull set is drawn once from this seed and reused by
  /// every replicate; otherwise it is redrawn per replicate.
  std::optional<std::uint64_t> nonnull_seed;

  void validate() const;
};

/// Names accepted by run_grid / set_parameter.
inline const std::vector<std::string> kGridParameters{"n", "p", "s", "rho", "theta"};

double get_parameter(const SimConfig& config, const std::string& name);
void set_parameter(SimConfig& config, const std::string& name, double value);

struct GamInstance {
  Dataset data;
  std::vector<bool> truth;  // nonnull mask, exactly s entries set
  RegressionPtr true_mean;
  GaussianModel true_law;
};

/// X ~ N(0, AR1(rho)); Y | X ~ N(sum over S of f_i(X_i), 1) with
/// f_i(x) = theta (x - 0.3)^2 / sqrt 2 for odd 1-based i and -theta cos(x)
/// for even i.
GamInstance generate_gam_dgp(const SimConfig& config, std::uint64_t replicate_seed);

/// The S-draw used by generate_gam_dgp.
std::vector<bool> draw_nonnull_set(Index p, Index s, std::uint64_t seed);

struct ReplicateResult {
  int setting = 0;
  int replicate = 0;
  Method method = Method::tpcm;
  std::vector<double> pvalues;
  std::vector<bool> rejections;  // Bonferroni at alpha
  std::vector<bool> truth;
  double wall_time = 0.0;
  CounterSnapshot counters;
  /// Split, m^ and L^ fitted once and reused by tPCM and HRT.
  bool shared_fit = false;
  std::string error;  // nonempty when the method failed
};

/// Learner and Gaussian estimator used inside the simulations.
struct SimLearners {
  LearnerConfig learner;
  GaussianConfig gaussian;
};

std::vector<ReplicateResult> run_replicate(const SimConfig& sim, const TestConfig& test,
                                           const SimLearners& learners,
                                           const std::vector<Method>& methods,
                                           std::uint64_t replicate_seed, int setting = 0,
                                           int replicate = 0);

/// Seed of replicate `r`; shared across settings of one grid.
std::uint64_t replicate_seed(std::uint64_t base_seed, int replicate);

struct SettingInfo {
  int id = 0;
  std::string vary;
  double value = 0.0;
  SimConfig config;
  std::vector<Method> methods;
};

struct ResultStore {
  std::vector<SettingInfo> settings;
  std::vector<ReplicateResult> results;
};

struct GridOptions {
  int workers = 1;
  /// HRT normally runs only at the default value of the varied parameter.
  bool hrt_everywhere = false;
  /// Called after each finished replicate with (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Settings of one grid, numbered from `first_id`. HRT is dropped away from
/// the default value unless hrt_everywhere is set.
std::vector<SettingInfo> grid_settings(const SimConfig& base, const std::string& vary,
                                       const std::vector<double>& values, bool hrt_everywhere,
                                       int first_id = 0);

ResultStore run_grid(const SimConfig& base, const std::string& vary, const std::vector<double>& values,
                     int reps, const TestConfig& test, const SimLearners& learners,
                     const GridOptions& options = {});

/// One replicate per setting. Settings run concurrently up to `workers`.
ResultStore run_settings(const std::vector<SettingInfo>& settings, int reps, const TestConfig& test,
                         const SimLearners& learners, const GridOptions& options = {});

struct SummaryRow {
  int setting = 0;
  std::string vary;
  double value = 0.0;
  std::string method;
  std::string metric;  // fwer | power | time
  std::optional<double> estimate;
  std::optional<double> mc_se;

  bool operator==(const SummaryRow&) const = default;
};

/// FWER (any false rejection), average power (mean fraction of S rejected;
/// absent when s = 0) and mean wall time, each with its Monte Carlo SE.
std::vector<SummaryRow> compute_metrics(const ResultStore& store);

struct TimingRow {
  Index p = 0;
  Method method = Method::tpcm;
  double seconds = 0.0;
  int resamples = 0;
  CounterSnapshot counters;
};

/// Single run per (p, method) on one GAM draw; HRT uses ceil(5 p / alpha)
/// resamples.
std::vector<TimingRow> timing_sweep(Index n, const std::vector<Index>& p_values,
                                    const std::vector<Method>& methods, const TestConfig& test,
                                    const SimLearners& learners, const SimConfig& base = {});

int hrt_sweep_resamples(Index p, double alpha);

}  // namespace citlab
