#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace citlab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Raised when an input violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot produce a result (singular design,
/// non-convergence, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an operation is not defined for the supplied model family.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Predictor matrix and response. Rows are observations.
struct Dataset {
  MatrixXd x;
  VectorXd y;
  std::vector<std::string> column_names;

  Dataset() = default;
  Dataset(MatrixXd x_, VectorXd y_, std::vector<std::string> names = {});

  Index rows() const { return x.rows(); }
  Index cols() const { return x.cols(); }

  /// Throws InvalidInput unless rows == len(y) >= 4, p >= 2 and all finite.
  void validate() const;

  Dataset subset(const std::vector<Index>& row_indices) const;
};

/// Default predictor labels x1..xp.
std::vector<std::string> default_column_names(Index p);

struct SplitAssignment {
  std::vector<Index> d1_indices;  // test half
  std::vector<Index> d2_indices;  // training half
  double proportion = 0.0;
  std::uint64_t seed = 0;
};

/// Partition rows into a test half D1 and a training half D2 with
/// |D2| = floor(proportion * N + 0.5). Both index lists are sorted.
SplitAssignment split_data(const Dataset& dataset, double proportion, std::uint64_t seed);
SplitAssignment split_rows(Index total_rows, double proportion, std::uint64_t seed);

/// Split sizes used by split_data; exposed for dry-run planning.
Index training_rows_for(Index total_rows, double proportion);

std::vector<bool> bonferroni_select(const std::vector<double>& pvalues, double alpha);

enum class Sided { upper, two };

double normal_cdf(double z);
/// upper: 1 - Phi(t); two: 2 (1 - Phi(|t|)).
double normal_pvalue(double statistic, Sided sided);
double normal_quantile(double prob);

enum class Method { tpcm, vpcm, hrt, gcm, oracle_gcm, tgcm };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

/// Plain copy of the work counters at one point in time.
struct CounterSnapshot {
  std::uint64_t ml_y_given_x = 0;
  std::uint64_t ml_x = 0;
  std::uint64_t ml_xj_given_rest = 0;
  std::uint64_t predict_xj_given_rest = 0;
  std::uint64_t predict_y_given_x = 0;
  // Auxiliary (outside the five-unit cost model): predictions on the
  // observed, unmodified rows, and raw row totals behind the batch counts.
  std::uint64_t predict_observed = 0;
  std::uint64_t rows_predicted = 0;
  std::uint64_t rows_sampled = 0;

  bool operator==(const CounterSnapshot&) const = default;
  CounterSnapshot operator-(const CounterSnapshot& o) const;
  CounterSnapshot operator+(const CounterSnapshot& o) const;
};

enum class FitTag { y_given_x, x_joint, xj_given_rest };
enum class PredictTag { y_given_x, xj_given_rest, observed };

/// Work counters for the cost model. One unit of a predict/sample counter is
/// one batch: a pass over every row of the evaluation set.
class CostCounters {
 public:
  CostCounters() = default;
  CostCounters(const CostCounters& other) { *this = other; }
  CostCounters& operator=(const CostCounters& other);

  void record_fit(FitTag tag);
  void record_predict(PredictTag tag, std::uint64_t rows);
  void record_sample(std::uint64_t rows);

  CounterSnapshot snapshot() const;
  void add(const CounterSnapshot& s);

 private:
  std::atomic<std::uint64_t> ml_y_given_x_{0};
  std::atomic<std::uint64_t> ml_x_{0};
  std::atomic<std::uint64_t> ml_xj_given_rest_{0};
  std::atomic<std::uint64_t> predict_xj_given_rest_{0};
  std::atomic<std::uint64_t> predict_y_given_x_{0};
  std::atomic<std::uint64_t> predict_observed_{0};
  std::atomic<std::uint64_t> rows_predicted_{0};
  std::atomic<std::uint64_t> rows_sampled_{0};
};

struct TestOutcome {
  Index variable_index = 0;
  double statistic = 0.0;
  double pvalue = 1.0;
  Method method = Method::tpcm;
  double wall_time = 0.0;
  CounterSnapshot counters;
  bool degenerate = false;
  Index rows_used = 0;  // observations entering the statistic
};

/// One full pass of a test over all p variables.
struct TestRun {
  Method method = Method::tpcm;
  std::vector<TestOutcome> outcomes;
  CounterSnapshot counters;
  double wall_time = 0.0;

  std::vector<double> pvalues() const;
};

/// Row-subset helpers.
MatrixXd select_rows(const MatrixXd& x, const std::vector<Index>& rows);
VectorXd select_rows(const VectorXd& v, const std::vector<Index>& rows);
/// All columns except `drop`.
MatrixXd drop_column(const MatrixXd& x, Index drop);
MatrixXd select_columns(const MatrixXd& x, const std::vector<Index>& cols);

}  // namespace citlab
