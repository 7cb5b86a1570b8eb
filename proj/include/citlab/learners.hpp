#pragma once

#include "citlab/core.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace citlab {

enum class LearnerKind { ols, ridge, additive_spline, oracle };
enum class SplineSelection { gcv, fixed };

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& name);

std::vector<double> default_spline_lambda_grid();

class FittedRegression;

struct LearnerConfig {
  LearnerKind kind = LearnerKind::additive_spline;
  double ridge_lambda = 0.0;
  bool fit_intercept = true;
  int spline_basis_size = 10;
  std::vector<double> spline_lambda_grid = default_spline_lambda_grid();
  SplineSelection spline_selection = SplineSelection::gcv;
  /// Smoothing parameter used when spline_selection == fixed.
  double spline_fixed_lambda = 1.0;
  /// Factor applied to the smallest positive penalty eigenvalue to fill the
  /// penalty null space, so whole components can be shrunk to zero.
  double spline_shrinkage = 0.1;
  /// Known mean function returned by kind == oracle.
  std::shared_ptr<const FittedRegression> oracle;

  void validate() const;
};

/// Predictions for a fixed set of rows in which one column is overwritten by
/// caller-supplied values. Built once per (rows, column) and reused across
/// resamples.
class ColumnSubstitution {
 public:
  virtual ~ColumnSubstitution() = default;

  /// Writes one prediction per row into `out`. Records one y|x predict batch
  /// when counters are supplied.
  void evaluate(const VectorXd& values, VectorXd& out, CostCounters* counters = nullptr,
                PredictTag tag = PredictTag::y_given_x) const;

 protected:
  virtual void do_evaluate(const VectorXd& values, VectorXd& out) const = 0;
};

/// A fitted mean function. Immutable after construction.
class FittedRegression {
 public:
  FittedRegression(Index input_dimension, Index training_rows)
      : input_dimension_(input_dimension), training_rows_(training_rows) {}
  virtual ~FittedRegression() = default;

  Index input_dimension() const { return input_dimension_; }
  Index training_rows() const { return training_rows_; }

  VectorXd predict(const MatrixXd& x) const;
  VectorXd predict(const MatrixXd& x, CostCounters& counters, PredictTag tag) const;

  /// `base` must equal predict(x).
  std::unique_ptr<ColumnSubstitution> substitution(const MatrixXd& x, Index column,
                                                   const VectorXd& base) const;

  /// True when the mean decomposes as intercept + sum_k g_k(x_k).
  virtual bool is_additive() const { return false; }
  /// g_k evaluated at `values`; only for additive models.
  virtual VectorXd component(Index k, const VectorXd& values) const;

 protected:
  virtual void predict_rows(const MatrixXd& x, VectorXd& out) const = 0;
  virtual std::unique_ptr<ColumnSubstitution> make_substitution(const MatrixXd& x, Index column,
                                                                const VectorXd& base) const;

 private:
  Index input_dimension_;
  Index training_rows_;
};

using RegressionPtr = std::shared_ptr<const FittedRegression>;

/// intercept + coefficients . x
class LinearModel final : public FittedRegression {
 public:
  LinearModel(VectorXd coefficients, double intercept, Index training_rows = 0);

  const VectorXd& coefficients() const { return coefficients_; }
  double intercept() const { return intercept_; }

  bool is_additive() const override { return true; }
  VectorXd component(Index k, const VectorXd& values) const override;

 protected:
  void predict_rows(const MatrixXd& x, VectorXd& out) const override;
  std::unique_ptr<ColumnSubstitution> make_substitution(const MatrixXd& x, Index column,
                                                        const VectorXd& base) const override;

 private:
  VectorXd coefficients_;
  double intercept_;
};

/// intercept + sum over listed columns of a scalar function of that column.
class AdditiveFunctionModel final : public FittedRegression {
 public:
  struct Term {
    Index column;
    std::function<double(double)> fn;
  };

  AdditiveFunctionModel(Index input_dimension, double intercept, std::vector<Term> terms);

  bool is_additive() const override { return true; }
  VectorXd component(Index k, const VectorXd& values) const override;
  const std::vector<Term>& terms() const { return terms_; }

 protected:
  void predict_rows(const MatrixXd& x, VectorXd& out) const override;
  std::unique_ptr<ColumnSubstitution> make_substitution(const MatrixXd& x, Index column,
                                                        const VectorXd& base) const override;

 private:
  double intercept_;
  std::vector<Term> terms_;
  std::vector<std::vector<std::size_t>> terms_by_column_;
};

/// Arbitrary row function.
class FunctionModel final : public FittedRegression {
 public:
  using RowFn = std::function<double(const Eigen::Ref<const Eigen::RowVectorXd>&)>;
  FunctionModel(Index input_dimension, RowFn fn);

 protected:
  void predict_rows(const MatrixXd& x, VectorXd& out) const override;

 private:
  RowFn fn_;
};

/// Fits the configured learner. Records exactly one fit under `tag`.
RegressionPtr fit(const LearnerConfig& config, const MatrixXd& x, const VectorXd& targets,
                  CostCounters* counters = nullptr, FitTag tag = FitTag::y_given_x);

/// Least squares; throws NumericalError on a rank-deficient design.
std::shared_ptr<const LinearModel> fit_ols(const MatrixXd& x, const VectorXd& targets,
                                           bool fit_intercept = true);
/// min ||y - b0 - X b||^2 + lambda ||b||^2 (intercept unpenalized).
std::shared_ptr<const LinearModel> fit_ridge(const MatrixXd& x, const VectorXd& targets,
                                             double lambda, bool fit_intercept = true);

}  // namespace citlab
