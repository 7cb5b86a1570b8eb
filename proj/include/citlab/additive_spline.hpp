#pragma once

#include "citlab/learners.hpp"

#include <memory>
#include <vector>

namespace citlab {

/// Uniform cubic B-spline on [lo, hi] with `basis_size` functions, extended
/// linearly outside the interval.
class CubicBSpline {
 public:
  CubicBSpline() = default;
  CubicBSpline(double lo, double hi, int basis_size);

  int basis_size() const { return basis_size_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  /// Basis values at x (row of length basis_size). Outside [lo, hi] the
  /// basis is the first-order Taylor expansion at the nearest end.
  void basis_row(double x, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const;
  MatrixXd basis_matrix(const VectorXd& x) const;

  /// sum_i coef_i B_i(x) with the same linear extension.
  double evaluate(const VectorXd& coef, double x) const;

 private:
  void weights(double u, int& start, double w[4], double dw[4]) const;

  double lo_ = 0.0;
  double hi_ = 1.0;
  double h_ = 1.0;
  int basis_size_ = 4;
};

/// Per-predictor penalized B-spline design with sum-to-zero identifiability
/// constraints (taken over the training rows) and a second-difference
/// penalty completed to full rank by shrinkage.
class AdditiveSplineBasis {
 public:
  struct Block {
    Index column = 0;
    CubicBSpline spline;
    MatrixXd null_space;        // K x (K-1): coefficient = null_space * constrained
    MatrixXd penalty;           // (K-1) x (K-1), shrunk to full rank
    MatrixXd ridge_transform;   // K x (K-1): coefficient = ridge_transform * ridge coords
    Index offset = 0;           // first column in the stacked design
  };

  AdditiveSplineBasis(const MatrixXd& x, int basis_size, double shrinkage);

  Index input_dimension() const { return input_dimension_; }
  Index width() const { return width_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  /// Constrained design B Z, one (K-1)-wide block per non-constant column.
  MatrixXd design(const MatrixXd& x) const;
  /// Block-diagonal penalty matching design().
  MatrixXd penalty() const;
  /// Design in coordinates where the penalty is the identity.
  MatrixXd ridge_design(const MatrixXd& x) const;

 private:
  Index input_dimension_ = 0;
  Index width_ = 0;
  std::vector<Block> blocks_;
};

class AdditiveSplineModel final : public FittedRegression {
 public:
  struct Component {
    Index column;
    CubicBSpline spline;
    VectorXd coefficients;
  };

  AdditiveSplineModel(Index input_dimension, Index training_rows, double intercept,
                      std::vector<Component> components, double lambda, double edf);

  double intercept() const { return intercept_; }
  double lambda() const { return lambda_; }
  double effective_df() const { return edf_; }
  const std::vector<Component>& components() const { return components_; }

  bool is_additive() const override { return true; }
  /// g_k(values); identically zero for dropped (constant) columns.
  VectorXd component(Index k, const VectorXd& values) const override;

 protected:
  void predict_rows(const MatrixXd& x, VectorXd& out) const override;
  std::unique_ptr<ColumnSubstitution> make_substitution(const MatrixXd& x, Index column,
                                                        const VectorXd& base) const override;

 private:
  double intercept_;
  std::vector<Component> components_;
  std::vector<int> component_of_column_;
  double lambda_;
  double edf_;
};

/// Joint penalized least squares over all components with one shared
/// smoothing parameter: minimize (1/m)||y - mean(y) - Xb||^2 + lambda b'Sb.
std::shared_ptr<const AdditiveSplineModel> fit_additive_spline(const LearnerConfig& config,
                                                               const MatrixXd& x,
                                                               const VectorXd& targets);

}  // namespace citlab
