#include "citlab/learners.hpp"

#include "citlab/additive_spline.hpp"

#include <cmath>

namespace citlab {

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::ols: return "ols";
    case LearnerKind::ridge: return "ridge";
    case LearnerKind::additive_spline: return "additive_spline";
    case LearnerKind::oracle: return "oracle";
  }
  return "unknown";
}

LearnerKind learner_kind_from_string(const std::string& name) {
  if (name == "ols") return LearnerKind::ols;
  if (name == "ridge") return LearnerKind::ridge;
  if (name == "additive_spline" || name == "gam") return LearnerKind::additive_spline;
  if (name == "oracle") return LearnerKind::oracle;
  throw InvalidInput("unknown learner kind '" + name + "'");
}

std::vector<double> default_spline_lambda_grid() {
  std::vector<double> grid;
  const int points = 20;
  for (int i = 0; i < points; ++i)
    grid.push_back(std::pow(10.0, -4.0 + 8.0 * i / (points - 1)));
  return grid;
}

void LearnerConfig::validate() const {
  if (!(ridge_lambda >= 0.0)) throw InvalidInput("learner: ridge_lambda must be >= 0");
  if (kind == LearnerKind::additive_spline) {
    if (spline_basis_size < 4) throw InvalidInput("learner: spline_basis_size must be >= 4");
    if (spline_selection == SplineSelection::gcv && spline_lambda_grid.empty())
      throw InvalidInput("learner: spline_lambda_grid must be nonempty");
    for (double l : spline_lambda_grid)
      if (!(l > 0.0)) throw InvalidInput("learner: spline lambdas must be positive");
    if (spline_selection == SplineSelection::fixed && !(spline_fixed_lambda > 0.0))
      throw InvalidInput("learner: spline_fixed_lambda must be positive");
    if (!(spline_shrinkage > 0.0)) throw InvalidInput("learner: spline_shrinkage must be positive");
  }
  if (kind == LearnerKind::oracle && !oracle)
    throw InvalidInput("learner: kind=oracle requires a known mean function");
}

// ---------------------------------------------------------------------------

void ColumnSubstitution::evaluate(const VectorXd& values, VectorXd& out, CostCounters* counters,
                                  PredictTag tag) const {
  do_evaluate(values, out);
  if (counters != nullptr) counters->record_predict(tag, static_cast<std::uint64_t>(values.size()));
}

VectorXd FittedRegression::predict(const MatrixXd& x) const {
  if (x.cols() != input_dimension_)
    throw InvalidInput("predict: expected " + std::to_string(input_dimension_) + " columns, got " +
                       std::to_string(x.cols()));
  VectorXd out(x.rows());
  if (x.rows() > 0) predict_rows(x, out);
  return out;
}

VectorXd FittedRegression::predict(const MatrixXd& x, CostCounters& counters,
                                   PredictTag tag) const {
  VectorXd out = predict(x);
  counters.record_predict(tag, static_cast<std::uint64_t>(x.rows()));
  return out;
}

VectorXd FittedRegression::component(Index, const VectorXd&) const {
  throw InvalidInput("component: model is not additive");
}

namespace {

class GenericSubstitution final : public ColumnSubstitution {
 public:
  GenericSubstitution(const FittedRegression* model, MatrixXd x, Index column)
      : model_(model), x_(std::move(x)), column_(column) {}

 protected:
  void do_evaluate(const VectorXd& values, VectorXd& out) const override {
    MatrixXd work = x_;
    work.col(column_) = values;
    out = model_->predict(work);
  }

 private:
  const FittedRegression* model_;
  MatrixXd x_;
  Index column_;
};

class OffsetLinearSubstitution final : public ColumnSubstitution {
 public:
  OffsetLinearSubstitution(VectorXd offset, double slope)
      : offset_(std::move(offset)), slope_(slope) {}

 protected:
  void do_evaluate(const VectorXd& values, VectorXd& out) const override {
    if (slope_ == 0.0) {
      out = offset_;
      return;
    }
    out = offset_ + slope_ * values;
  }

 private:
  VectorXd offset_;
  double slope_;
};

class OffsetFunctionSubstitution final : public ColumnSubstitution {
 public:
  OffsetFunctionSubstitution(VectorXd offset, std::vector<const std::function<double(double)>*> fns)
      : offset_(std::move(offset)), fns_(std::move(fns)) {}

 protected:
  void do_evaluate(const VectorXd& values, VectorXd& out) const override {
    out = offset_;
    for (const auto* fn : fns_)
      for (Index i = 0; i < out.size(); ++i) out(i) += (*fn)(values(i));
  }

 private:
  VectorXd offset_;
  std::vector<const std::function<double(double)>*> fns_;
};

}  // namespace

std::unique_ptr<ColumnSubstitution> FittedRegression::substitution(const MatrixXd& x, Index column,
                                                                   const VectorXd& base) const {
  if (x.cols() != input_dimension_) throw InvalidInput("substitution: width mismatch");
  if (column < 0 || column >= input_dimension_) throw InvalidInput("substitution: bad column");
  if (base.size() != x.rows()) throw InvalidInput("substitution: base length mismatch");
  return make_substitution(x, column, base);
}

std::unique_ptr<ColumnSubstitution> FittedRegression::make_substitution(const MatrixXd& x,
                                                                        Index column,
                                                                        const VectorXd&) const {
  return std::make_unique<GenericSubstitution>(this, x, column);
}

// ---------------------------------------------------------------------------

LinearModel::LinearModel(VectorXd coefficients, double intercept, Index training_rows)
    : FittedRegression(coefficients.size(), training_rows),
      coefficients_(std::move(coefficients)),
      intercept_(intercept) {}

VectorXd LinearModel::component(Index k, const VectorXd& values) const {
  return coefficients_(k) * values;
}

void LinearModel::predict_rows(const MatrixXd& x, VectorXd& out) const {
  out.setConstant(x.rows(), intercept_);
  for (Index k = 0; k < x.cols(); ++k) out += coefficients_(k) * x.col(k);
}

std::unique_ptr<ColumnSubstitution> LinearModel::make_substitution(const MatrixXd& x, Index column,
                                                                   const VectorXd& base) const {
  const double slope = coefficients_(column);
  VectorXd offset = slope == 0.0 ? base : VectorXd(base - slope * x.col(column));
  return std::make_unique<OffsetLinearSubstitution>(std::move(offset), slope);
}

AdditiveFunctionModel::AdditiveFunctionModel(Index input_dimension, double intercept,
                                             std::vector<Term> terms)
    : FittedRegression(input_dimension, 0),
      intercept_(intercept),
      terms_(std::move(terms)),
      terms_by_column_(static_cast<std::size_t>(input_dimension)) {
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    if (terms_[t].column < 0 || terms_[t].column >= input_dimension)
      throw InvalidInput("additive function: term column out of range");
    terms_by_column_[static_cast<std::size_t>(terms_[t].column)].push_back(t);
  }
}

VectorXd AdditiveFunctionModel::component(Index k, const VectorXd& values) const {
  VectorXd out = VectorXd::Zero(values.size());
  for (std::size_t t : terms_by_column_[static_cast<std::size_t>(k)])
    for (Index i = 0; i < values.size(); ++i) out(i) += terms_[t].fn(values(i));
  return out;
}

void AdditiveFunctionModel::predict_rows(const MatrixXd& x, VectorXd& out) const {
  out.setConstant(x.rows(), intercept_);
  for (const auto& term : terms_)
    for (Index i = 0; i < x.rows(); ++i) out(i) += term.fn(x(i, term.column));
}

std::unique_ptr<ColumnSubstitution> AdditiveFunctionModel::make_substitution(
    const MatrixXd& x, Index column, const VectorXd& base) const {
  std::vector<const std::function<double(double)>*> fns;
  VectorXd offset = base;
  for (std::size_t t : terms_by_column_[static_cast<std::size_t>(column)]) {
    fns.push_back(&terms_[t].fn);
    for (Index i = 0; i < x.rows(); ++i) offset(i) -= terms_[t].fn(x(i, column));
  }
  return std::make_unique<OffsetFunctionSubstitution>(std::move(offset), std::move(fns));
}

FunctionModel::FunctionModel(Index input_dimension, RowFn fn)
    : FittedRegression(input_dimension, 0), fn_(std::move(fn)) {}

void FunctionModel::predict_rows(const MatrixXd& x, VectorXd& out) const {
  for (Index i = 0; i < x.rows(); ++i) out(i) = fn_(x.row(i));
}

// ---------------------------------------------------------------------------

std::shared_ptr<const LinearModel> fit_ols(const MatrixXd& x, const VectorXd& targets,
                                           bool fit_intercept) {
  if (x.rows() != targets.size()) throw InvalidInput("ols: rows(x) != len(targets)");
  const Index p = x.cols();
  MatrixXd design(x.rows(), p + (fit_intercept ? 1 : 0));
  design.leftCols(p) = x;
  if (fit_intercept) design.col(p).setOnes();
  if (design.rows() < design.cols()) throw NumericalError("ols: fewer rows than coefficients");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) throw NumericalError("ols: singular (rank-deficient) design");
  const VectorXd beta = qr.solve(targets);
  const double intercept = fit_intercept ? beta(p) : 0.0;
  return std::make_shared<LinearModel>(beta.head(p), intercept, x.rows());
}

std::shared_ptr<const LinearModel> fit_ridge(const MatrixXd& x, const VectorXd& targets,
                                             double lambda, bool fit_intercept) {
  if (x.rows() != targets.size()) throw InvalidInput("ridge: rows(x) != len(targets)");
  if (!(lambda >= 0.0)) throw InvalidInput("ridge: lambda must be >= 0");
  if (lambda == 0.0) return fit_ols(x, targets, fit_intercept);
  VectorXd xmean = VectorXd::Zero(x.cols());
  double ymean = 0.0;
  if (fit_intercept) {
    xmean = x.colwise().mean().transpose();
    ymean = targets.mean();
  }
  const MatrixXd xc = x.rowwise() - xmean.transpose();
  const VectorXd yc = targets.array() - ymean;
  MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += lambda;
  Eigen::LDLT<MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) throw NumericalError("ridge: factorization failed");
  const VectorXd beta = ldlt.solve(xc.transpose() * yc);
  return std::make_shared<LinearModel>(beta, ymean - xmean.dot(beta), x.rows());
}

RegressionPtr fit(const LearnerConfig& config, const MatrixXd& x, const VectorXd& targets,
                  CostCounters* counters, FitTag tag) {
  config.validate();
  if (x.rows() != targets.size()) throw InvalidInput("fit: rows(x) != len(targets)");
  RegressionPtr model;
  switch (config.kind) {
    case LearnerKind::ols: model = fit_ols(x, targets, config.fit_intercept); break;
    case LearnerKind::ridge:
      model = fit_ridge(x, targets, config.ridge_lambda, config.fit_intercept);
      break;
    case LearnerKind::additive_spline: model = fit_additive_spline(config, x, targets); break;
    case LearnerKind::oracle:
      if (config.oracle->input_dimension() != x.cols())
        throw InvalidInput("fit: oracle input dimension mismatch");
      model = config.oracle;
      break;
  }
  if (counters != nullptr) counters->record_fit(tag);
  return model;
}

}  // namespace citlab
