#include "citlab/additive_spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace citlab {

CubicBSpline::CubicBSpline(double lo, double hi, int basis_size)
    : lo_(lo), hi_(hi), basis_size_(basis_size) {
  if (basis_size < 4) throw InvalidInput("spline: basis size must be >= 4");
  if (!(hi > lo)) throw InvalidInput("spline: empty interval");
  h_ = (hi - lo) / static_cast<double>(basis_size - 3);
}

void CubicBSpline::weights(double u, int& start, double w[4], double dw[4]) const {
  const int last = basis_size_ - 4;
  int s = static_cast<int>(std::floor(u));
  s = std::clamp(s, 0, last);
  const double f = u - s;
  const double f2 = f * f;
  const double f3 = f2 * f;
  const double g = 1.0 - f;
  w[0] = g * g * g / 6.0;
  w[1] = (3.0 * f3 - 6.0 * f2 + 4.0) / 6.0;
  w[2] = (-3.0 * f3 + 3.0 * f2 + 3.0 * f + 1.0) / 6.0;
  w[3] = f3 / 6.0;
  dw[0] = -0.5 * g * g;
  dw[1] = 1.5 * f2 - 2.0 * f;
  dw[2] = -1.5 * f2 + f + 0.5;
  dw[3] = 0.5 * f2;
  start = s;
}

void CubicBSpline::basis_row(double x, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const {
  row.setZero();
  const double xc = std::clamp(x, lo_, hi_);
  int s = 0;
  double w[4];
  double dw[4];
  weights((xc - lo_) / h_, s, w, dw);
  const double dx = x - xc;
  for (int k = 0; k < 4; ++k) row(s + k) = w[k] + dw[k] / h_ * dx;
}

MatrixXd CubicBSpline::basis_matrix(const VectorXd& x) const {
  MatrixXd b(x.size(), basis_size_);
  for (Index i = 0; i < x.size(); ++i) basis_row(x(i), b.row(i));
  return b;
}

double CubicBSpline::evaluate(const VectorXd& coef, double x) const {
  const double xc = x < lo_ ? lo_ : (x > hi_ ? hi_ : x);
  int s = 0;
  double w[4];
  double dw[4];
  weights((xc - lo_) / h_, s, w, dw);
  const double* c = coef.data() + s;
  double v = w[0] * c[0] + w[1] * c[1] + w[2] * c[2] + w[3] * c[3];
  if (x != xc) {
    const double slope = (dw[0] * c[0] + dw[1] * c[1] + dw[2] * c[2] + dw[3] * c[3]) / h_;
    v += slope * (x - xc);
  }
  return v;
}

namespace {

bool is_constant_column(const VectorXd& col) {
  const double lo = col.minCoeff();
  const double hi = col.maxCoeff();
  return !(hi - lo > 1e-12 * (1.0 + std::max(std::abs(lo), std::abs(hi))));
}

MatrixXd second_difference(int k) {
  MatrixXd d = MatrixXd::Zero(k - 2, k);
  for (int i = 0; i < k - 2; ++i) {
    d(i, i) = 1.0;
    d(i, i + 1) = -2.0;
    d(i, i + 2) = 1.0;
  }
  return d;
}

}  // namespace

AdditiveSplineBasis::AdditiveSplineBasis(const MatrixXd& x, int basis_size, double shrinkage)
    : input_dimension_(x.cols()) {
  if (basis_size < 4) throw InvalidInput("additive spline: basis size must be >= 4");
  if (!(shrinkage > 0.0)) throw InvalidInput("additive spline: shrinkage must be positive");
  const MatrixXd dd = [&] {
    const MatrixXd d = second_difference(basis_size);
    return MatrixXd(d.transpose() * d);
  }();
  Index offset = 0;
  for (Index k = 0; k < x.cols(); ++k) {
    const VectorXd col = x.col(k);
    if (is_constant_column(col)) continue;
    Block b;
    b.column = k;
    b.spline = CubicBSpline(col.minCoeff(), col.maxCoeff(), basis_size);
    const MatrixXd basis = b.spline.basis_matrix(col);

    // Null space of the sum-to-zero constraint 1'B c = 0.
    const VectorXd constraint = basis.colwise().sum().transpose();
    Eigen::HouseholderQR<MatrixXd> qr(constraint);
    const MatrixXd q = qr.householderQ() * MatrixXd::Identity(basis_size, basis_size);
    b.null_space = q.rightCols(basis_size - 1);

    const MatrixXd s = b.null_space.transpose() * dd * b.null_space;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
    VectorXd ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    const double tiny = top * std::pow(std::numeric_limits<double>::epsilon(), 2.0 / 3.0);
    double smallest_positive = top;
    for (Index i = 0; i < ev.size(); ++i)
      if (ev(i) > tiny) smallest_positive = std::min(smallest_positive, ev(i));
    for (Index i = 0; i < ev.size(); ++i)
      if (ev(i) <= tiny) ev(i) = shrinkage * smallest_positive;
    b.penalty = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    b.ridge_transform = b.null_space * es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal();
    b.offset = offset;
    offset += basis_size - 1;
    blocks_.push_back(std::move(b));
  }
  width_ = offset;
}

MatrixXd AdditiveSplineBasis::design(const MatrixXd& x) const {
  if (x.cols() != input_dimension_) throw InvalidInput("additive spline: width mismatch");
  MatrixXd out(x.rows(), width_);
  for (const auto& b : blocks_) {
    const Index w = b.null_space.cols();
    out.middleCols(b.offset, w) = b.spline.basis_matrix(x.col(b.column)) * b.null_space;
  }
  return out;
}

MatrixXd AdditiveSplineBasis::penalty() const {
  MatrixXd s = MatrixXd::Zero(width_, width_);
  for (const auto& b : blocks_) {
    const Index w = b.penalty.rows();
    s.block(b.offset, b.offset, w, w) = b.penalty;
  }
  return s;
}

MatrixXd AdditiveSplineBasis::ridge_design(const MatrixXd& x) const {
  if (x.cols() != input_dimension_) throw InvalidInput("additive spline: width mismatch");
  MatrixXd out(x.rows(), width_);
  for (const auto& b : blocks_) {
    const Index w = b.ridge_transform.cols();
    out.middleCols(b.offset, w) = b.spline.basis_matrix(x.col(b.column)) * b.ridge_transform;
  }
  return out;
}

// ---------------------------------------------------------------------------

AdditiveSplineModel::AdditiveSplineModel(Index input_dimension, Index training_rows,
                                         double intercept, std::vector<Component> components,
                                         double lambda, double edf)
    : FittedRegression(input_dimension, training_rows),
      intercept_(intercept),
      components_(std::move(components)),
      component_of_column_(static_cast<std::size_t>(input_dimension), -1),
      lambda_(lambda),
      edf_(edf) {
  for (std::size_t c = 0; c < components_.size(); ++c)
    component_of_column_[static_cast<std::size_t>(components_[c].column)] = static_cast<int>(c);
}

VectorXd AdditiveSplineModel::component(Index k, const VectorXd& values) const {
  if (k < 0 || k >= input_dimension()) throw InvalidInput("additive spline: component index");
  const int c = component_of_column_[static_cast<std::size_t>(k)];
  VectorXd out = VectorXd::Zero(values.size());
  if (c < 0) return out;
  const auto& comp = components_[static_cast<std::size_t>(c)];
  for (Index i = 0; i < values.size(); ++i) out(i) = comp.spline.evaluate(comp.coefficients, values(i));
  return out;
}

void AdditiveSplineModel::predict_rows(const MatrixXd& x, VectorXd& out) const {
  out.setConstant(x.rows(), intercept_);
  for (const auto& comp : components_) {
    for (Index i = 0; i < x.rows(); ++i)
      out(i) += comp.spline.evaluate(comp.coefficients, x(i, comp.column));
  }
}

namespace {

class SplineSubstitution final : public ColumnSubstitution {
 public:
  SplineSubstitution(VectorXd offset, const AdditiveSplineModel::Component* comp)
      : offset_(std::move(offset)), comp_(comp) {}

 protected:
  void do_evaluate(const VectorXd& values, VectorXd& out) const override {
    if (comp_ == nullptr) {
      out = offset_;
      return;
    }
    out.resize(offset_.size());
    for (Index i = 0; i < offset_.size(); ++i)
      out(i) = offset_(i) + comp_->spline.evaluate(comp_->coefficients, values(i));
  }

 private:
  VectorXd offset_;
  const AdditiveSplineModel::Component* comp_;
};

}  // namespace

std::unique_ptr<ColumnSubstitution> AdditiveSplineModel::make_substitution(
    const MatrixXd& x, Index column, const VectorXd& base) const {
  const int c = component_of_column_[static_cast<std::size_t>(column)];
  if (c < 0) return std::make_unique<SplineSubstitution>(base, nullptr);
  const auto* comp = &components_[static_cast<std::size_t>(c)];
  VectorXd offset(base.size());
  for (Index i = 0; i < base.size(); ++i)
    offset(i) = base(i) - comp->spline.evaluate(comp->coefficients, x(i, column));
  return std::make_unique<SplineSubstitution>(std::move(offset), comp);
}

// ---------------------------------------------------------------------------

namespace {

/// Spectral form of the ridge problem (G + m lambda I) b = X'y.
struct RidgeSpectrum {
  bool primal = true;    // eigen-decomposition of X'X (else of XX')
  VectorXd eigenvalues;  // of X'X or XX'
  MatrixXd eigenvectors;
  VectorXd projection;   // V'X'y (primal) or W'y (dual)
  double yy = 0.0;
};

RidgeSpectrum ridge_spectrum(const MatrixXd& xt, const VectorXd& y) {
  RidgeSpectrum rs;
  rs.yy = y.squaredNorm();
  if (xt.cols() <= xt.rows()) {
    MatrixXd g(xt.cols(), xt.cols());
    g.setZero();
    g.selfadjointView<Eigen::Lower>().rankUpdate(xt.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g.selfadjointView<Eigen::Lower>());
    rs.primal = true;
    rs.eigenvalues = es.eigenvalues().cwiseMax(0.0);
    rs.eigenvectors = es.eigenvectors();
    rs.projection = rs.eigenvectors.transpose() * (xt.transpose() * y);
  } else {
    MatrixXd k(xt.rows(), xt.rows());
    k.setZero();
    k.selfadjointView<Eigen::Lower>().rankUpdate(xt);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(k.selfadjointView<Eigen::Lower>());
    rs.primal = false;
    rs.eigenvalues = es.eigenvalues().cwiseMax(0.0);
    rs.eigenvectors = es.eigenvectors();
    rs.projection = rs.eigenvectors.transpose() * y;
  }
  return rs;
}

struct GcvPoint {
  double rss = 0.0;
  double edf = 0.0;
};

GcvPoint ridge_gcv_point(const RidgeSpectrum& rs, double shift) {
  GcvPoint g;
  const double top = rs.eigenvalues.size() > 0 ? rs.eigenvalues.maxCoeff() : 0.0;
  const double tol = std::max(top, 1.0) * 1e-13;
  if (rs.primal) {
    double explained = 0.0;
    double resid = 0.0;
    for (Index k = 0; k < rs.eigenvalues.size(); ++k) {
      const double d = rs.eigenvalues(k);
      if (d <= tol) continue;
      const double s2 = rs.projection(k) * rs.projection(k) / d;
      const double shrink = shift / (d + shift);
      explained += s2;
      resid += s2 * shrink * shrink;
      g.edf += d / (d + shift);
    }
    g.rss = std::max(rs.yy - explained, 0.0) + resid;
  } else {
    double captured = 0.0;
    for (Index k = 0; k < rs.eigenvalues.size(); ++k) {
      const double e = rs.eigenvalues(k);
      const double u2 = rs.projection(k) * rs.projection(k);
      captured += u2;
      const double shrink = shift / (e + shift);
      g.rss += u2 * shrink * shrink;
      g.edf += e / (e + shift);
    }
    g.rss += std::max(rs.yy - captured, 0.0);
  }
  return g;
}

VectorXd ridge_coefficients(const RidgeSpectrum& rs, const MatrixXd& xt, double shift) {
  if (rs.primal) {
    VectorXd scaled = rs.projection;
    for (Index k = 0; k < scaled.size(); ++k) scaled(k) /= (rs.eigenvalues(k) + shift);
    return rs.eigenvectors * scaled;
  }
  VectorXd scaled = rs.projection;
  for (Index k = 0; k < scaled.size(); ++k) scaled(k) /= (rs.eigenvalues(k) + shift);
  return xt.transpose() * (rs.eigenvectors * scaled);
}

}  // namespace

std::shared_ptr<const AdditiveSplineModel> fit_additive_spline(const LearnerConfig& config,
                                                               const MatrixXd& x,
                                                               const VectorXd& targets) {
  if (x.rows() != targets.size()) throw InvalidInput("additive spline: rows(x) != len(targets)");
  if (x.rows() < 2) throw InvalidInput("additive spline: need at least 2 rows");
  if (!x.allFinite() || !targets.allFinite()) throw InvalidInput("additive spline: non-finite input");

  const AdditiveSplineBasis basis(x, config.spline_basis_size, config.spline_shrinkage);
  const double m = static_cast<double>(x.rows());
  const double intercept = targets.mean();
  const VectorXd yc = targets.array() - intercept;

  std::vector<AdditiveSplineModel::Component> components;
  if (basis.width() == 0) {
    return std::make_shared<AdditiveSplineModel>(x.cols(), x.rows(), intercept,
                                                 std::move(components), 0.0, 0.0);
  }

  const MatrixXd xt = basis.ridge_design(x);
  const RidgeSpectrum rs = ridge_spectrum(xt, yc);

  double best_lambda = config.spline_fixed_lambda;
  double best_edf = 0.0;
  if (config.spline_selection == SplineSelection::gcv) {
    double best_score = std::numeric_limits<double>::infinity();
    for (double lambda : config.spline_lambda_grid) {
      const GcvPoint g = ridge_gcv_point(rs, m * lambda);
      const double denom = m - g.edf;
      if (!(denom > 0.5)) continue;
      const double score = m * g.rss / (denom * denom);
      if (score < best_score) {
        best_score = score;
        best_lambda = lambda;
        best_edf = g.edf;
      }
    }
    if (!std::isfinite(best_score)) {
      // Every grid point saturates the degrees of freedom; take the largest.
      best_lambda = *std::max_element(config.spline_lambda_grid.begin(),
                                      config.spline_lambda_grid.end());
      best_edf = ridge_gcv_point(rs, m * best_lambda).edf;
    }
  } else {
    best_edf = ridge_gcv_point(rs, m * best_lambda).edf;
  }

  const VectorXd beta = ridge_coefficients(rs, xt, m * best_lambda);
  for (const auto& b : basis.blocks()) {
    AdditiveSplineModel::Component c;
    c.column = b.column;
    c.spline = b.spline;
    c.coefficients = b.ridge_transform * beta.segment(b.offset, b.ridge_transform.cols());
    components.push_back(std::move(c));
  }
  return std::make_shared<AdditiveSplineModel>(x.cols(), x.rows(), intercept,
                                               std::move(components), best_lambda, best_edf);
}

}  // namespace citlab
