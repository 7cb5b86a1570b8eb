#include "citlab/gaussian.hpp"

#include "citlab/glasso.hpp"

#include <cmath>
#include <limits>

namespace citlab {

std::string to_string(GaussianEstimator e) {
  switch (e) {
    case GaussianEstimator::sample: return "sample";
    case GaussianEstimator::banded: return "banded";
    case GaussianEstimator::glasso: return "glasso";
    case GaussianEstimator::oracle: return "oracle";
  }
  return "unknown";
}

GaussianEstimator gaussian_estimator_from_string(const std::string& name) {
  if (name == "sample") return GaussianEstimator::sample;
  if (name == "banded") return GaussianEstimator::banded;
  if (name == "glasso") return GaussianEstimator::glasso;
  if (name == "oracle") return GaussianEstimator::oracle;
  throw InvalidInput("unknown gaussian estimator '" + name + "'");
}

double ConditionalLaw::mean(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  double acc = intercept;
  Index k = 0;
  for (Index c = 0; c < row.size(); ++c) {
    if (c == variable) continue;
    acc += coefficients(k++) * row(c);
  }
  return acc;
}

VectorXd ConditionalLaw::means(const MatrixXd& x) const {
  if (x.cols() != coefficients.size() + 1) throw InvalidInput("conditional means: width mismatch");
  VectorXd out = VectorXd::Constant(x.rows(), intercept);
  Index k = 0;
  for (Index c = 0; c < x.cols(); ++c) {
    if (c == variable) continue;
    out += coefficients(k++) * x.col(c);
  }
  return out;
}

double ConditionalLaw::mean_given_rest(const VectorXd& z) const {
  if (z.size() != coefficients.size()) throw InvalidInput("conditional mean: length mismatch");
  return intercept + coefficients.dot(z);
}

double ConditionalLaw::sampling_sd() const {
  return std::sqrt(std::max(variance, kConditionalVarianceFloor));
}

namespace {

void check_precision(const MatrixXd& precision) {
  if (precision.rows() != precision.cols()) throw InvalidInput("gaussian: precision not square");
  if (!precision.allFinite()) throw NumericalError("gaussian: precision has non-finite entries");
  const double scale = std::max(1.0, precision.cwiseAbs().maxCoeff());
  if ((precision - precision.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw NumericalError("gaussian: precision not symmetric");
  for (Index i = 0; i < precision.rows(); ++i)
    if (!(precision(i, i) > 0.0)) throw NumericalError("gaussian: precision diagonal not positive");
  Eigen::LLT<MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("gaussian: precision not positive definite");
}

}  // namespace

GaussianModel::GaussianModel(VectorXd mean, MatrixXd precision, GaussianEstimator estimator)
    : mean_(std::move(mean)), precision_(std::move(precision)), estimator_(estimator) {
  if (mean_.size() != precision_.rows()) throw InvalidInput("gaussian: mean/precision size mismatch");
  check_precision(precision_);
  precision_ = 0.5 * (precision_ + precision_.transpose());
}

GaussianModel GaussianModel::from_covariance(VectorXd mean, const MatrixXd& covariance,
                                             GaussianEstimator estimator) {
  if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size())
    throw InvalidInput("gaussian: covariance size mismatch");
  Eigen::LLT<MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw NumericalError("gaussian: covariance not positive definite");
  MatrixXd precision = llt.solve(MatrixXd::Identity(covariance.rows(), covariance.cols()));
  precision = 0.5 * (precision + precision.transpose());
  return GaussianModel(std::move(mean), std::move(precision), estimator);
}

MatrixXd GaussianModel::covariance() const {
  Eigen::LLT<MatrixXd> llt(precision_);
  MatrixXd cov = llt.solve(MatrixXd::Identity(precision_.rows(), precision_.cols()));
  return 0.5 * (cov + cov.transpose());
}

ConditionalLaw GaussianModel::conditional_law(Index j) const {
  const Index p = dimension();
  if (j < 0 || j >= p) throw InvalidInput("conditional_law: variable index out of range");
  const double pjj = precision_(j, j);
  if (!(pjj > 0.0)) throw NumericalError("conditional_law: precision[j,j] <= 0");
  ConditionalLaw law;
  law.variable = j;
  law.variance = 1.0 / pjj;
  law.coefficients.resize(p - 1);
  double intercept = mean_(j);
  Index k = 0;
  for (Index c = 0; c < p; ++c) {
    if (c == j) continue;
    const double coef = -precision_(j, c) / pjj;
    law.coefficients(k++) = coef;
    intercept -= coef * mean_(c);
  }
  law.intercept = intercept;
  return law;
}

ConditionalLaw conditional_law(const GaussianModel& model, Index j) {
  return model.conditional_law(j);
}

VectorXd sample_conditional(const ConditionalLaw& law, const VectorXd& z, Index count,
                            Engine& engine) {
  if (count < 1) throw InvalidInput("sample_conditional: count must be >= 1");
  const double mu = law.mean_given_rest(z);
  const double sd = law.sampling_sd();
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  VectorXd out(count);
  for (Index i = 0; i < count; ++i) out(i) = mu + sd * dist(engine);
  return out;
}

void sample_around(const VectorXd& means, double sd, NormalSource& normal, VectorXd& out) {
  out.resize(means.size());
  for (Index i = 0; i < means.size(); ++i) out(i) = means(i) + sd * normal();
}

MatrixXd sample_covariance(const MatrixXd& x) {
  if (x.rows() < 2) throw InvalidInput("sample covariance: need at least 2 rows");
  const MatrixXd centered = x.rowwise() - x.colwise().mean();
  MatrixXd s = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  return 0.5 * (s + s.transpose());
}

GaussianModel fit_sample_gaussian(const MatrixXd& x) {
  if (!x.allFinite()) throw InvalidInput("fit_sample_gaussian: non-finite entries");
  if (x.rows() <= x.cols()) throw NumericalError("fit_sample_gaussian: need n > p");
  const MatrixXd s = sample_covariance(x);
  Eigen::LLT<MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError("fit_sample_gaussian: singular covariance");
  MatrixXd precision = llt.solve(MatrixXd::Identity(s.rows(), s.cols()));
  precision = 0.5 * (precision + precision.transpose());
  return GaussianModel(x.colwise().mean().transpose(), std::move(precision),
                       GaussianEstimator::sample);
}

GaussianModel fit_banded_precision(const MatrixXd& x, int bandwidth) {
  if (bandwidth < 0) throw InvalidInput("fit_banded_precision: bandwidth must be >= 0");
  if (!x.allFinite()) throw InvalidInput("fit_banded_precision: non-finite entries");
  const Index n = x.rows();
  const Index p = x.cols();
  if (n <= bandwidth + 1) throw InvalidInput("fit_banded_precision: need n > bandwidth + 1");
  const VectorXd mu = x.colwise().mean().transpose();
  const MatrixXd xc = x.rowwise() - mu.transpose();

  // X_j = sum_k phi_jk X_k + e_j over predecessors; T = I - Phi, D = diag(var e).
  MatrixXd t = MatrixXd::Identity(p, p);
  VectorXd d(p);
  for (Index j = 0; j < p; ++j) {
    const Index lo = std::max<Index>(0, j - bandwidth);
    const Index width = j - lo;
    VectorXd resid = xc.col(j);
    if (width > 0) {
      const MatrixXd pred = xc.middleCols(lo, width);
      Eigen::ColPivHouseholderQR<MatrixXd> qr(pred);
      qr.setThreshold(1e-10);
      if (qr.rank() < width) throw NumericalError("fit_banded_precision: collinear predecessors");
      const VectorXd phi = qr.solve(xc.col(j));
      t.block(j, lo, 1, width) = -phi.transpose();
      resid -= pred * phi;
    }
    d(j) = resid.squaredNorm() / static_cast<double>(n - 1);
    if (!(d(j) > 0.0)) throw NumericalError("fit_banded_precision: zero residual variance");
  }
  MatrixXd precision = t.transpose() * d.cwiseInverse().asDiagonal() * t;
  precision = 0.5 * (precision + precision.transpose());
  // Entries outside the band are exactly zero in exact arithmetic.
  for (Index i = 0; i < p; ++i)
    for (Index k = 0; k < p; ++k)
      if (std::abs(i - k) > bandwidth) precision(i, k) = 0.0;
  return GaussianModel(mu, std::move(precision), GaussianEstimator::banded);
}

double chi2_gaussian(double mu, double nu, double sigma2) {
  if (!(sigma2 > 0.0)) throw InvalidInput("chi2_gaussian: sigma2 must be positive");
  const double d = mu - nu;
  return std::expm1(d * d / sigma2);
}

double chi2_gaussian(double mu, double s2, double nu, double t2) {
  if (!(s2 > 0.0) || !(t2 > 0.0)) throw InvalidInput("chi2_gaussian: variances must be positive");
  if (s2 == t2) return chi2_gaussian(mu, nu, s2);
  const double denom = 2.0 * t2 - s2;
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  const double d = mu - nu;
  return t2 / std::sqrt(s2 * denom) * std::exp(d * d / denom) - 1.0;
}

MatrixXd ar1_covariance(Index p, double rho) {
  if (p < 1) throw InvalidInput("ar1_covariance: p must be >= 1");
  if (!(std::abs(rho) < 1.0)) throw InvalidInput("ar1_covariance: |rho| must be < 1");
  MatrixXd s(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index k = 0; k < p; ++k) s(i, k) = std::pow(rho, static_cast<double>(std::abs(i - k)));
  return s;
}

void GaussianConfig::validate() const {
  if (bandwidth < 0) throw InvalidInput("gaussian: bandwidth must be >= 0");
  if (glasso_grid_size < 1) throw InvalidInput("gaussian: glasso_grid_size must be >= 1");
  if (!(glasso_min_ratio > 0.0 && glasso_min_ratio <= 1.0))
    throw InvalidInput("gaussian: glasso_min_ratio must be in (0, 1]");
  if (cv_folds < 2) throw InvalidInput("gaussian: cv_folds must be >= 2");
  if (estimator == GaussianEstimator::oracle && !oracle)
    throw InvalidInput("gaussian: estimator=oracle requires a known law");
}

GaussianModel fit_gaussian(const GaussianConfig& config, const MatrixXd& x,
                           CostCounters* counters) {
  config.validate();
  GaussianModel model;
  switch (config.estimator) {
    case GaussianEstimator::sample: model = fit_sample_gaussian(x); break;
    case GaussianEstimator::banded: model = fit_banded_precision(x, config.bandwidth); break;
    case GaussianEstimator::glasso: {
      const MatrixXd s = sample_covariance(x);
      model = fit_graphical_lasso(
          x, glasso_lambda_grid(s, config.glasso_grid_size, config.glasso_min_ratio),
          config.cv_folds, config.cv_seed);
      break;
    }
    case GaussianEstimator::oracle:
      if (config.oracle->dimension() != x.cols())
        throw InvalidInput("fit_gaussian: oracle dimension mismatch");
      model = *config.oracle;
      break;
  }
  if (counters != nullptr) counters->record_fit(FitTag::x_joint);
  return model;
}

}  // namespace citlab
