#include "citlab/equivalence.hpp"

#include "citlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace citlab {

namespace {

double mean_square(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.squaredNorm() / static_cast<double>(v.size());
}

double mse(const VectorXd& y, const VectorXd& pred) { return mean_square(y - pred); }

// num / den with 0/0 read as 0.
double ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

// Monte Carlo E[(m(X~_j, z) - center)^2 | z] under `law`.
VectorXd second_moment(const ColumnSubstitution& sub, const ConditionalLaw& law, const MatrixXd& rows,
                       const VectorXd& center, int b, Engine engine) {
  NormalSource normal(std::move(engine));
  const VectorXd means = law.means(rows);
  const double sd = law.sampling_sd();
  VectorXd draw;
  VectorXd out;
  VectorXd acc = VectorXd::Zero(rows.rows());
  for (int k = 0; k < b; ++k) {
    sample_around(means, sd, normal, draw);
    sub.evaluate(draw, out);
    acc += (out - center).cwiseAbs2();
  }
  return acc / static_cast<double>(b);
}

}  // namespace

IdentityCheck hrt_identity(const VectorXd& y, const VectorXd& fitted, const VectorXd& tower) {
  if (y.size() == 0) throw InvalidInput("hrt identity: no observations");
  const ResidualTrace tr = make_trace(y, fitted, tower);
  const double n = static_cast<double>(y.size());
  double cross;
  if (tr.sigma_hat > 0.0) {
    const double t = tr.products.sum() / std::sqrt(n) / tr.sigma_hat;
    cross = 2.0 * tr.sigma_hat / std::sqrt(n) * t;
  } else {
    cross = 2.0 * tr.products.sum() / n;
  }
  IdentityCheck c;
  c.lhs = mse(y, fitted);
  c.rhs = -cross + mean_square(tr.xi_hat) + mean_square(tr.eps);
  c.error = std::abs(c.lhs - c.rhs);
  return c;
}

double check_hrt_identity(const SplitFits& fits, const ConditionalLaw& law, int b, std::uint64_t seed) {
  Engine engine = make_stream(seed, StreamPurpose::tower, static_cast<std::uint64_t>(law.variable));
  const VectorXd tower = tower_mean(*fits.m_hat, law, fits.x1, fits.fitted1, b, engine);
  return hrt_identity(fits.y1, fits.fitted1, tower).error;
}

double check_hrt_identity(const SplitFits& fits, Index j, int b, std::uint64_t seed) {
  return check_hrt_identity(fits, fits.law.conditional_law(j), b, seed);
}

DecisionCheck check_decision_identity(const SplitFits& fits, const ConditionalLaw& law,
                                      const DecisionOptions& options) {
  if (options.b_tower < 1 || options.b_hrt < 1 || options.b_sigma < 1)
    throw InvalidInput("decision identity: resample counts must be >= 1");
  const Index j = law.variable;
  const auto uj = static_cast<std::uint64_t>(j);
  const MatrixXd& x1 = fits.x1;
  const VectorXd& y1 = fits.y1;
  const VectorXd& base = fits.fitted1;
  const auto sub = fits.m_hat->substitution(x1, j, base);

  Engine tower_engine = make_stream(options.seed, StreamPurpose::tower, uj);
  const VectorXd tower = tower_mean(*fits.m_hat, law, x1, base, options.b_tower, tower_engine);
  const VectorXd c = second_moment(*sub, law, x1, tower, options.b_tower,
                                   make_stream(options.seed, StreamPurpose::second_moment, uj));
  const VectorXd c_sigma = second_moment(*sub, law, x1, tower, options.b_sigma,
                                         make_stream(options.seed, StreamPurpose::sigma, uj));
  const VectorXd eps = y1 - tower;
  double sigma_n = std::sqrt(eps.cwiseAbs2().cwiseProduct(c_sigma).mean());
  // Both statistics are then identically zero; any positive scale will do.
  if (!(sigma_n > 0.0)) sigma_n = 1.0;

  DecisionCheck out;
  out.sigma_n = sigma_n;
  out.hrt_statistic = mse(y1, base);
  out.rhrt_statistic = rhrt_statistic(make_trace(y1, base, tower), c, sigma_n);

  // Same stream as hrt_variable, so the HRT half reproduces hrt_test exactly.
  NormalSource normal(make_stream(options.seed, StreamPurpose::hrt, uj));
  const VectorXd means = law.means(x1);
  const double sd = law.sampling_sd();
  VectorXd draw;
  VectorXd pred;
  std::size_t hrt_count = 0;
  std::size_t rhrt_count = 0;
  for (int k = 0; k < options.b_hrt; ++k) {
    sample_around(means, sd, normal, draw);
    sub->evaluate(draw, pred);
    if (mse(y1, pred) <= out.hrt_statistic) ++hrt_count;
    if (rhrt_statistic(make_trace(y1, pred, tower), c, sigma_n) >= out.rhrt_statistic) ++rhrt_count;
  }
  const double denom = static_cast<double>(options.b_hrt) + 1.0;
  out.hrt_pvalue = static_cast<double>(1 + hrt_count) / denom;
  out.rhrt_pvalue = static_cast<double>(1 + rhrt_count) / denom;
  out.hrt_reject = out.hrt_pvalue <= options.alpha;
  out.rhrt_reject = out.rhrt_pvalue <= options.alpha;
  out.agree = out.hrt_reject == out.rhrt_reject;
  return out;
}

DecisionCheck check_decision_identity(const SplitFits& fits, Index j, const DecisionOptions& options) {
  return check_decision_identity(fits, fits.law.conditional_law(j), options);
}

std::map<std::string, double> assumption_diagnostics(const DiagnosticInputs& in, int b,
                                                     std::uint64_t seed) {
  if (!in.fitted_law)
    throw UnsupportedError("assumption diagnostics: the chi-square term needs a Gaussian L^");
  if (!in.m_hat || !in.true_mean) throw InvalidInput("assumption diagnostics: missing mean function");
  if (b < 1) throw InvalidInput("assumption diagnostics: b must be >= 1");
  const ConditionalLaw& fitted = *in.fitted_law;
  const ConditionalLaw& truth = in.true_law;
  if (fitted.variable != truth.variable) throw InvalidInput("assumption diagnostics: variable mismatch");
  const Index j = truth.variable;
  const MatrixXd& x = in.x1;
  const Index n = x.rows();
  if (n < 1) throw InvalidInput("assumption diagnostics: no rows");

  const VectorXd base_hat = in.m_hat->predict(x);
  const VectorXd base_true = in.true_mean->predict(x);
  const auto sub_hat = in.m_hat->substitution(x, j, base_hat);
  const auto sub_true = in.true_mean->substitution(x, j, base_true);
  const VectorXd means = truth.means(x);
  const double sd = truth.sampling_sd();
  NormalSource normal(make_stream(seed, StreamPurpose::second_moment, static_cast<std::uint64_t>(j)));

  VectorXd acc_hat = VectorXd::Zero(n);
  VectorXd acc2_hat = VectorXd::Zero(n);
  VectorXd acc_true = VectorXd::Zero(n);
  VectorXd draw;
  VectorXd out_hat;
  VectorXd out_true;
  for (int k = 0; k < b; ++k) {
    sample_around(means, sd, normal, draw);
    sub_hat->evaluate(draw, out_hat);
    sub_true->evaluate(draw, out_true);
    const VectorXd d = out_hat - base_hat;
    acc_hat += d;
    acc2_hat += d.cwiseAbs2();
    acc_true += out_true - base_true;
  }
  const double bb = static_cast<double>(b);
  const VectorXd mean_dev = acc_hat / bb;
  const VectorXd second_dev = acc2_hat / bb;
  const VectorXd m_j = base_true + acc_true / bb;
  // E[xi^2 | z] with xi = m^(X) - E[m^(X) | z].
  const VectorXd xi2 = (second_dev - mean_dev.cwiseAbs2()).cwiseMax(0.0);
  // E[(m^(X) - m_j(z))^2 | z].
  const VectorXd gap = base_hat - m_j;
  const VectorXd mse_i =
      (second_dev + 2.0 * gap.cwiseProduct(mean_dev) + gap.cwiseAbs2()).cwiseMax(0.0);

  const VectorXd fitted_means = fitted.means(x);
  VectorXd chi(n);
  for (Index i = 0; i < n; ++i)
    chi(i) = chi2_gaussian(fitted_means(i), fitted.variance, means(i), truth.variance);

  const double sigma_n2 = in.noise_variance * xi2.mean();
  std::map<std::string, double> r;
  r["sigma_n2"] = sigma_n2;
  r["E2_L"] = ratio(chi.cwiseProduct(xi2).mean(), sigma_n2);
  r["E2_m_prime"] = ratio(mse_i.cwiseProduct(xi2).mean(), sigma_n2);
  r["E2_m"] = ratio(mse_i.mean(), sigma_n2);
  const double rn = std::sqrt(static_cast<double>(n));
  r["dr_product"] = rn * std::sqrt(r["E2_L"] * r["E2_m"]);
  if (r["E2_L"] == 0.0 || r["E2_m"] == 0.0) r["dr_product"] = 0.0;
  r["raw_chi2"] = chi.mean();
  r["raw_mse"] = mse_i.mean();
  r["raw_dr_product"] = rn * std::sqrt(r["raw_chi2"] * r["raw_mse"]);
  return r;
}

// ---------------------------------------------------------------------------

VectorXd LinearSuiteConfig::default_eta() {
  VectorXd v(4);
  v << 0.5, -0.4, 0.3, 0.0;
  return v;
}

VectorXd LinearSuiteConfig::default_gamma() {
  VectorXd v(4);
  v << 1.0, 0.5, 0.0, -0.5;
  return v;
}

void LinearSuiteConfig::validate() const {
  if (n_grid.empty()) throw InvalidInput("linear suite: empty n grid");
  for (Index n : n_grid)
    if (n < 10) throw InvalidInput("linear suite: every n must be >= 10");
  if (reps < 1) throw InvalidInput("linear suite: reps must be >= 1");
  if (eta.size() < 1 || eta.size() != gamma.size())
    throw InvalidInput("linear suite: eta and gamma must have the same nonzero length");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("linear suite: alpha must lie in (0, 1)");
  if (b_tpcm < 1 || b_hrt < 1 || b_diagnostics < 1)
    throw InvalidInput("linear suite: resample counts must be >= 1");
  if (workers < 1) throw InvalidInput("linear suite: workers must be >= 1");
}

LinearReplicate linear_replicate(const LinearSuiteConfig& config, Index n, int rep) {
  const Index q = config.eta.size();
  const Index p = q + 1;
  const auto un = static_cast<std::uint64_t>(n);
  const auto ur = static_cast<std::uint64_t>(rep);
  Engine uniform = make_stream(config.seed, StreamPurpose::dgp, un, 2 * ur);
  NormalSource normal(make_stream(config.seed, StreamPurpose::dgp, un, 2 * ur + 1));
  const double half_width = std::sqrt(3.0);
  MatrixXd x(2 * n, p);
  VectorXd y(2 * n);
  for (Index i = 0; i < 2 * n; ++i) {
    for (Index k = 0; k < q; ++k) x(i, k + 1) = (2.0 * uniform01(uniform) - 1.0) * half_width;
    const auto z = x.row(i).tail(q);
    x(i, 0) = z.dot(config.eta) + normal();
    y(i) = config.beta * x(i, 0) + z.dot(config.gamma) + normal();
  }

  SplitFits fits;
  fits.x1 = x.topRows(n);
  fits.y1 = y.head(n);
  const MatrixXd x2 = x.bottomRows(n);
  const VectorXd y2 = y.tail(n);
  fits.m_hat = fit_ols(x2, y2);
  fits.fitted1 = fits.m_hat->predict(fits.x1);
  const auto xj_fit = fit_ols(x2.rightCols(q), x2.col(0));
  ConditionalLaw law;
  law.variable = 0;
  law.coefficients = xj_fit->coefficients();
  law.intercept = xj_fit->intercept();
  law.variance = 1.0;

  const std::uint64_t seed = derive_seed(config.seed, StreamPurpose::replicate, un, ur);
  LinearReplicate r;
  const TestOutcome t = tpcm_variable(fits, law, config.b_tpcm, seed);
  r.tpcm_statistic = t.statistic;
  r.tpcm_pvalue = t.pvalue;
  if (config.with_hrt) r.hrt_pvalue = hrt_variable(fits, law, config.b_hrt, seed).pvalue;
  r.identity_error = check_hrt_identity(fits, law, config.b_tpcm, seed);
  if (config.with_diagnostics) {
    DiagnosticInputs in;
    in.x1 = fits.x1;
    in.m_hat = fits.m_hat;
    in.fitted_law = law;
    VectorXd coef(p);
    coef << config.beta, config.gamma;
    in.true_mean = std::make_shared<LinearModel>(coef, 0.0);
    in.true_law.variable = 0;
    in.true_law.coefficients = config.eta;
    in.true_law.intercept = 0.0;
    in.true_law.variance = 1.0;
    in.noise_variance = 1.0;
    r.diagnostics = assumption_diagnostics(in, config.b_diagnostics, seed);
  }
  return r;
}

std::vector<EquivalenceReport> linear_model_suite(const LinearSuiteConfig& config) {
  config.validate();
  std::vector<EquivalenceReport> reports;
  for (Index n : config.n_grid) {
    std::vector<LinearReplicate> reps(static_cast<std::size_t>(config.reps));
    parallel_for(config.reps, config.workers, [&](Index r) {
      reps[static_cast<std::size_t>(r)] = linear_replicate(config, n, static_cast<int>(r));
    });
    EquivalenceReport rep;
    rep.n = n;
    rep.reps = config.reps;
    int reject = 0;
    int hrt_reject = 0;
    int agree = 0;
    std::map<std::string, std::vector<double>> terms;
    for (const auto& r : reps) {
      rep.statistics.push_back(r.tpcm_statistic);
      rep.identity_max_abs_error = std::max(rep.identity_max_abs_error, r.identity_error);
      const bool a = r.tpcm_pvalue <= config.alpha;
      const bool h = r.hrt_pvalue <= config.alpha;
      reject += a;
      hrt_reject += h;
      agree += (a == h);
      for (const auto& [k, v] : r.diagnostics) terms[k].push_back(v);
    }
    const double reps_d = static_cast<double>(config.reps);
    rep.level = reject / reps_d;
    rep.level_se = binomial_se(rep.level, config.reps);
    if (config.with_hrt) {
      rep.hrt_level = hrt_reject / reps_d;
      rep.decision_agreement_rate = agree / reps_d;
      rep.agreement_se = binomial_se(rep.decision_agreement_rate, config.reps);
    } else {
      rep.hrt_level = std::numeric_limits<double>::quiet_NaN();
      rep.decision_agreement_rate = std::numeric_limits<double>::quiet_NaN();
      rep.agreement_se = std::numeric_limits<double>::quiet_NaN();
    }
    const KsResult ks = ks_test_normal(rep.statistics);
    rep.ks_statistic = ks.statistic;
    rep.ks_pvalue = ks.pvalue;
    for (auto& [k, v] : terms) rep.assumption_terms[k] = median_of(v);
    reports.push_back(std::move(rep));
  }
  return reports;
}

}  // namespace citlab
