#include "citlab/core.hpp"

#include "citlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/erf.hpp>

namespace citlab {

Dataset::Dataset(MatrixXd x_, VectorXd y_, std::vector<std::string> names)
    : x(std::move(x_)), y(std::move(y_)), column_names(std::move(names)) {
  if (column_names.empty()) column_names = default_column_names(x.cols());
}

void Dataset::validate() const {
  if (x.rows() != y.size()) throw InvalidInput("dataset: rows(x) != length(y)");
  if (x.rows() < 4) throw InvalidInput("dataset: need at least 4 rows");
  if (x.cols() < 2) throw InvalidInput("dataset: need at least 2 predictors");
  if (!x.allFinite()) throw InvalidInput("dataset: predictor matrix has non-finite entries");
  if (!y.allFinite()) throw InvalidInput("dataset: response has non-finite entries");
  if (!column_names.empty() && static_cast<Index>(column_names.size()) != x.cols())
    throw InvalidInput("dataset: column_names length != p");
}

Dataset Dataset::subset(const std::vector<Index>& row_indices) const {
  return Dataset(select_rows(x, row_indices), select_rows(y, row_indices), column_names);
}

std::vector<std::string> default_column_names(Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

Index training_rows_for(Index total_rows, double proportion) {
  return static_cast<Index>(std::floor(proportion * static_cast<double>(total_rows) + 0.5));
}

SplitAssignment split_rows(Index total_rows, double proportion, std::uint64_t seed) {
  if (!(proportion > 0.0 && proportion < 1.0))
    throw InvalidInput("split: proportion must lie in (0, 1)");
  const Index m = training_rows_for(total_rows, proportion);
  if (m < 2 || total_rows - m < 2) throw InvalidInput("split: resulting half has fewer than 2 rows");

  std::vector<Index> perm(static_cast<std::size_t>(total_rows));
  std::iota(perm.begin(), perm.end(), Index{0});
  Engine engine = make_stream(seed, StreamPurpose::split);
  for (Index i = total_rows - 1; i > 0; --i) {
    const auto k = static_cast<Index>(uniform_below(engine, static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]);
  }

  SplitAssignment s;
  s.proportion = proportion;
  s.seed = seed;
  s.d2_indices.assign(perm.begin(), perm.begin() + m);
  s.d1_indices.assign(perm.begin() + m, perm.end());
  std::sort(s.d1_indices.begin(), s.d1_indices.end());
  std::sort(s.d2_indices.begin(), s.d2_indices.end());
  return s;
}

SplitAssignment split_data(const Dataset& dataset, double proportion, std::uint64_t seed) {
  return split_rows(dataset.rows(), proportion, seed);
}

std::vector<bool> bonferroni_select(const std::vector<double>& pvalues, double alpha) {
  if (pvalues.empty()) throw InvalidInput("bonferroni: empty p-value vector");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("bonferroni: alpha must lie in (0, 1)");
  const double cutoff = alpha / static_cast<double>(pvalues.size());
  std::vector<bool> out(pvalues.size());
  for (std::size_t j = 0; j < pvalues.size(); ++j) {
    if (!(pvalues[j] > 0.0 && pvalues[j] <= 1.0))
      throw InvalidInput("bonferroni: p-values must lie in (0, 1]");
    out[j] = pvalues[j] <= cutoff;
  }
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_pvalue(double statistic, Sided sided) {
  if (!std::isfinite(statistic)) throw InvalidInput("normal_pvalue: non-finite statistic");
  if (sided == Sided::upper) return 0.5 * std::erfc(statistic / std::sqrt(2.0));
  return std::erfc(std::abs(statistic) / std::sqrt(2.0));
}

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw InvalidInput("normal_quantile: prob outside (0, 1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * prob);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::tpcm: return "tpcm";
    case Method::vpcm: return "vpcm";
    case Method::hrt: return "hrt";
    case Method::gcm: return "gcm";
    case Method::oracle_gcm: return "oracle_gcm";
    case Method::tgcm: return "tgcm";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "tpcm") return Method::tpcm;
  if (name == "vpcm" || name == "pcm") return Method::vpcm;
  if (name == "hrt") return Method::hrt;
  if (name == "gcm") return Method::gcm;
  if (name == "oracle_gcm" || name == "oraclegcm") return Method::oracle_gcm;
  if (name == "tgcm") return Method::tgcm;
  throw InvalidInput("unknown method '" + name + "'");
}

CounterSnapshot CounterSnapshot::operator-(const CounterSnapshot& o) const {
  CounterSnapshot r;
  r.ml_y_given_x = ml_y_given_x - o.ml_y_given_x;
  r.ml_x = ml_x - o.ml_x;
  r.ml_xj_given_rest = ml_xj_given_rest - o.ml_xj_given_rest;
  r.predict_xj_given_rest = predict_xj_given_rest - o.predict_xj_given_rest;
  r.predict_y_given_x = predict_y_given_x - o.predict_y_given_x;
  r.predict_observed = predict_observed - o.predict_observed;
  r.rows_predicted = rows_predicted - o.rows_predicted;
  r.rows_sampled = rows_sampled - o.rows_sampled;
  return r;
}

CounterSnapshot CounterSnapshot::operator+(const CounterSnapshot& o) const {
  CounterSnapshot r;
  r.ml_y_given_x = ml_y_given_x + o.ml_y_given_x;
  r.ml_x = ml_x + o.ml_x;
  r.ml_xj_given_rest = ml_xj_given_rest + o.ml_xj_given_rest;
  r.predict_xj_given_rest = predict_xj_given_rest + o.predict_xj_given_rest;
  r.predict_y_given_x = predict_y_given_x + o.predict_y_given_x;
  r.predict_observed = predict_observed + o.predict_observed;
  r.rows_predicted = rows_predicted + o.rows_predicted;
  r.rows_sampled = rows_sampled + o.rows_sampled;
  return r;
}

CostCounters& CostCounters::operator=(const CostCounters& other) {
  if (this == &other) return *this;
  const CounterSnapshot s = other.snapshot();
  ml_y_given_x_ = s.ml_y_given_x;
  ml_x_ = s.ml_x;
  ml_xj_given_rest_ = s.ml_xj_given_rest;
  predict_xj_given_rest_ = s.predict_xj_given_rest;
  predict_y_given_x_ = s.predict_y_given_x;
  predict_observed_ = s.predict_observed;
  rows_predicted_ = s.rows_predicted;
  rows_sampled_ = s.rows_sampled;
  return *this;
}

void CostCounters::record_fit(FitTag tag) {
  switch (tag) {
    case FitTag::y_given_x: ++ml_y_given_x_; break;
    case FitTag::x_joint: ++ml_x_; break;
    case FitTag::xj_given_rest: ++ml_xj_given_rest_; break;
  }
}

void CostCounters::record_predict(PredictTag tag, std::uint64_t rows) {
  if (rows == 0) return;
  switch (tag) {
    case PredictTag::y_given_x: ++predict_y_given_x_; break;
    case PredictTag::xj_given_rest: ++predict_xj_given_rest_; break;
    case PredictTag::observed: ++predict_observed_; break;
  }
  rows_predicted_ += rows;
}

void CostCounters::record_sample(std::uint64_t rows) {
  if (rows == 0) return;
  ++predict_xj_given_rest_;
  rows_sampled_ += rows;
}

CounterSnapshot CostCounters::snapshot() const {
  CounterSnapshot s;
  s.ml_y_given_x = ml_y_given_x_.load();
  s.ml_x = ml_x_.load();
  s.ml_xj_given_rest = ml_xj_given_rest_.load();
  s.predict_xj_given_rest = predict_xj_given_rest_.load();
  s.predict_y_given_x = predict_y_given_x_.load();
  s.predict_observed = predict_observed_.load();
  s.rows_predicted = rows_predicted_.load();
  s.rows_sampled = rows_sampled_.load();
  return s;
}

void CostCounters::add(const CounterSnapshot& s) {
  ml_y_given_x_ += s.ml_y_given_x;
  ml_x_ += s.ml_x;
  ml_xj_given_rest_ += s.ml_xj_given_rest;
  predict_xj_given_rest_ += s.predict_xj_given_rest;
  predict_y_given_x_ += s.predict_y_given_x;
  predict_observed_ += s.predict_observed;
  rows_predicted_ += s.rows_predicted;
  rows_sampled_ += s.rows_sampled;
}

std::vector<double> TestRun::pvalues() const {
  std::vector<double> p;
  p.reserve(outcomes.size());
  for (const auto& o : outcomes) p.push_back(o.pvalue);
  return p;
}

MatrixXd select_rows(const MatrixXd& x, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
  return out;
}

VectorXd select_rows(const VectorXd& v, const std::vector<Index>& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = v(rows[i]);
  return out;
}

MatrixXd drop_column(const MatrixXd& x, Index drop) {
  MatrixXd out(x.rows(), x.cols() - 1);
  if (drop > 0) out.leftCols(drop) = x.leftCols(drop);
  if (drop < x.cols() - 1) out.rightCols(x.cols() - 1 - drop) = x.rightCols(x.cols() - 1 - drop);
  return out;
}

MatrixXd select_columns(const MatrixXd& x, const std::vector<Index>& cols) {
  MatrixXd out(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = x.col(cols[k]);
  return out;
}

}  // namespace citlab
