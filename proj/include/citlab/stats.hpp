#pragma once

#include <functional>
#include <vector>

namespace citlab {

struct KsResult {
  double statistic = 0.0;
  double pvalue = 1.0;
};

/// Asymptotic Kolmogorov tail probability P(K > lambda).
double kolmogorov_tail(double lambda);

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);
KsResult ks_test_normal(const std::vector<double>& sample);
KsResult ks_test_uniform(const std::vector<double>& sample);

double mean_of(const std::vector<double>& v);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sd_of(const std::vector<double>& v);
double median_of(std::vector<double> v);

/// sqrt(q (1 - q) / reps).
double binomial_se(double q, int reps);

}  // namespace citlab
