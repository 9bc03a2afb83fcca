#pragma once

#include <vector>

namespace caprob {

/// Step-down Holm adjustment; output is in input order.
std::vector<double> holm_bonferroni(const std::vector<double>& p_values);

struct TTest {
  double t = 0.0;
  double p = 1.0;
};

/// One-sided Student t-test of mean > null with n-1 degrees of freedom.
/// Throws DegenerateVariance when all samples are equal; callers that want
/// the conventional fallback use one_sided_t_or_degenerate.
TTest one_sided_t(const std::vector<double>& samples, double null_value = 0.0);

/// As one_sided_t, but equal samples give p = 0 (mean > null) or p = 1.
TTest one_sided_t_or_degenerate(const std::vector<double>& samples, double null_value = 0.0);

double mean_of(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);  // n-1 denominator; 0 for n < 2
double median_of(std::vector<double> v);
double quantile_of(std::vector<double> v, double q);  // linear interpolation

}  // namespace caprob
