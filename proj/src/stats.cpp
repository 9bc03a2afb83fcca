#include "caprob/stats.h"

#include "caprob/error.h"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace caprob {

std::vector<double> holm_bonferroni(const std::vector<double>& p_values) {
  if (p_values.empty()) throw Error(ErrorKind::InvalidArgument, "no p-values to adjust");
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t rank = 0; rank < m; ++rank) {
    const double p = p_values[order[rank]];
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, "p-value outside [0, 1]");
    running = std::max(running, std::min(1.0, static_cast<double>(m - rank) * p));
    adjusted[order[rank]] = running;
  }
  return adjusted;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

double median_of(std::vector<double> v) { return quantile_of(std::move(v), 0.5); }

TTest one_sided_t(const std::vector<double>& samples, double null_value) {
  if (samples.size() < 2) throw Error(ErrorKind::TooFewSamples, "t-test needs >= 2 samples");
  const double sd = sample_std(samples);
  if (!(sd > 0.0)) throw Error(ErrorKind::DegenerateVariance, "all samples are equal");
  const double n = static_cast<double>(samples.size());
  TTest r;
  r.t = (mean_of(samples) - null_value) / (sd / std::sqrt(n));
  boost::math::students_t dist(n - 1.0);
  r.p = boost::math::cdf(boost::math::complement(dist, r.t));
  return r;
}

TTest one_sided_t_or_degenerate(const std::vector<double>& samples, double null_value) {
  try {
    return one_sided_t(samples, null_value);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateVariance) throw;
    const double m = mean_of(samples);
    TTest r;
    r.t = m > null_value ? std::numeric_limits<double>::infinity()
                         : (m < null_value ? -std::numeric_limits<double>::infinity() : 0.0);
    r.p = m > null_value ? 0.0 : 1.0;
    return r;
  }
}

}  // namespace caprob
