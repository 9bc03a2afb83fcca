#include "caprob/error.h"
#include "caprob/estimators.h"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace caprob {

namespace {

using Eigen::ArrayXd;

// Max-norm distances from row i to every row, written into `out`.
void chebyshev_from(const Eigen::MatrixXd& m, Eigen::Index i, ArrayXd& out) {
  out = (m.col(0).array() - m(i, 0)).abs();
  for (Eigen::Index c = 1; c < m.cols(); ++c) {
    out = out.max((m.col(c).array() - m(i, c)).abs());
  }
}

double kth_smallest(ArrayXd& scratch, int k) {
  auto* begin = scratch.data();
  std::nth_element(begin, begin + (k - 1), begin + scratch.size());
  return begin[k - 1];
}

std::vector<double> digamma_table(Eigen::Index n) {
  std::vector<double> t(static_cast<std::size_t>(n) + 1, 0.0);
  for (Eigen::Index m = 1; m <= n; ++m) {
    t[static_cast<std::size_t>(m)] = boost::math::digamma(static_cast<double>(m));
  }
  return t;
}

}  // namespace

MIEstimate ksg_mi(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, int k) {
  if (u.rows() != v.rows()) throw Error(ErrorKind::LengthMismatch, "u and v differ in rows");
  if (u.cols() < 1 || v.cols() < 1) throw Error(ErrorKind::ShapeMismatch, "empty sample columns");
  const Eigen::Index n = u.rows();
  if (k < 1 || n <= k) throw Error(ErrorKind::TooFewSamples, "KSG needs n > k >= 1");

  const auto psi = digamma_table(n);
  const double inf = std::numeric_limits<double>::infinity();
  ArrayXd du(n), dv(n), dz(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    chebyshev_from(u, i, du);
    chebyshev_from(v, i, dv);
    du(i) = inf;
    dv(i) = inf;
    dz = du.max(dv);
    const double eps = kth_smallest(dz, k);
    const auto nu = (du < eps).count();
    const auto nv = (dv < eps).count();
    acc += psi[static_cast<std::size_t>(nu + 1)] + psi[static_cast<std::size_t>(nv + 1)];
  }
  MIEstimate est;
  est.estimator = EstimatorId::Ksg;
  est.value = psi[static_cast<std::size_t>(k)] + psi[static_cast<std::size_t>(n)] -
              acc / static_cast<double>(n);
  est.diagnostics["k"] = k;
  est.diagnostics["n"] = static_cast<double>(n);
  return est;
}

double knn_entropy(const Eigen::MatrixXd& a, int k) {
  const Eigen::Index n = a.rows();
  if (k < 1 || n <= k) throw Error(ErrorKind::TooFewSamples, "k-NN entropy needs n > k >= 1");
  ArrayXd d(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    chebyshev_from(a, i, d);
    d(i) = std::numeric_limits<double>::infinity();
    const double r = kth_smallest(d, k);
    if (!(r > 0.0)) throw Error(ErrorKind::NonFinite, "duplicate rows give zero k-NN radius");
    acc += std::log(2.0 * r);
  }
  return boost::math::digamma(static_cast<double>(n)) - boost::math::digamma(static_cast<double>(k)) +
         static_cast<double>(a.cols()) * acc / static_cast<double>(n);
}

}  // namespace caprob
