#include "caprob/error.h"
#include "caprob/estimators.h"

#include <algorithm>
#include <cmath>
#include <vector>

namespace caprob {

namespace {

struct Binned {
  std::vector<int> idx;
  double width = 0.0;  // zero for a degenerate (constant) column
};

Binned bin_column(const Eigen::Ref<const Eigen::VectorXd>& x, const HistogramSpec& spec) {
  const int k = spec.bins_k;
  double lo = spec.lo, hi = spec.hi;
  if (spec.range == BinRange::PerSampleMinMax) {
    lo = x.minCoeff();
    hi = x.maxCoeff();
  }
  Binned b;
  b.idx.assign(static_cast<std::size_t>(x.size()), 0);
  if (!(hi > lo)) return b;
  b.width = (hi - lo) / k;
  const double scale = k / (hi - lo);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const int j = static_cast<int>(std::floor((x(i) - lo) * scale));
    b.idx[static_cast<std::size_t>(i)] = std::clamp(j, 0, k - 1);
  }
  return b;
}

struct CountEntropy {
  double h = 0.0;
  int occupied = 0;
};

CountEntropy entropy_from_counts(const std::vector<long>& counts, double n, bool mm) {
  CountEntropy r;
  for (long c : counts) {
    if (c <= 0) continue;
    const double p = static_cast<double>(c) / n;
    r.h -= p * std::log(p);
    ++r.occupied;
  }
  if (mm) r.h += (r.occupied - 1) / (2.0 * n);
  return r;
}

void check_spec(const HistogramSpec& spec, Eigen::Index n) {
  if (spec.bins_k < 2) throw Error(ErrorKind::InvalidArgument, "bins_k must be >= 2");
  if (spec.range == BinRange::Fixed && !(spec.hi > spec.lo)) {
    throw Error(ErrorKind::InvalidArgument, "fixed range needs hi > lo");
  }
  if (n < 2 * static_cast<Eigen::Index>(spec.bins_k)) {
    throw Error(ErrorKind::TooFewSamples, "need n >= 2K samples, got " + std::to_string(n));
  }
}

}  // namespace

std::string to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::HistogramMM: return "histogram_mm";
    case EstimatorId::Ksg: return "ksg";
    case EstimatorId::Mine: return "mine";
    case EstimatorId::InfoNce: return "infonce";
  }
  return "unknown";
}

EstimatorId estimator_from_string(const std::string& name) {
  if (name == "histogram_mm" || name == "histogram") return EstimatorId::HistogramMM;
  if (name == "ksg") return EstimatorId::Ksg;
  if (name == "mine") return EstimatorId::Mine;
  if (name == "infonce") return EstimatorId::InfoNce;
  throw Error(ErrorKind::InvalidArgument, "unknown estimator '" + name + "'");
}

MIEstimate histogram_mi_1d(const Eigen::Ref<const Eigen::VectorXd>& u,
                           const Eigen::Ref<const Eigen::VectorXd>& v, const HistogramSpec& spec) {
  if (u.size() != v.size()) throw Error(ErrorKind::LengthMismatch, "u and v differ in length");
  check_spec(spec, u.size());
  const int k = spec.bins_k;
  const auto bu = bin_column(u, spec);
  const auto bv = bin_column(v, spec);
  std::vector<long> cu(static_cast<std::size_t>(k), 0), cv(static_cast<std::size_t>(k), 0);
  std::vector<long> cuv(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < bu.idx.size(); ++i) {
    ++cu[static_cast<std::size_t>(bu.idx[i])];
    ++cv[static_cast<std::size_t>(bv.idx[i])];
    ++cuv[static_cast<std::size_t>(bu.idx[i] * k + bv.idx[i])];
  }
  const double n = static_cast<double>(u.size());
  const auto hu = entropy_from_counts(cu, n, spec.miller_madow);
  const auto hv = entropy_from_counts(cv, n, spec.miller_madow);
  const auto huv = entropy_from_counts(cuv, n, spec.miller_madow);
  MIEstimate est;
  est.estimator = EstimatorId::HistogramMM;
  est.value = hu.h + hv.h - huv.h;
  if (spec.clamp_nonneg) est.value = std::max(est.value, 0.0);
  est.diagnostics["occupied_u"] = hu.occupied;
  est.diagnostics["occupied_v"] = hv.occupied;
  est.diagnostics["occupied_uv"] = huv.occupied;
  return est;
}

double histogram_entropy_1d(const Eigen::Ref<const Eigen::VectorXd>& u, const HistogramSpec& spec) {
  check_spec(spec, u.size());
  const auto b = bin_column(u, spec);
  std::vector<long> c(static_cast<std::size_t>(spec.bins_k), 0);
  for (int j : b.idx) ++c[static_cast<std::size_t>(j)];
  return entropy_from_counts(c, static_cast<double>(u.size()), spec.miller_madow).h;
}

double perdim_mi(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const HistogramSpec& spec) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "perdim_mi needs matching shapes");
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    total += std::max(0.0, histogram_mi_1d(a.col(j), b.col(j), spec).value);
  }
  return total;
}

double perdim_entropy(const Eigen::MatrixXd& a, const HistogramSpec& spec) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) total += histogram_entropy_1d(a.col(j), spec);
  return total;
}

double pca_histogram_entropy(const Eigen::MatrixXd& a, const HistogramSpec& spec) {
  check_spec(spec, a.rows());
  const Eigen::MatrixXd centered = a.rowwise() - a.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(a.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::MatrixXd z = centered * solver.eigenvectors();
  HistogramSpec per_axis = spec;
  per_axis.range = BinRange::PerSampleMinMax;
  double total = 0.0;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const auto b = bin_column(z.col(j), per_axis);
    if (!(b.width > 0.0)) {
      throw Error(ErrorKind::NonFinite, "differential entropy of a constant axis is -inf");
    }
    std::vector<long> c(static_cast<std::size_t>(spec.bins_k), 0);
    for (int k : b.idx) ++c[static_cast<std::size_t>(k)];
    total += entropy_from_counts(c, static_cast<double>(a.rows()), spec.miller_madow).h +
             std::log(b.width);
  }
  return total;
}

double leak_debit_summary(const Eigen::MatrixXd& a_pi, const Eigen::MatrixXd& delta,
                          const HistogramSpec& spec) {
  if (a_pi.rows() != delta.rows()) throw Error(ErrorKind::LengthMismatch, "row counts differ");
  const Eigen::VectorXd summary = delta.cwiseAbs().rowwise().maxCoeff();
  double total = 0.0;
  for (Eigen::Index j = 0; j < a_pi.cols(); ++j) {
    total += std::max(0.0, histogram_mi_1d(a_pi.col(j), summary, spec).value);
  }
  return total;
}

}  // namespace caprob
