#include "caprob/gaussian_core.h"

#include "caprob/error.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace caprob {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = 1e-10;

void check_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument, "covariance must be square and non-empty");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= kSymmetryTol * scale)) {
    throw Error(ErrorKind::InvalidArgument, "covariance is not symmetric");
  }
}

}  // namespace

CovarianceMatrix::CovarianceMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  check_symmetric(entries_);
  entries_ = 0.5 * (entries_ + entries_.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(entries_, Eigen::EigenvaluesOnly);
  const double min_eig = solver.eigenvalues().minCoeff();
  if (min_eig < -kPsdTol * std::max(std::abs(entries_.trace()), 1e-300)) {
    throw Error(ErrorKind::InvalidArgument,
                "covariance is not positive semi-definite (min eigenvalue " +
                    std::to_string(min_eig) + ")");
  }
}

CovarianceMatrix::CovarianceMatrix(Eigen::MatrixXd entries, Trusted)
    : entries_(std::move(entries)) {
  check_symmetric(entries_);
  entries_ = 0.5 * (entries_ + entries_.transpose()).eval();
}

CovarianceMatrix CovarianceMatrix::from_factored(Eigen::MatrixXd entries) {
  return CovarianceMatrix(std::move(entries), Trusted{});
}

JointGaussian::JointGaussian(std::vector<Block> blocks, CovarianceMatrix cov)
    : blocks_(std::move(blocks)), cov_(std::move(cov)) {
  std::set<std::string> seen;
  Eigen::Index total = 0;
  for (const auto& b : blocks_) {
    if (b.dim <= 0) throw Error(ErrorKind::InvalidArgument, "block '" + b.name + "' has dim 0");
    if (!seen.insert(b.name).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate block name '" + b.name + "'");
    }
    offsets_.push_back(total);
    total += b.dim;
  }
  if (total != cov_.dim()) {
    throw Error(ErrorKind::InvalidArgument, "block dims sum to " + std::to_string(total) +
                                                " but covariance has dim " +
                                                std::to_string(cov_.dim()));
  }
}

Eigen::Index JointGaussian::offset(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return offsets_[i];
  }
  throw Error(ErrorKind::UnknownBlock, "no block named '" + name + "'");
}

std::vector<Eigen::Index> JointGaussian::indices(const std::vector<std::string>& names) const {
  std::vector<Eigen::Index> idx;
  for (const auto& name : names) {
    auto it = std::find_if(blocks_.begin(), blocks_.end(),
                           [&](const Block& b) { return b.name == name; });
    if (it == blocks_.end()) throw Error(ErrorKind::UnknownBlock, "no block named '" + name + "'");
    const auto k = static_cast<std::size_t>(it - blocks_.begin());
    for (Eigen::Index j = 0; j < it->dim; ++j) idx.push_back(offsets_[k] + j);
  }
  return idx;
}

CovarianceMatrix JointGaussian::marginal(const std::vector<std::string>& names) const {
  const auto idx = indices(names);
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd sub(n, n);
  const auto& full = cov_.entries();
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) sub(r, c) = full(idx[r], idx[c]);
  }
  // A principal submatrix of a PSD matrix is PSD.
  return CovarianceMatrix::from_factored(std::move(sub));
}

double log_det(const CovarianceMatrix& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov.entries());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "Cholesky factorization failed");
  }
  const auto& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double d = l(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw Error(ErrorKind::NotPositiveDefinite, "non-positive pivot in Cholesky factor");
    }
    acc += std::log(d);
  }
  return 2.0 * acc;
}

double gaussian_entropy(const CovarianceMatrix& cov) {
  const double d = static_cast<double>(cov.dim());
  return 0.5 * (d * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det(cov));
}

double gaussian_mi(const JointGaussian& joint, const std::vector<std::string>& block_a,
                   const std::vector<std::string>& block_b) {
  if (block_a.empty() || block_b.empty()) {
    throw Error(ErrorKind::InvalidArgument, "block sets must be non-empty");
  }
  for (const auto& a : block_a) {
    if (std::find(block_b.begin(), block_b.end(), a) != block_b.end()) {
      throw Error(ErrorKind::InvalidArgument, "block sets overlap on '" + a + "'");
    }
  }
  std::vector<std::string> both = block_a;
  both.insert(both.end(), block_b.begin(), block_b.end());
  const double mi = 0.5 * (log_det(joint.marginal(block_a)) + log_det(joint.marginal(block_b)) -
                           log_det(joint.marginal(both)));
  return std::max(mi, 0.0);
}

Spectrum eigen_spectrum(const CovarianceMatrix& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov.entries(), Eigen::EigenvaluesOnly);
  Spectrum s;
  s.trace = cov.trace();
  const double floor = -kPsdTol * std::abs(s.trace);
  const auto& ev = solver.eigenvalues();
  s.eigenvalues.reserve(static_cast<std::size_t>(ev.size()));
  for (Eigen::Index i = ev.size(); i-- > 0;) {
    const double v = ev(i);
    s.eigenvalues.push_back(v < 0.0 && v >= floor ? 0.0 : std::max(v, 0.0));
  }
  return s;
}

}  // namespace caprob
