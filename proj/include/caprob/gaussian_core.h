#pragma once

// Exact linear-algebra substrate for zero-mean Gaussian laws: covariance
// validation, log-determinants, differential entropy, block mutual
// information and eigenspectra. All quantities are in nats.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace caprob {

/// Dense symmetric PSD matrix. Construction validates symmetry (1e-12
/// relative) and PSD-ness (smallest eigenvalue >= -1e-10 * trace).
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(Eigen::MatrixXd entries);

  /// Skips the PSD eigen-check; symmetry is still enforced. For hot paths
  /// where the matrix is built as M * diag(v) * M^T with v >= 0.
  static CovarianceMatrix from_factored(Eigen::MatrixXd entries);

  Eigen::Index dim() const { return entries_.rows(); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double trace() const { return entries_.trace(); }

 private:
  struct Trusted {};
  CovarianceMatrix(Eigen::MatrixXd entries, Trusted);
  Eigen::MatrixXd entries_;
};

struct Block {
  std::string name;
  Eigen::Index dim = 0;
};

/// Zero-mean Gaussian over an ordered list of named variable blocks.
class JointGaussian {
 public:
  JointGaussian(std::vector<Block> blocks, CovarianceMatrix cov);

  const std::vector<Block>& blocks() const { return blocks_; }
  const CovarianceMatrix& cov() const { return cov_; }

  /// Covariance of the listed blocks, concatenated in the given order.
  CovarianceMatrix marginal(const std::vector<std::string>& names) const;

  /// Column offset of a block inside the joint covariance.
  Eigen::Index offset(const std::string& name) const;

 private:
  std::vector<Eigen::Index> indices(const std::vector<std::string>& names) const;

  std::vector<Block> blocks_;
  std::vector<Eigen::Index> offsets_;
  CovarianceMatrix cov_;
};

struct Spectrum {
  std::vector<double> eigenvalues;  // descending, clamped >= 0
  double trace = 0.0;
};

/// ln det via Cholesky. Throws NotPositiveDefinite when the factorization fails.
double log_det(const CovarianceMatrix& cov);

/// 0.5 * (d ln(2 pi e) + ln det cov).
double gaussian_entropy(const CovarianceMatrix& cov);

/// I(A;B) for disjoint block sets; clamped at 0 on return.
double gaussian_mi(const JointGaussian& joint, const std::vector<std::string>& block_a,
                   const std::vector<std::string>& block_b);

Spectrum eigen_spectrum(const CovarianceMatrix& cov);

}  // namespace caprob
