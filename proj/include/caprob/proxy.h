#pragma once

// Linear-Gaussian stand-in for a perception-to-action policy:
//   A*  = W* X + xi*
//   A_pi = W_pi X + xi_pi
//   X~  = X + delta
// with closed-form joint covariance and a sampler for estimator runs.

#include "caprob/bound_terms.h"
#include "caprob/gaussian_core.h"
#include "caprob/rng.h"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace caprob {

enum class PolicyKind { Plain, Ridge, Leak };

struct PolicyVariant {
  PolicyKind kind = PolicyKind::Plain;
  double alpha = 1.0;   // ridge gain
  double lambda = 0.0;  // leak ratio

  static PolicyVariant plain() { return {}; }
  static PolicyVariant ridge(double alpha) { return {PolicyKind::Ridge, alpha, 0.0}; }
  static PolicyVariant leak(double lambda) { return {PolicyKind::Leak, 1.0, lambda}; }
};

enum class AttackKind { ObliviousGaussian, AdaptiveSign };

struct AttackSpec {
  AttackKind kind = AttackKind::ObliviousGaussian;
  int steps = 10;
};

enum class Coupling { Matched, Independent };

struct ProxyConfig {
  int dx = 7;
  int da = 7;
  double sigma_star = 0.3;
  double sigma_pi = 0.3;  // doubles as the ridge dither
  double epsilon = 0.1;   // oblivious std, or adaptive l-inf radius
  PolicyVariant policy;
  AttackSpec attack;
  Coupling w_coupling = Coupling::Matched;
  std::uint64_t seed = 0;
  // Diagonal of Cov(X). Empty means identity.
  std::vector<double> input_variances;

  void validate() const;
};

struct ProxySystem {
  ProxyConfig config;
  Eigen::MatrixXd w_star;      // da x dx
  Eigen::MatrixXd w_pi;        // da x dx
  Eigen::MatrixXd projection;  // da x dx coordinate projection used by the leak variant
};

struct SampleBatch {
  Eigen::Index n = 0;
  Eigen::MatrixXd x, delta, x_tilde;         // n x dx
  Eigen::MatrixXd a_star, a_pi, a_pi_tilde;  // n x da
};

ProxySystem build_proxy(const ProxyConfig& config);

/// Blocks: x, delta, a_star, a_pi, a_pi_tilde, x_tilde. Singular when
/// epsilon or a noise scale is zero; log-det based queries then throw.
JointGaussian joint_covariance(const ProxySystem& proxy);

/// Closed-form terms. epsilon = 0 yields channel = +inf and leak = 0.
BoundTerms analytic_bound_terms(const ProxySystem& proxy);

SampleBatch sample(const ProxySystem& proxy, Eigen::Index n, std::uint64_t rng_seed);

/// Sign ascent on ||W_pi delta||^2 inside the l-inf ball of radius epsilon,
/// finished by rounding to the best vertex, so ||delta||_inf == epsilon.
Eigen::VectorXd adaptive_sign_attack(const ProxySystem& proxy, const Eigen::VectorXd& x_row,
                                     int steps);

/// Finite-alphabet equality case: X uniform over 2^bits symbols, delta flips
/// each bit independently with probability flip_prob, X~ = X xor delta,
/// A* = X and the policy is the identity. Terms are exact (discrete nats).
struct IdentityConfig {
  int bits = 3;
  double flip_prob = 0.1;
};
BoundTerms identity_bound_terms(const IdentityConfig& config = {});

}  // namespace caprob
