#include "caprob/proxy.h"

#include "caprob/error.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace caprob {

namespace {

double input_variance(const ProxyConfig& c, int i) {
  return c.input_variances.empty() ? 1.0 : c.input_variances[static_cast<std::size_t>(i)];
}

// Coefficient on W_pi X in A_pi, and on delta through P.
double signal_gain(const ProxyConfig& c) {
  return c.policy.kind == PolicyKind::Leak ? 1.0 - c.policy.lambda : 1.0;
}
double leak_gain(const ProxyConfig& c) {
  return c.policy.kind == PolicyKind::Leak ? c.policy.lambda : 0.0;
}

double entropy_of(const std::vector<double>& p) {
  double h = 0.0;
  for (double q : p) {
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

// I(U;V) from a row-major m x m joint table.
double discrete_mi(const std::vector<double>& joint, std::size_t m) {
  std::vector<double> pu(m, 0.0), pv(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      pu[i] += joint[i * m + j];
      pv[j] += joint[i * m + j];
    }
  }
  return entropy_of(pu) + entropy_of(pv) - entropy_of(joint);
}

}  // namespace

void ProxyConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
  if (dx < 1 || da < 1) fail("dx and da must be >= 1");
  if (!(sigma_star >= 0.0) || !(sigma_pi >= 0.0)) fail("noise scales must be >= 0");
  if (!(epsilon >= 0.0)) fail("epsilon must be >= 0");
  if (policy.kind == PolicyKind::Ridge && !(policy.alpha > 0.0)) fail("ridge alpha must be > 0");
  if (policy.kind == PolicyKind::Leak && !(policy.lambda >= 0.0 && policy.lambda <= 1.0)) {
    fail("leak lambda must lie in [0, 1]");
  }
  if (attack.kind == AttackKind::AdaptiveSign && attack.steps < 1) fail("attack steps must be >= 1");
  if (!input_variances.empty()) {
    if (input_variances.size() != static_cast<std::size_t>(dx)) {
      fail("input_variances must have dx entries");
    }
    for (double v : input_variances) {
      if (!(v >= 0.0)) fail("input variances must be >= 0");
    }
  }
}

ProxySystem build_proxy(const ProxyConfig& config) {
  config.validate();
  ProxySystem p;
  p.config = config;
  Rng rng(config.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.dx));
  p.w_star = standard_normal(rng, config.da, config.dx) * scale;
  if (config.w_coupling == Coupling::Independent) {
    p.w_pi = standard_normal(rng, config.da, config.dx) * scale;
  } else {
    p.w_pi = p.w_star;
  }
  if (config.policy.kind == PolicyKind::Ridge) p.w_pi *= config.policy.alpha;
  p.projection = Eigen::MatrixXd::Zero(config.da, config.dx);
  for (int i = 0; i < std::min(config.dx, config.da); ++i) p.projection(i, i) = 1.0;
  return p;
}

JointGaussian joint_covariance(const ProxySystem& proxy) {
  const auto& c = proxy.config;
  if (c.attack.kind != AttackKind::ObliviousGaussian) {
    throw Error(ErrorKind::AdaptiveAttackNoClosedForm,
                "closed form requires delta independent of X");
  }
  const Eigen::Index dx = c.dx, da = c.da;
  // Latent order: X, delta, xi*, xi_pi, xi'_pi.
  const Eigen::Index nz = 2 * dx + 3 * da;
  const Eigen::Index nr = 3 * dx + 3 * da;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nr, nz);
  const Eigen::MatrixXd id_x = Eigen::MatrixXd::Identity(dx, dx);
  const Eigen::MatrixXd id_a = Eigen::MatrixXd::Identity(da, da);
  const double g = signal_gain(c), l = leak_gain(c);

  Eigen::Index r = 0;
  m.block(r, 0, dx, dx) = id_x;  // x
  r += dx;
  m.block(r, dx, dx, dx) = id_x;  // delta
  r += dx;
  m.block(r, 0, da, dx) = proxy.w_star;  // a_star
  m.block(r, 2 * dx, da, da) = id_a;
  r += da;
  m.block(r, 0, da, dx) = g * proxy.w_pi;  // a_pi
  m.block(r, dx, da, dx) = l * proxy.projection;
  m.block(r, 2 * dx + da, da, da) = id_a;
  r += da;
  m.block(r, 0, da, dx) = g * proxy.w_pi;  // a_pi_tilde: same policy on X + delta
  m.block(r, dx, da, dx) = g * proxy.w_pi + l * proxy.projection;
  m.block(r, 2 * dx + 2 * da, da, da) = id_a;
  r += da;
  m.block(r, 0, dx, dx) = id_x;  // x_tilde
  m.block(r, dx, dx, dx) = id_x;

  Eigen::VectorXd var(nz);
  for (Eigen::Index i = 0; i < dx; ++i) {
    var(i) = input_variance(c, static_cast<int>(i));
    var(dx + i) = c.epsilon * c.epsilon;
  }
  for (Eigen::Index i = 0; i < da; ++i) {
    var(2 * dx + i) = c.sigma_star * c.sigma_star;
    var(2 * dx + da + i) = c.sigma_pi * c.sigma_pi;
    var(2 * dx + 2 * da + i) = c.sigma_pi * c.sigma_pi;
  }
  Eigen::MatrixXd cov = m * var.asDiagonal() * m.transpose();
  return JointGaussian({{"x", dx}, {"delta", dx}, {"a_star", da}, {"a_pi", da},
                        {"a_pi_tilde", da}, {"x_tilde", dx}},
                       CovarianceMatrix::from_factored(std::move(cov)));
}

BoundTerms analytic_bound_terms(const ProxySystem& proxy) {
  const JointGaussian joint = joint_covariance(proxy);
  BoundTerms t;
  t.source = TermSource::Analytic;
  t.entropy_units = EntropyUnits::Differential;
  t.cap = gaussian_mi(joint, {"a_star"}, {"a_pi"});
  t.rob_coupling = gaussian_mi(joint, {"a_pi"}, {"a_pi_tilde"});
  t.task_entropy = gaussian_entropy(joint.marginal({"a_star"}));
  if (proxy.config.epsilon > 0.0) {
    t.leak = leak_gain(proxy.config) > 0.0 ? gaussian_mi(joint, {"a_pi"}, {"delta"}) : 0.0;
    t.channel = gaussian_mi(joint, {"x"}, {"x_tilde"});
  } else {
    t.leak = 0.0;
    t.channel = std::numeric_limits<double>::infinity();
  }
  return t;
}

Eigen::VectorXd adaptive_sign_attack(const ProxySystem& proxy, const Eigen::VectorXd& x_row,
                                     int steps) {
  const double eps = proxy.config.epsilon;
  if (steps < 1) throw Error(ErrorKind::InvalidArgument, "steps must be >= 1");
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "adaptive attack needs epsilon > 0");
  if (x_row.size() != proxy.config.dx) throw Error(ErrorKind::ShapeMismatch, "x_row has wrong dim");

  const Eigen::MatrixXd gram = proxy.w_pi.transpose() * proxy.w_pi;
  auto sgn = [](double v, double fallback) {
    if (v > 0.0) return 1.0;
    if (v < 0.0) return -1.0;
    return fallback;
  };
  Eigen::VectorXd delta(x_row.size());
  for (Eigen::Index i = 0; i < x_row.size(); ++i) delta(i) = eps * sgn(x_row(i), 1.0);

  const double step = eps / steps;
  for (int s = 0; s < steps; ++s) {
    const Eigen::VectorXd grad = 2.0 * gram * delta;
    for (Eigen::Index i = 0; i < delta.size(); ++i) {
      delta(i) = std::clamp(delta(i) + step * sgn(grad(i), sgn(delta(i), 1.0)), -eps, eps);
    }
  }
  // L is convex, so the vertex picked by the gradient sign dominates the iterate.
  const Eigen::VectorXd grad = 2.0 * gram * delta;
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    delta(i) = eps * sgn(grad(i), sgn(delta(i), 1.0));
  }
  return delta;
}

SampleBatch sample(const ProxySystem& proxy, Eigen::Index n, std::uint64_t rng_seed) {
  if (n < 1) throw Error(ErrorKind::InvalidCount, "sample count must be >= 1");
  const auto& c = proxy.config;
  Rng rng(rng_seed);
  SampleBatch b;
  b.n = n;
  b.x = standard_normal(rng, n, c.dx);
  for (int j = 0; j < c.dx; ++j) b.x.col(j) *= std::sqrt(input_variance(c, j));

  if (c.attack.kind == AttackKind::ObliviousGaussian) {
    b.delta = standard_normal(rng, n, c.dx) * c.epsilon;
  } else if (c.epsilon > 0.0) {
    b.delta.resize(n, c.dx);
    for (Eigen::Index i = 0; i < n; ++i) {
      b.delta.row(i) = adaptive_sign_attack(proxy, b.x.row(i).transpose(), c.attack.steps);
    }
  } else {
    b.delta = Eigen::MatrixXd::Zero(n, c.dx);
  }
  b.x_tilde = b.x + b.delta;

  const double g = signal_gain(c), l = leak_gain(c);
  b.a_star = b.x * proxy.w_star.transpose() + standard_normal(rng, n, c.da) * c.sigma_star;
  b.a_pi = g * (b.x * proxy.w_pi.transpose()) + standard_normal(rng, n, c.da) * c.sigma_pi;
  b.a_pi_tilde =
      g * (b.x_tilde * proxy.w_pi.transpose()) + standard_normal(rng, n, c.da) * c.sigma_pi;
  if (l > 0.0) {
    const Eigen::MatrixXd leaked = l * (b.delta * proxy.projection.transpose());
    b.a_pi += leaked;
    b.a_pi_tilde += leaked;
  }
  return b;
}

BoundTerms identity_bound_terms(const IdentityConfig& config) {
  if (config.bits < 1 || config.bits > 10) {
    throw Error(ErrorKind::InvalidArgument, "bits must lie in [1, 10]");
  }
  if (!(config.flip_prob >= 0.0 && config.flip_prob <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "flip_prob must lie in [0, 1]");
  }
  const std::size_t m = std::size_t{1} << config.bits;
  const double px = 1.0 / static_cast<double>(m);
  std::vector<double> p_noise(m);
  for (std::size_t d = 0; d < m; ++d) {
    const int flips = std::popcount(d);
    p_noise[d] = std::pow(config.flip_prob, flips) *
                 std::pow(1.0 - config.flip_prob, config.bits - flips);
  }
  // Joint tables over (x, x~) and (x, delta); A* = A_pi = X and A~_pi = X~.
  std::vector<double> x_xt(m * m, 0.0), x_d(m * m, 0.0), x_x(m * m, 0.0);
  for (std::size_t x = 0; x < m; ++x) {
    x_x[x * m + x] = px;
    for (std::size_t d = 0; d < m; ++d) {
      x_xt[x * m + (x ^ d)] += px * p_noise[d];
      x_d[x * m + d] += px * p_noise[d];
    }
  }
  BoundTerms t;
  t.source = TermSource::Analytic;
  t.entropy_units = EntropyUnits::Discrete;
  t.task_entropy = entropy_of(std::vector<double>(m, px));
  t.cap = discrete_mi(x_x, m);
  t.rob_coupling = discrete_mi(x_xt, m);
  t.leak = std::max(0.0, discrete_mi(x_d, m));
  t.channel = discrete_mi(x_xt, m);
  return t;
}

}  // namespace caprob
