#include "caprob/bounds.h"
#include "caprob/error.h"
#include "caprob/proxy.h"
#include "oracles.h"

#include <doctest.h>

using namespace caprob;
using Eigen::MatrixXd;

namespace {

ProxyConfig cell(int dx, int da, double eps, std::uint64_t seed = 7) {
  ProxyConfig c;
  c.dx = dx;
  c.da = da;
  c.epsilon = eps;
  c.seed = seed;
  return c;
}

// Terms rebuilt from W*, W_pi and the noise scales with the eigen oracle.
struct OracleTerms {
  double cap, rob, leak, entropy, channel;
};

OracleTerms oracle_terms(const ProxySystem& p) {
  const auto& c = p.config;
  const double lam = c.policy.kind == PolicyKind::Leak ? c.policy.lambda : 0.0;
  const double g = 1.0 - lam;
  const double s2 = c.sigma_star * c.sigma_star, p2 = c.sigma_pi * c.sigma_pi, e2 = c.epsilon * c.epsilon;
  const MatrixXd ia = MatrixXd::Identity(c.da, c.da);
  const MatrixXd& ws = p.w_star;
  const MatrixXd wp = g * p.w_pi;
  const MatrixXd lp = lam * p.projection;
  const MatrixXd s_star = ws * ws.transpose() + s2 * ia;
  const MatrixXd s_pi = wp * wp.transpose() + e2 * lp * lp.transpose() + p2 * ia;
  const MatrixXd wt_delta = wp + lp;  // delta gain inside A_pi~
  const MatrixXd s_pit = wp * wp.transpose() + e2 * wt_delta * wt_delta.transpose() + p2 * ia;
  const MatrixXd c_pi_pit = wp * wp.transpose() + e2 * lp * wt_delta.transpose();
  OracleTerms t;
  t.cap = oracle::gauss_mi(s_star, s_pi, ws * wp.transpose());
  t.rob = oracle::gauss_mi(s_pi, s_pit, c_pi_pit);
  t.leak = lam > 0 ? oracle::gauss_mi(s_pi, e2 * MatrixXd::Identity(c.dx, c.dx), e2 * lp) : 0.0;
  t.entropy = oracle::gauss_entropy(s_star);
  t.channel = oracle::awgn_mi(c.dx, 1.0, e2);
  return t;
}

}  // namespace

TEST_CASE("build_proxy determinism and coupling") {
  const auto a = build_proxy(cell(4, 3, 0.1));
  const auto b = build_proxy(cell(4, 3, 0.1));
  CHECK(a.w_star == b.w_star);
  CHECK(a.w_pi == b.w_pi);
  CHECK(a.w_star.rows() == 3);
  CHECK(a.w_star.cols() == 4);
  CHECK(a.w_pi == a.w_star);

  auto rc = cell(4, 3, 0.1);
  rc.policy = PolicyVariant::ridge(3.0);
  const auto r = build_proxy(rc);
  CHECK(r.w_pi == 3.0 * r.w_star);
  CHECK(r.w_star == a.w_star);

  auto ic = cell(4, 3, 0.1);
  ic.w_coupling = Coupling::Independent;
  const auto ind = build_proxy(ic);
  CHECK(ind.w_star == a.w_star);
  CHECK(ind.w_pi != ind.w_star);
}

TEST_CASE("W* entries have variance 1/dx") {
  const auto p = build_proxy(cell(64, 64, 0.1, 3));
  const double n = static_cast<double>(p.w_star.size());
  const double mean = p.w_star.mean();
  const double var = (p.w_star.array() - mean).square().sum() / (n - 1);
  // 4096 entries: the sample variance has relative sd about sqrt(2/4096) = 2.2%.
  CHECK(var == doctest::Approx(1.0 / 64).epsilon(0.1));
  CHECK(std::abs(mean) < 4.0 * std::sqrt(1.0 / 64 / n));
}

TEST_CASE("config validation") {
  auto bad = cell(0, 3, 0.1);
  CHECK_THROWS_AS(build_proxy(bad), Error);
  bad = cell(3, 3, -0.1);
  CHECK_THROWS_AS(build_proxy(bad), Error);
  bad = cell(3, 3, 0.1);
  bad.policy = PolicyVariant::leak(1.5);
  CHECK_THROWS_AS(build_proxy(bad), Error);
  bad.policy = PolicyVariant::ridge(0.0);
  CHECK_THROWS_AS(build_proxy(bad), Error);
}

TEST_CASE("analytic terms agree with the independent covariance oracle") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> dim(1, 8);
  std::uniform_real_distribution<double> unit(0.05, 2.0);
  for (int t = 0; t < 60; ++t) {
    auto c = cell(dim(rng), dim(rng), unit(rng), static_cast<std::uint64_t>(t));
    c.sigma_star = unit(rng);
    c.sigma_pi = unit(rng);
    if (t % 3 == 1) c.policy = PolicyVariant::ridge(1.0 + 5.0 * unit(rng));
    if (t % 3 == 2) c.policy = PolicyVariant::leak(std::min(1.0, unit(rng) / 2.0));
    if (t % 2) c.w_coupling = Coupling::Independent;
    const auto p = build_proxy(c);
    const auto a = analytic_bound_terms(p);
    const auto o = oracle_terms(p);
    CHECK(a.cap == doctest::Approx(o.cap).epsilon(1e-9));
    CHECK(a.rob_coupling == doctest::Approx(o.rob).epsilon(1e-9));
    CHECK(a.leak == doctest::Approx(o.leak).epsilon(1e-9));
    CHECK(a.task_entropy == doctest::Approx(o.entropy).epsilon(1e-9));
    CHECK(a.channel == doctest::Approx(o.channel).epsilon(1e-9));
    CHECK(a.source == TermSource::Analytic);
  }
}

TEST_CASE("epsilon = 0 is the no-attack limit") {
  const auto p = build_proxy(cell(4, 3, 0.0));
  const auto t = analytic_bound_terms(p);
  CHECK(std::isinf(t.channel));
  CHECK(t.leak == 0.0);
  // Two independent-noise copies of W X.
  const MatrixXd ww = p.w_pi * p.w_pi.transpose();
  const MatrixXd noise = 0.09 * MatrixXd::Identity(3, 3);
  CHECK(t.rob_coupling == doctest::Approx(oracle::gauss_mi(ww + noise, ww + noise, ww)).epsilon(1e-9));
  CHECK(slack(t).slack == std::numeric_limits<double>::infinity());
}

TEST_CASE("leak term: zero at lambda 0, positive and monotone in lambda") {
  for (double eps : {0.05, 0.2, 1.0}) {
    double prev = -1.0;
    for (double lam : {0.0, 0.25, 0.5, 0.75, 0.99}) {
      auto c = cell(7, 7, eps);
      c.policy = PolicyVariant::leak(lam);
      const auto t = analytic_bound_terms(build_proxy(c));
      if (lam == 0.0) {
        CHECK(t.leak == 0.0);
        // The leak variant at lambda 0 is the plain policy.
        const auto plain = analytic_bound_terms(build_proxy(cell(7, 7, eps)));
        CHECK(t.rob_coupling == doctest::Approx(plain.rob_coupling).epsilon(1e-12));
      } else {
        CHECK(t.leak > 0.0);
      }
      CHECK(t.leak >= prev);
      prev = t.leak;
    }
  }
}

TEST_CASE("channel and coupling fall monotonically as epsilon grows") {
  const std::vector<double> eps{0.05, 0.1, 0.2, 0.5, 1, 2, 5, 20, 100};
  double prev_ch = INFINITY, prev_rob = INFINITY;
  for (double e : eps) {
    const auto t = analytic_bound_terms(build_proxy(cell(7, 3, e)));
    CHECK(t.channel < prev_ch);
    CHECK(t.rob_coupling < prev_rob);
    CHECK(t.rob_coupling > 0.0);
    prev_ch = t.channel;
    prev_rob = t.rob_coupling;
  }
  CHECK(prev_ch < 1e-3);
  CHECK(prev_rob < 1e-3);
}

TEST_CASE("matched scalar cell has positive analytic slack") {
  const auto t = analytic_bound_terms(build_proxy(cell(1, 1, 0.1)));
  CHECK(slack(t).slack > 0.0);
}

TEST_CASE("adaptive attacks have no closed form") {
  auto c = cell(3, 3, 0.5);
  c.attack.kind = AttackKind::AdaptiveSign;
  const auto p = build_proxy(c);
  try {
    joint_covariance(p);
    FAIL("expected AdaptiveAttackNoClosedForm");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::AdaptiveAttackNoClosedForm);
  }
}

TEST_CASE("sample: errors, determinism, identities") {
  const auto p = build_proxy(cell(4, 3, 0.5));
  try {
    sample(p, 0, 1);
    FAIL("expected InvalidCount");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidCount);
  }
  const auto a = sample(p, 500, 42), b = sample(p, 500, 42);
  CHECK(a.a_pi == b.a_pi);
  CHECK(a.a_pi_tilde == b.a_pi_tilde);
  CHECK(a.x_tilde == (a.x + a.delta));
  CHECK(a.x.rows() == 500);
  CHECK(a.a_star.cols() == 3);
  const auto c = sample(p, 500, 43);
  CHECK(c.x != a.x);
}

TEST_CASE("sample moments match the joint covariance") {
  auto cfg = cell(3, 2, 0.7);
  cfg.policy = PolicyVariant::leak(0.5);
  const auto p = build_proxy(cfg);
  const Eigen::Index n = 200000;
  const auto s = sample(p, n, 5);
  MatrixXd z(n, 3 + 3 + 2 + 2 + 2 + 3);
  z << s.x, s.delta, s.a_star, s.a_pi, s.a_pi_tilde, s.x_tilde;
  // A* has zero mean: every coordinate within 4 sd of 0.
  const Eigen::RowVectorXd mean = s.a_star.colwise().mean();
  const MatrixXd ref = joint_covariance(p).cov().entries();
  for (Eigen::Index j = 0; j < 2; ++j) {
    CHECK(std::abs(mean(j)) < 4.0 * std::sqrt(ref(6 + j, 6 + j) / n));
  }
  const MatrixXd emp = z.transpose() * z / static_cast<double>(n);
  for (Eigen::Index i = 0; i < ref.rows(); ++i) {
    for (Eigen::Index j = 0; j < ref.cols(); ++j) {
      const double sd = std::sqrt((ref(i, i) * ref(j, j) + ref(i, j) * ref(i, j)) / n);
      CHECK(std::abs(emp(i, j) - ref(i, j)) < 5.0 * sd + 1e-12);
    }
  }
}

TEST_CASE("adaptive sign attack") {
  auto c = cell(1, 1, 0.3);
  c.attack.kind = AttackKind::AdaptiveSign;
  auto p = build_proxy(c);
  p.w_pi = MatrixXd::Identity(1, 1);
  Eigen::VectorXd x(1);
  x << -0.4;
  const auto d = adaptive_sign_attack(p, x, 5);
  CHECK(std::abs(d(0)) == doctest::Approx(0.3));

  auto c7 = cell(7, 4, 0.2, 3);
  c7.attack.kind = AttackKind::AdaptiveSign;
  const auto p7 = build_proxy(c7);
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.5);
  double adaptive = 0.0, random = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd xr = oracle::gaussian_rows(rng, 1, 7).row(0).transpose();
    const auto da = adaptive_sign_attack(p7, xr, 10);
    CHECK(da.cwiseAbs().maxCoeff() == doctest::Approx(0.2).epsilon(1e-12));
    Eigen::VectorXd dr(7);
    for (int j = 0; j < 7; ++j) dr(j) = coin(rng) ? 0.2 : -0.2;
    adaptive += (p7.w_pi * da).norm();
    random += (p7.w_pi * dr).norm();
  }
  CHECK(adaptive >= random);

  // Adaptive sampling stays inside the ball and is deterministic.
  const auto s1 = sample(p7, 50, 9), s2 = sample(p7, 50, 9);
  CHECK(s1.delta == s2.delta);
  CHECK(s1.delta.cwiseAbs().maxCoeff() <= 0.2 + 1e-15);
}

TEST_CASE("finite identity construction is exactly tight") {
  const auto t = identity_bound_terms();
  const double ln2 = std::log(2.0);
  CHECK(t.entropy_units == EntropyUnits::Discrete);
  CHECK(t.task_entropy == doctest::Approx(3 * ln2).epsilon(1e-12));
  CHECK(t.cap == doctest::Approx(3 * ln2).epsilon(1e-12));
  CHECK(t.channel == doctest::Approx(3 * (ln2 - oracle::h2(0.1))).epsilon(1e-12));
  CHECK(t.rob_coupling == doctest::Approx(3 * (ln2 - oracle::h2(0.1))).epsilon(1e-12));
  CHECK(std::abs(slack(t).slack) <= 1e-9);

  for (int bits : {1, 2, 5}) {
    for (double f : {0.0, 0.25, 0.5}) {
      CHECK(std::abs(slack(identity_bound_terms({bits, f})).slack) <= 1e-9);
    }
  }
}
