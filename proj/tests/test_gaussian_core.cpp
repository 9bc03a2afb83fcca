#include "caprob/error.h"
#include "caprob/gaussian_core.h"
#include "oracles.h"

#include <doctest.h>

#include <numeric>

using namespace caprob;
using Eigen::MatrixXd;

namespace {

CovarianceMatrix diag(std::initializer_list<double> v) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return CovarianceMatrix(d.asDiagonal().toDenseMatrix());
}

JointGaussian scalar_pair(double rho) {
  MatrixXd c(2, 2);
  c << 1, rho, rho, 1;
  return JointGaussian({{"a", 1}, {"b", 1}}, CovarianceMatrix(c));
}

}  // namespace

TEST_CASE("covariance validation") {
  MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(CovarianceMatrix{asym}, Error);
  MatrixXd neg(2, 2);
  neg << 1, 0, 0, -1;
  CHECK_THROWS_AS(CovarianceMatrix{neg}, Error);
  // Rank-deficient but PSD is accepted.
  MatrixXd rank1(2, 2);
  rank1 << 1, 1, 1, 1;
  CHECK_NOTHROW(CovarianceMatrix{rank1});
}

TEST_CASE("log_det examples") {
  CHECK(log_det(CovarianceMatrix(MatrixXd::Identity(3, 3))) == doctest::Approx(0.0));
  CHECK(log_det(diag({2, 2})) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const MatrixXd a = oracle::random_spd(rng, 5);
    CHECK(std::abs(log_det(CovarianceMatrix(a)) - oracle::logdet_eig(a)) < 1e-9);
  }

  MatrixXd singular = MatrixXd::Zero(2, 2);
  singular(0, 0) = 1.0;
  try {
    log_det(CovarianceMatrix(singular));
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
  }
}

TEST_CASE("log_det is stable up to condition number 1e12") {
  const double big = 1e6, small = 1e-6;
  const double expected = 3 * std::log(big) + 3 * std::log(small);
  CHECK(std::abs(log_det(diag({big, big, big, small, small, small})) - expected) < 1e-9);
}

TEST_CASE("gaussian_entropy examples") {
  const double h1 = 0.5 * std::log(2 * std::numbers::pi * std::numbers::e);
  CHECK(gaussian_entropy(diag({1})) == doctest::Approx(1.418939).epsilon(1e-6));
  CHECK(gaussian_entropy(diag({1, 1})) == doctest::Approx(2 * h1).epsilon(1e-12));
  const MatrixXd c7 = 0.09 * MatrixXd::Identity(7, 7);
  CHECK(gaussian_entropy(CovarianceMatrix(c7)) == doctest::Approx(7 * (h1 + 0.5 * std::log(0.09))).epsilon(1e-12));
  CHECK(gaussian_entropy(CovarianceMatrix(c7)) == doctest::Approx(1.503).epsilon(1e-3));
}

TEST_CASE("gaussian_entropy matches 1-d quadrature") {
  // -int p ln p for N(0, s2) by the midpoint rule on [-12s, 12s].
  const double s2 = 2.5, s = std::sqrt(s2);
  const int m = 200000;
  const double lo = -12 * s, h = 24 * s / m;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double x = lo + (i + 0.5) * h;
    const double p = std::exp(-0.5 * x * x / s2) / std::sqrt(2 * std::numbers::pi * s2);
    acc -= p * std::log(p) * h;
  }
  CHECK(gaussian_entropy(diag({s2})) == doctest::Approx(acc).epsilon(1e-9));
}

TEST_CASE("gaussian_mi examples") {
  CHECK(gaussian_mi(scalar_pair(0.0), {"a"}, {"b"}) == 0.0);
  CHECK(gaussian_mi(scalar_pair(0.5), {"a"}, {"b"}) == doctest::Approx(0.143841).epsilon(1e-6));

  // X ~ N(0, I7), X~ = X + delta, delta ~ N(0, I7).
  MatrixXd m = MatrixXd::Zero(14, 14);
  m.topLeftCorner(7, 7) = MatrixXd::Identity(7, 7);
  m.bottomLeftCorner(7, 7) = MatrixXd::Identity(7, 7);
  m.topRightCorner(7, 7) = MatrixXd::Identity(7, 7);
  m.bottomRightCorner(7, 7) = 2 * MatrixXd::Identity(7, 7);
  const JointGaussian awgn({{"x", 7}, {"xt", 7}}, CovarianceMatrix(m));
  CHECK(gaussian_mi(awgn, {"x"}, {"xt"}) == doctest::Approx(3.5 * std::log(2.0)).epsilon(1e-12));
  CHECK(gaussian_mi(awgn, {"x"}, {"xt"}) == doctest::Approx(oracle::awgn_mi(7, 1, 1)).epsilon(1e-12));
}

TEST_CASE("gaussian_mi errors") {
  const auto j = scalar_pair(0.3);
  CHECK_THROWS_AS(gaussian_mi(j, {"a"}, {"nope"}), Error);
  try {
    gaussian_mi(j, {"a"}, {"zz"});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownBlock);
  }
  CHECK_THROWS_AS(gaussian_mi(j, {"a"}, {"a"}), Error);
  CHECK_THROWS_AS(gaussian_mi(j, {}, {"b"}), Error);
  CHECK_THROWS_AS(JointGaussian({{"a", 1}, {"a", 1}}, CovarianceMatrix(MatrixXd::Identity(2, 2))), Error);
  CHECK_THROWS_AS(JointGaussian({{"a", 1}, {"b", 2}}, CovarianceMatrix(MatrixXd::Identity(2, 2))), Error);
}

TEST_CASE("marginal and offsets follow the requested order") {
  MatrixXd c(3, 3);
  c << 1, 0.1, 0.2, 0.1, 2, 0.3, 0.2, 0.3, 3;
  const JointGaussian j({{"a", 1}, {"b", 2}}, CovarianceMatrix(c));
  CHECK(j.offset("b") == 1);
  const auto m = j.marginal({"b", "a"});
  CHECK(m.entries()(0, 0) == 2.0);
  CHECK(m.entries()(2, 2) == 1.0);
  CHECK(m.entries()(2, 0) == 0.1);
}

TEST_CASE("property: symmetry, non-negativity and agreement with the eigen oracle") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(1, 4);
  for (int t = 0; t < 1000; ++t) {
    const int da = dim(rng), db = dim(rng);
    const MatrixXd s = oracle::random_spd(rng, da + db, 0.1);
    const JointGaussian j({{"a", da}, {"b", db}}, CovarianceMatrix(s));
    const double ab = gaussian_mi(j, {"a"}, {"b"});
    const double ba = gaussian_mi(j, {"b"}, {"a"});
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - ba) < 1e-10);
    if (t < 100) {
      const double ref = oracle::gauss_mi(s.topLeftCorner(da, da), s.bottomRightCorner(db, db),
                                          s.topRightCorner(da, db));
      CHECK(std::abs(ab - ref) < 1e-8);
    }
  }
}

TEST_CASE("property: DPI on composed linear-Gaussian chains") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + t % 4;
    MatrixXd a(d, d), b(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) {
        a(i, k) = g(rng);
        b(i, k) = g(rng);
      }
    // z = [x, n1, n2]; Y = A x + s1 n1; Z = B Y + s2 n2.
    const double s1 = 0.1 + std::abs(g(rng)), s2 = 0.1 + std::abs(g(rng));
    MatrixXd m = MatrixXd::Zero(3 * d, 3 * d);
    const MatrixXd id = MatrixXd::Identity(d, d);
    m.block(0, 0, d, d) = id;
    m.block(d, 0, d, d) = a;
    m.block(d, d, d, d) = s1 * id;
    m.block(2 * d, 0, d, d) = b * a;
    m.block(2 * d, d, d, d) = s1 * b;
    m.block(2 * d, 2 * d, d, d) = s2 * id;
    const JointGaussian j({{"x", d}, {"y", d}, {"z", d}}, CovarianceMatrix::from_factored(m * m.transpose()));
    CHECK(gaussian_mi(j, {"x"}, {"z"}) <= gaussian_mi(j, {"x"}, {"y"}) + 1e-9);
  }
}

TEST_CASE("property: entropy additivity under block-diagonal covariance") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const MatrixXd a = oracle::random_spd(rng, 3), b = oracle::random_spd(rng, 2);
    MatrixXd c = MatrixXd::Zero(5, 5);
    c.topLeftCorner(3, 3) = a;
    c.bottomRightCorner(2, 2) = b;
    const double lhs = gaussian_entropy(CovarianceMatrix(c));
    const double rhs = gaussian_entropy(CovarianceMatrix(a)) + gaussian_entropy(CovarianceMatrix(b));
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("eigen_spectrum examples and trace property") {
  const auto s = eigen_spectrum(diag({3, 1, 2}));
  REQUIRE(s.eigenvalues.size() == 3);
  CHECK(s.eigenvalues[0] == doctest::Approx(3));
  CHECK(s.eigenvalues[1] == doctest::Approx(2));
  CHECK(s.eigenvalues[2] == doctest::Approx(1));

  Eigen::VectorXd v(4);
  v << 1, 1, 1, 1;  // |v|^2 = 4
  const auto r1 = eigen_spectrum(CovarianceMatrix(v * v.transpose()));
  CHECK(r1.eigenvalues[0] == doctest::Approx(4));
  for (std::size_t i = 1; i < r1.eigenvalues.size(); ++i) CHECK(r1.eigenvalues[i] == 0.0);

  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const MatrixXd x = oracle::gaussian_rows(rng, 200, 5);
    const MatrixXd centered = x.rowwise() - x.colwise().mean();
    const MatrixXd cov = centered.transpose() * centered / 199.0;
    const auto sp = eigen_spectrum(CovarianceMatrix(cov));
    CHECK(std::is_sorted(sp.eigenvalues.rbegin(), sp.eigenvalues.rend()));
    for (double e : sp.eigenvalues) {
      CHECK(e >= 0.4);
      CHECK(e <= 2.0);
    }
    const double sum = std::accumulate(sp.eigenvalues.begin(), sp.eigenvalues.end(), 0.0);
    CHECK(std::abs(sum - sp.trace) <= 1e-8 * sp.trace);
  }
}
