#include "caprob/bounds.h"
#include "caprob/error.h"
#include "caprob/estimators.h"
#include "caprob/proxy.h"
#include "oracles.h"

#include <doctest.h>

#include <numeric>

using namespace caprob;
using Eigen::MatrixXd;

namespace {

BoundTerms terms(double cap, double rc, double leak, double h, double ch) {
  BoundTerms t;
  t.cap = cap;
  t.rob_coupling = rc;
  t.leak = leak;
  t.task_entropy = h;
  t.channel = ch;
  return t;
}

Spectrum spectrum_of(std::vector<double> ev) {
  std::sort(ev.begin(), ev.end(), std::greater<>());
  Spectrum s;
  s.trace = std::accumulate(ev.begin(), ev.end(), 0.0);
  s.eigenvalues = std::move(ev);
  return s;
}

// Clean features with diagonal variances, plus isotropic perturbation noise.
std::pair<MatrixXd, MatrixXd> synthetic_dump(std::uint64_t seed, long n, const std::vector<double>& var,
                                             double noise_var) {
  std::mt19937_64 rng(seed);
  const int d = static_cast<int>(var.size());
  MatrixXd clean = oracle::gaussian_rows(rng, n, d);
  for (int j = 0; j < d; ++j) clean.col(j) *= std::sqrt(var[static_cast<std::size_t>(j)]);
  const MatrixXd pert = clean + std::sqrt(noise_var) * oracle::gaussian_rows(rng, n, d);
  return {clean, pert};
}

}  // namespace

TEST_CASE("slack examples") {
  const auto zero = slack(terms(0, 0, 0, 0, 0));
  CHECK(zero.slack == 0.0);
  CHECK_FALSE(zero.violated);

  const auto r = slack(terms(2.0, 1.5, 0.5, 1.0, 3.0), 0.0, "c");
  CHECK(r.rob == 1.0);
  CHECK(r.slack == doctest::Approx(1.0));
  CHECK(r.cell_id == "c");

  const auto neg = slack(terms(3.0, 1.0, 0.0, 1.0, 1.0));
  CHECK(neg.violated);
  CHECK_FALSE(slack(terms(3.0, 1.0, 0.0, 1.0, 1.0), 2.5).violated);

  CHECK(slack(terms(1, 1, 0, 1, INFINITY)).slack == INFINITY);
  CHECK_THROWS_AS(slack(terms(NAN, 0, 0, 0, 0)), Error);
  CHECK_THROWS_AS(slack(terms(0, 0, 0, 0, -INFINITY)), Error);
}

TEST_CASE("property: slack is recomputable bit for bit from stored terms") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 10.0);
  for (int i = 0; i < 500; ++i) {
    const auto r = slack(terms(u(rng), u(rng), u(rng), u(rng), u(rng)));
    const auto& t = r.terms;
    CHECK(r.slack == t.task_entropy + t.channel - t.cap - (t.rob_coupling - t.leak));
  }
}

TEST_CASE("finite identity construction has zero slack") {
  for (int bits : {1, 3, 5}) {
    const auto r = slack(identity_bound_terms(IdentityConfig{bits, 0.1}));
    CHECK(std::abs(r.slack) <= 1e-9);
  }
}

TEST_CASE("channel bound examples") {
  CHECK(isotropic_channel_bound(1, 2.0, 2.0) == doctest::Approx(0.5 * std::log(2.0)));
  CHECK(isotropic_channel_bound(1, 2.0, 2.0) == doctest::Approx(0.3466).epsilon(1e-4));
  CHECK(pca_channel_bound(spectrum_of({0, 0, 0}), 1.0) == 0.0);
  CHECK(pca_channel_bound(spectrum_of({3, 1}), 1.0) == doctest::Approx(0.5 * (std::log(4.0) + std::log(2.0))));
  CHECK(pca_channel_bound(spectrum_of({3, 1}), 1.0) == doctest::Approx(1.0397).epsilon(1e-4));
  CHECK(pca_channel_bound(spectrum_of({2.5, 2.5, 2.5}), 0.7) ==
        doctest::Approx(isotropic_channel_bound(3, 2.5, 0.7)).epsilon(1e-14));
  CHECK_THROWS_AS(isotropic_channel_bound(1, 1, 0), Error);
  CHECK_THROWS_AS(pca_channel_bound(spectrum_of({1}), 0), Error);
}

TEST_CASE("property: PCA bound never exceeds the isotropic bound at matched trace") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> dim(2, 40);
  std::exponential_distribution<double> ev(1.0);
  std::uniform_real_distribution<double> noise(0.01, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const int d = dim(rng);
    std::vector<double> e(static_cast<std::size_t>(d));
    for (auto& x : e) x = ev(rng);
    const auto s = spectrum_of(e);
    const double s2 = noise(rng);
    CHECK(pca_channel_bound(s, s2) < isotropic_channel_bound(d, s.trace / d, s2));
  }
}

TEST_CASE("encoder ceiling") {
  const auto [clean, pert] = synthetic_dump(1, 10000, {4.0, 1.0}, 0.25);
  const auto a = encoder_ceiling(clean, pert);
  const double ref = 0.5 * std::log(17.0) + 0.5 * std::log(5.0);
  CHECK(ref == doctest::Approx(2.221).epsilon(1e-3));
  CHECK(a.bound == doctest::Approx(ref).epsilon(0.05));
  CHECK(a.sigma2_delta_phi == doctest::Approx(0.25).epsilon(0.05));
  CHECK(a.feature_dim == 2);
  CHECK(a.n == 10000);

  CHECK_THROWS_AS(encoder_ceiling(clean, clean), Error);
  try {
    encoder_ceiling(clean, clean);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateFeatures);
  }
  CHECK_THROWS_AS(encoder_ceiling(clean, pert.leftCols(1)), Error);
  CHECK_THROWS_AS(encoder_ceiling(clean.topRows(1), pert.topRows(1)), Error);

  // A quieter perturbation channel admits a larger bound.
  const auto [c2, quiet] = synthetic_dump(1, 10000, {4.0, 1.0}, 0.05);
  CHECK(encoder_ceiling(c2, quiet).bound > a.bound);
}

TEST_CASE("encoder ceiling with more features than rows uses the Gram spectrum") {
  const auto [clean, pert] = synthetic_dump(4, 20, std::vector<double>(50, 1.0), 0.5);
  const auto a = encoder_ceiling(clean, pert);
  const MatrixXd centered = clean.rowwise() - clean.colwise().mean();
  const MatrixXd cov = centered.transpose() * centered / 19.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
  double ref = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    ref += 0.5 * std::log1p(std::max(es.eigenvalues()(i), 0.0) / a.sigma2_delta_phi);
  CHECK(a.bound == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("property: encoder bound decreases in the perturbation variance") {
  const auto [clean, pert] = synthetic_dump(2, 500, {3.0, 2.0, 0.5}, 1.0);
  double prev = INFINITY;
  for (double scale : {0.1, 0.3, 1.0, 3.0}) {
    const MatrixXd p = clean + scale * (pert - clean);
    const double b = encoder_ceiling(clean, p).bound;
    CHECK(b < prev);
    prev = b;
  }
}

TEST_CASE("shift signature") {
  const auto [clean, pert] = synthetic_dump(3, 2000, {4.0, 1.0}, 0.556);
  const auto vanilla = encoder_ceiling(clean, pert);
  const auto same = shift_signature(vanilla, vanilla);
  CHECK(same.delta == 0.0);
  CHECK(same.classification == ShiftClass::LlmSide);

  // Noise variance cut by 3.5x reads as an input-side defense.
  const MatrixXd filtered = clean + std::sqrt(1.0 / 3.5) * (pert - clean);
  const auto defended = encoder_ceiling(clean, filtered);
  const auto s = shift_signature(defended, vanilla);
  CHECK(s.delta > 0.0);
  CHECK(s.classification == ShiftClass::InputSide);

  EncoderAudit small = vanilla;
  small.bound = vanilla.bound * 1.087;
  CHECK(shift_signature(small, vanilla).classification == ShiftClass::LlmSide);
  CHECK(shift_signature(small, vanilla, 0.05).classification == ShiftClass::InputSide);

  EncoderAudit other = vanilla;
  other.feature_dim = 3;
  CHECK_THROWS_AS(shift_signature(other, vanilla), Error);
}

TEST_CASE("discrete inequality") {
  const auto r = discrete_inequality(7.54, 1.37);
  CHECK(r.slack == doctest::Approx(6.17));
  CHECK(r.holds);
  CHECK(discrete_inequality(2.5, 0.0).slack == 2.5);
  CHECK_FALSE(discrete_inequality(1.0, 1.5).holds);
  CHECK(discrete_inequality(1.0, 1.0 + 1e-10).holds);
  CHECK_THROWS_AS(discrete_inequality(-1.0, 0.0), Error);
}

TEST_CASE("property: shared-quantizer proxy cells satisfy the discrete inequality") {
  // Deterministic policy, same quantizer on both sides: I(A; A~) <= H(A).
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> eps(0.05, 2.0);
  HistogramSpec spec;
  spec.miller_madow = false;
  for (int t = 0; t < 20; ++t) {
    const MatrixXd a = oracle::gaussian_rows(rng, 3000, 1);
    const MatrixXd at = a + eps(rng) * oracle::gaussian_rows(rng, 3000, 1);
    const double cap = histogram_entropy_1d(a.col(0), spec);
    const double rob = histogram_mi_1d(a.col(0), at.col(0), spec).value;
    CHECK(discrete_inequality(cap, rob).holds);
  }
}

TEST_CASE("multistep accumulation") {
  const auto t1 = terms(2.0, 1.2, 0.1, 3.0, 0.7);
  const auto one = multistep_accumulate({t1});
  CHECK(one.slack_t == slack(t1).slack);

  const auto ten = multistep_accumulate(std::vector<BoundTerms>(10, t1));
  CHECK(ten.slack_t == doctest::Approx(10 * slack(t1).slack).epsilon(3e-4));
  CHECK(ten.lhs_sum == doctest::Approx(10 * (2.0 + 1.1)));
  CHECK(ten.rhs_sum == doctest::Approx(10 * 3.7));

  const std::vector<BoundTerms> mixed{t1, terms(0.5, 0.3, 0.0, 1.0, 2.0), terms(4.0, 2.0, 1.0, 5.0, 0.1)};
  double sum = 0.0;
  for (const auto& t : mixed) sum += slack(t).slack;
  CHECK(multistep_accumulate(mixed).slack_t == doctest::Approx(sum).epsilon(1e-15));
  CHECK_THROWS_AS(multistep_accumulate({}), Error);
}
