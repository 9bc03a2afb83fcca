#include "caprob/error.h"
#include "caprob/stats.h"

#include <doctest.h>

#include <random>

using namespace caprob;

TEST_CASE("Holm examples") {
  const auto adj = holm_bonferroni({0.01, 0.04, 0.03});
  REQUIRE(adj.size() == 3);
  CHECK(adj[0] == doctest::Approx(0.03));
  CHECK(adj[1] == doctest::Approx(0.06));
  CHECK(adj[2] == doctest::Approx(0.06));
  CHECK(holm_bonferroni({0.2}) == std::vector<double>{0.2});
  CHECK(holm_bonferroni({0.6, 0.7})[1] == 1.0);
}

TEST_CASE("property: Holm is order-preserving and dominates raw p") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(2 + t % 30);
    for (auto& x : p) x = u(rng);
    const auto a = holm_bonferroni(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(a[i] >= p[i]);
      CHECK(a[i] <= 1.0);
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[i] < p[j]) CHECK(a[i] <= a[j]);
      }
    }
  }
}

TEST_CASE("one-sided t-test") {
  const auto r = one_sided_t({1, 2, 3});
  CHECK(r.t == doctest::Approx(2 * std::sqrt(3.0)));
  CHECK(r.p == doctest::Approx(0.0371).epsilon(1e-3));
  CHECK(one_sided_t({1, 2, 3}, 5.0).p > 0.5);
  CHECK_THROWS_AS(one_sided_t({1}), Error);

  try {
    one_sided_t({2, 2, 2});
    FAIL("expected DegenerateVariance");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateVariance);
  }
  CHECK(one_sided_t_or_degenerate({2, 2, 2}).p == 0.0);
  CHECK(one_sided_t_or_degenerate({-2, -2}).p == 1.0);
  CHECK(one_sided_t_or_degenerate({0, 0}).p == 1.0);
}

TEST_CASE("descriptive statistics") {
  CHECK(mean_of({1, 2, 3, 4}) == 2.5);
  CHECK(sample_std({2, 4}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(sample_std({7}) == 0.0);
  CHECK(median_of({3, 1, 2}) == 2.0);
  CHECK(median_of({4, 1, 3, 2}) == 2.5);
  CHECK(quantile_of({0, 10}, 0.25) == doctest::Approx(2.5));
  CHECK(quantile_of({5, 1, 3}, 0.0) == 1.0);
  CHECK(quantile_of({5, 1, 3}, 1.0) == 5.0);
}
