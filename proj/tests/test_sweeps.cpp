#include "caprob/error.h"
#include "caprob/report.h"
#include "caprob/sweeps.h"

#include <doctest.h>

#include <atomic>
#include <set>
#include <sstream>

using namespace caprob;

namespace {

BoundSweepOptions small_bound_sweep(int jobs) {
  auto o = BoundSweepOptions::preset("desk");
  o.grid.axes = {{"dx", {4}}, {"da", {3}}, {"sigma_pi", {0.3}}, {"epsilon", {0.1, 0.5, 2.0}}};
  o.grid.seeds = {0, 1};
  o.grid.samples_n = 2000;
  o.jobs = jobs;
  return o;
}

std::string csv_of(const SweepResult& r) {
  std::ostringstream s;
  write_cells_csv(s, r);
  return s.str();
}

}  // namespace

TEST_CASE("grid validation and enumeration") {
  SweepGrid g;
  g.axes = {{"a", {1, 2}}, {"b", {10, 20, 30}}};
  g.seeds = {7, 8};
  CHECK_NOTHROW(g.validate());
  CHECK(g.cell_count() == 12);
  const auto cells = enumerate_cells(g);
  REQUIRE(cells.size() == 12);
  // Replicate innermost, then the last axis.
  CHECK(cells[0].replicate == 7);
  CHECK(cells[1].replicate == 8);
  CHECK(cells[1].at("b") == 10);
  CHECK(cells[2].at("b") == 20);
  CHECK(cells[6].at("a") == 2);
  CHECK(cells[0].key() == cells[0].group_key() + ";rep=7");
  CHECK(cells[0].group_key() == cells[1].group_key());
  CHECK_THROWS_AS(cells[0].at("c"), Error);

  std::set<std::uint64_t> seeds;
  for (const auto& c : cells) seeds.insert(c.seed);
  CHECK(seeds.size() == cells.size());
  CHECK(enumerate_cells(g)[5].seed == cells[5].seed);
  CHECK(derive_cell_seed(1, cells[0].axes, 7) != cells[0].seed);

  auto bad = g;
  bad.axes.push_back({"a", {3}});
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = g;
  bad.axes[0].values.clear();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = g;
  bad.seeds.clear();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = g;
  bad.samples_n = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("parallel_for writes by index and propagates failures") {
  std::vector<int> out(100, 0);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
  std::atomic<int> runs{0};
  CHECK_THROWS(parallel_for(10, 2, [&](std::size_t i) {
    ++runs;
    if (i == 3) throw Error(ErrorKind::InvalidArgument, "boom");
  }));
}

TEST_CASE("reduced bound sweep") {
  const auto r = run_bound_sweep(small_bound_sweep(1));
  CHECK(r.name == "bound");
  CHECK(r.cells.size() == 6);
  CHECK(r.summary.at("analytic_violations") == 0);
  CHECK(r.summary.at("estimated_violations") == 0);
  CHECK(r.summary.at("discrete_violations") == 0);
  CHECK(r.violations == 0);
  for (const auto& c : r.cells) {
    REQUIRE(c.slack_analytic);
    CHECK(c.slack_analytic->slack >= 0.0);
    CHECK(c.slack_estimated.count("histogram_mm") == 1);
    CHECK(c.slack_estimated.count("ksg") == 1);
  }
  const auto med = median_slack_by(r, "epsilon", "analytic");
  REQUIRE(med.size() == 3);
  CHECK(med[0].second > med[1].second);
  CHECK(med[1].second > med[2].second);
  const double frac = one_sidedness_fraction(r, "histogram_mm");
  CHECK(frac >= 0.0);
  CHECK(frac <= 1.0);
  // Groups: one per (cell group, source).
  CHECK(r.groups.size() == 3 * 3);
  for (const auto& g : r.groups) CHECK(g.p_holm_adjusted >= g.p_one_sided);

  // Thread count never changes the output.
  CHECK(csv_of(run_bound_sweep(small_bound_sweep(2))) == csv_of(r));
}

TEST_CASE("achievability") {
  auto o = AchievabilityOptions::preset("desk");
  const auto p = achievability_point(2, 7, 0.05, 30, 0.01, o, 1);
  CHECK(p.r <= 1.0);
  CHECK(p.r >= 0.75);

  o.dx = {2, 7};
  o.da = {2};
  o.epsilon = {0.5};
  o.alpha = {1, 10};
  o.sigma_pi = {0.05};
  o.n = 20000;
  const auto r = run_achievability_sweep(o);
  CHECK(r.cells.size() == 2);
  CHECK(r.summary.at("r_out_of_range") == 0);
  for (const auto& c : r.cells) {
    CHECK(c.extras.at("r") <= 1.0);
    CHECK(c.extras.at("over_actuated") == (c.id.at("dx") <= c.id.at("da") ? 1.0 : 0.0));
  }
  CHECK_THROWS_AS(achievability_point(2, 2, 0.0, 1, 0.01, o, 1), Error);
}

TEST_CASE("leak sweep") {
  const auto r = run_leak_sweep(LeakOptions{});
  CHECK(r.cells.size() == 15);
  CHECK(r.summary.at("debited_violations") == 0);
  CHECK(r.summary.at("non_monotone_steps") == 0);
  CHECK(r.summary.at("max_debit_gap_error") <= 1e-9);
  for (const auto& c : r.cells) {
    if (c.id.at("lambda") == 0.0) CHECK(c.slack_analytic->terms.leak == doctest::Approx(0.0));
  }
}

TEST_CASE("multistep") {
  MultistepOptions o;
  o.steps = 1;
  auto r = run_multistep(o);
  CHECK(r.summary.at("slack_T") == r.cells[0].slack_analytic->slack);

  o.steps = 10;
  r = run_multistep(o);
  CHECK(r.summary.at("linear_ok") == 1.0);
  CHECK(r.summary.at("linear_rel_error") <= 1e-3);

  o.steps = 3;
  o.epsilon = {0.1, 0.5, 2.0};
  r = run_multistep(o);
  CHECK(r.summary.at("slack_T") == doctest::Approx(r.summary.at("sum_step_slacks")).epsilon(1e-14));
  CHECK(r.summary.count("linear_ok") == 0);

  o.epsilon = {0.1, 0.5};
  CHECK_THROWS_AS(run_multistep(o), Error);
  o.steps = 0;
  CHECK_THROWS_AS(run_multistep(o), Error);
}

TEST_CASE("DPI check on small chains") {
  DpiOptions o;
  o.dims = {1, 2};
  o.sigma_xy = {0.3, 1.0};
  o.sigma_yz = {1.0};
  o.seeds = {0, 1, 2};
  o.n = 2000;
  const auto r = run_dpi_check(o);
  CHECK(r.cells.size() == 12);
  CHECK(r.summary.at("group_violations") == 0);
  CHECK(r.summary.at("analytic_violations") == 0);
  for (const auto& c : r.cells) CHECK(c.extras.at("analytic_xy") >= c.extras.at("analytic_xz"));

  // Z reading X directly breaks the chain and must be caught.
  o.broken = true;
  o.sigma_xy = {1.0, 3.0};
  const auto b = run_dpi_check(o);
  CHECK(b.summary.at("group_violations") > 0);
  CHECK(b.violations > 0);
}

TEST_CASE("quadrature reference MI") {
  for (double s : {0.3, 0.5, 1.0, 2.0}) {
    const double closed = 0.5 * std::log1p(1.0 / (s * s));
    CHECK(std::abs(quadrature_reference_mi(SourceLaw::Gaussian, s) - closed) <= 1e-6);
    // At fixed power the Gaussian input maximises the AWGN information.
    for (auto law : {SourceLaw::Laplace, SourceLaw::Uniform, SourceLaw::Gmm}) {
      const double v = quadrature_reference_mi(law, s);
      CHECK(v > 0.0);
      CHECK(v <= closed + 1e-7);
    }
  }
}

TEST_CASE("audit kinds") {
  for (auto k : {AuditKind::Hyperparam, AuditKind::SampleComplexity, AuditKind::Distribution, AuditKind::HighD}) {
    CHECK(audit_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(audit_kind_from_string("nope"), Error);
}

TEST_CASE("small high-d audit") {
  auto o = AuditOptions::preset("desk", AuditKind::HighD);
  o.high_d_dims = {8};
  o.high_d_epsilon = {1.0};
  o.seeds = {0};
  o.n = 1000;
  o.estimators = {EstimatorId::HistogramMM};
  const auto r = run_estimator_audit(o);
  CHECK(r.cells.size() == 1);
  CHECK(r.summary.count("bound_holds_fraction") == 1);
  CHECK(r.cells[0].slack_analytic->slack >= 0.0);
}

TEST_CASE("small distribution audit") {
  auto o = AuditOptions::preset("desk", AuditKind::Distribution);
  o.seeds = {0};
  o.n = 2000;
  o.estimators = {EstimatorId::Ksg};
  const auto r = run_estimator_audit(o);
  CHECK(r.cells.size() == 4);
  CHECK(r.summary.at("gaussian_quadrature_vs_closed_form") <= 1e-6);
  for (const auto& c : r.cells) CHECK(c.extras.at("rel_err") <= 0.25);
}
