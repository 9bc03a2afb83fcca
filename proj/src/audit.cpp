#include "caprob/error.h"
#include "caprob/rng.h"
#include "caprob/stats.h"
#include "caprob/sweeps.h"

#include <boost/math/constants/constants.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace caprob {

namespace {

using boost::math::quadrature::gauss_kronrod;

std::uint64_t sub_seed(std::uint64_t seed, std::string_view tag) {
  return SeedHasher(seed).add(tag).value();
}

double awgn_reference(int d, double eps) { return 0.5 * d * std::log1p(1.0 / (eps * eps)); }

struct PairSample {
  Eigen::MatrixXd u, v;
};

PairSample awgn_pair(Eigen::Index n, int d, double eps, std::uint64_t seed) {
  Rng rng(seed);
  PairSample s;
  s.u = standard_normal(rng, n, d);
  s.v = s.u + eps * standard_normal(rng, n, d);
  return s;
}

double estimate_mi(EstimatorId id, const Eigen::MatrixXd& u, const Eigen::MatrixXd& v,
                   const AuditOptions& o, std::uint64_t seed) {
  switch (id) {
    case EstimatorId::HistogramMM: return perdim_mi(u, v, o.hist);
    case EstimatorId::Ksg: return ksg_mi(u, v, o.ksg_k).value;
    case EstimatorId::Mine: return mine_mi(u, v, o.critic, seed).value;
    case EstimatorId::InfoNce: return infonce_mi(u, v, 128, o.critic, seed).value;
  }
  return 0.0;
}

double rel_err(double est, double ref) { return std::abs(est - ref) / std::abs(ref); }

// ------------------------------------------------------------ source laws

constexpr double kGmmMean = 0.8;  // +/- mean; component variance 1 - 0.64

Eigen::VectorXd draw_source(SourceLaw law, Eigen::Index n, Rng& rng) {
  Eigen::VectorXd u(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double b = 1.0 / std::sqrt(2.0);
  const double a = std::sqrt(3.0);
  const double s = std::sqrt(1.0 - kGmmMean * kGmmMean);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (law) {
      case SourceLaw::Gaussian: u(i) = normal(rng); break;
      case SourceLaw::Laplace: {
        const double w = unit(rng) - 0.5;
        u(i) = -b * (w < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(w));
        break;
      }
      case SourceLaw::Uniform: u(i) = a * (2.0 * unit(rng) - 1.0); break;
      case SourceLaw::Gmm: {
        const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
        u(i) = sign * kGmmMean + s * normal(rng);
        break;
      }
    }
  }
  return u;
}

std::string law_name(SourceLaw law) {
  switch (law) {
    case SourceLaw::Gaussian: return "gaussian";
    case SourceLaw::Laplace: return "laplace";
    case SourceLaw::Uniform: return "uniform";
    case SourceLaw::Gmm: return "gmm";
  }
  return "unknown";
}

double normal_pdf(double x, double var) {
  return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Density of U + sigma N.
double noisy_density(SourceLaw law, double v, double sigma) {
  const double s2 = sigma * sigma;
  switch (law) {
    case SourceLaw::Gaussian: return normal_pdf(v, 1.0 + s2);
    case SourceLaw::Uniform: {
      const double a = std::sqrt(3.0);
      boost::math::normal_distribution<double> nd(0.0, sigma);
      return (boost::math::cdf(nd, v + a) - boost::math::cdf(nd, v - a)) / (2.0 * a);
    }
    case SourceLaw::Gmm: {
      const double var = 1.0 - kGmmMean * kGmmMean + s2;
      return 0.5 * normal_pdf(v - kGmmMean, var) + 0.5 * normal_pdf(v + kGmmMean, var);
    }
    case SourceLaw::Laplace: {
      const double b = 1.0 / std::sqrt(2.0);
      auto f = [&](double u) { return std::exp(-std::abs(u) / b) / (2.0 * b) * normal_pdf(v - u, s2); };
      double e1 = 0.0, e2 = 0.0;
      const double inf = std::numeric_limits<double>::infinity();
      const double left = gauss_kronrod<double, 31>::integrate(f, -inf, 0.0, 15, 1e-12, &e1);
      const double right = gauss_kronrod<double, 31>::integrate(f, 0.0, inf, 15, 1e-12, &e2);
      return left + right;
    }
  }
  return 0.0;
}

}  // namespace

double quadrature_reference_mi(SourceLaw law, double noise_sigma) {
  if (!(noise_sigma > 0.0)) throw Error(ErrorKind::InvalidArgument, "noise_sigma must be > 0");
  auto integrand = [&](double v) {
    const double p = noisy_density(law, v, noise_sigma);
    return p > 0.0 ? -p * std::log(p) : 0.0;
  };
  double err = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  // Split at 0 so the symmetric laws' central mass is not straddled by a panel edge.
  double e1 = 0.0, e2 = 0.0;
  const double h = gauss_kronrod<double, 61>::integrate(integrand, -inf, 0.0, 20, 1e-12, &e1) +
                   gauss_kronrod<double, 61>::integrate(integrand, 0.0, inf, 20, 1e-12, &e2);
  err = e1 + e2;
  if (!std::isfinite(h) || !(err < 1e-7)) {
    throw Error(ErrorKind::QuadratureFailure,
                "entropy integral for " + law_name(law) + " did not converge");
  }
  const double h_noise = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * noise_sigma *
                                        noise_sigma);
  return h - h_noise;
}

AuditKind audit_kind_from_string(const std::string& name) {
  if (name == "hyperparam") return AuditKind::Hyperparam;
  if (name == "sample_complexity") return AuditKind::SampleComplexity;
  if (name == "distribution") return AuditKind::Distribution;
  if (name == "high_d") return AuditKind::HighD;
  throw Error(ErrorKind::InvalidArgument, "unknown audit kind '" + name + "'");
}

std::string to_string(AuditKind kind) {
  switch (kind) {
    case AuditKind::Hyperparam: return "hyperparam";
    case AuditKind::SampleComplexity: return "sample_complexity";
    case AuditKind::Distribution: return "distribution";
    case AuditKind::HighD: return "high_d";
  }
  return "unknown";
}

AuditOptions AuditOptions::preset(const std::string& name, AuditKind kind) {
  if (name != "desk" && name != "full") {
    throw Error(ErrorKind::InvalidArgument, "unknown preset '" + name + "'");
  }
  const bool full = name == "full";
  AuditOptions o;
  o.kind = kind;
  switch (kind) {
    case AuditKind::Hyperparam:
      o.seeds = full ? std::vector<std::uint64_t>{0, 1, 2} : std::vector<std::uint64_t>{0};
      o.critic.epochs = full ? 2000 : 300;
      o.n = 2000;
      break;
    case AuditKind::SampleComplexity:
      o.seeds = full ? std::vector<std::uint64_t>{0, 1, 2, 3, 4} : std::vector<std::uint64_t>{0, 1, 2};
      o.critic.epochs = full ? 2000 : 1000;
      break;
    case AuditKind::Distribution:
      o.n = full ? 5000 : 2000;
      if (full) o.estimators.push_back(EstimatorId::Mine);
      break;
    case AuditKind::HighD:
      o.n = full ? 5000 : 2000;
      if (full) o.high_d_dims = {8, 16, 32, 64, 128, 256};
      break;
  }
  return o;
}

SweepResult run_estimator_audit(const AuditOptions& o) {
  SweepResult result;
  result.name = "audit-" + to_string(o.kind);
  if (o.seeds.empty()) throw Error(ErrorKind::InvalidArgument, "audit needs at least one seed");

  switch (o.kind) {
    case AuditKind::Hyperparam: {
      SweepGrid grid;
      grid.axes = {{"learning_rate", {3e-5, 1e-4, 3e-4}},
                   {"hidden_width", {128, 256, 512}},
                   {"depth", {1, 2}},
                   {"ema_decay", {0.99, 0.999}}};
      grid.seeds = o.seeds;
      grid.sweep_seed = o.sweep_seed;
      for (const auto& a : grid.axes) result.axis_names.push_back(a.name);
      const auto ids = enumerate_cells(grid);
      result.cells.resize(ids.size());
      const double ref = awgn_reference(7, 1.0);
      parallel_for(ids.size(), o.jobs, [&](std::size_t i) {
        const auto& id = ids[i];
        CriticConfig c = o.critic;
        c.learning_rate = id.at("learning_rate");
        c.hidden_width = static_cast<int>(id.at("hidden_width"));
        c.depth = static_cast<int>(id.at("depth"));
        c.ema_decay = id.at("ema_decay");
        // The data depend only on the replicate, so configs are compared on equal samples.
        const auto s = awgn_pair(o.n, 7, 1.0, sub_seed(o.sweep_seed + id.replicate, "data"));
        const double est = mine_mi(s.u, s.v, c, id.seed).value;
        CellResult cell;
        cell.id = id;
        cell.extras["estimate"] = est;
        cell.extras["reference"] = ref;
        cell.extras["rel_err"] = rel_err(est, ref);
        result.cells[i] = std::move(cell);
      });
      std::map<std::string, std::vector<double>> by_group;
      for (const auto& c : result.cells) by_group[c.id.group_key()].push_back(c.extras.at("rel_err"));
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [_, v] : by_group) best = std::min(best, median_of(v));
      result.summary["best_median_rel_err"] = best;
      break;
    }
    case AuditKind::SampleComplexity: {
      SweepGrid grid;
      grid.axes = {{"n", o.sample_sizes}};
      grid.seeds = o.seeds;
      grid.sweep_seed = o.sweep_seed;
      result.axis_names = {"n"};
      const auto ids = enumerate_cells(grid);
      result.cells.resize(ids.size());
      const double ref = awgn_reference(7, 1.0);
      parallel_for(ids.size(), o.jobs, [&](std::size_t i) {
        const auto& id = ids[i];
        const auto n = static_cast<Eigen::Index>(id.at("n"));
        const auto s = awgn_pair(n, 7, 1.0, sub_seed(id.seed, "data"));
        CriticConfig c = o.critic;
        c.batch_size = static_cast<int>(std::min<Eigen::Index>(c.batch_size, n));
        const double est = mine_mi(s.u, s.v, c, id.seed).value;
        CellResult cell;
        cell.id = id;
        cell.extras["estimate"] = est;
        cell.extras["reference"] = ref;
        cell.extras["rel_err"] = rel_err(est, ref);
        result.cells[i] = std::move(cell);
      });
      double prev = std::numeric_limits<double>::infinity();
      bool decreasing = true;
      for (double n : o.sample_sizes) {
        std::vector<double> errs;
        for (const auto& c : result.cells) {
          if (c.id.at("n") == n) errs.push_back(c.extras.at("rel_err"));
        }
        const double med = median_of(errs);
        std::ostringstream key;
        key << "median_rel_err_n" << static_cast<long>(n);
        result.summary[key.str()] = med;
        if (med > prev) decreasing = false;
        prev = med;
      }
      result.summary["median_rel_err_decreasing"] = decreasing ? 1.0 : 0.0;
      break;
    }
    case AuditKind::Distribution: {
      const std::vector<SourceLaw> laws{SourceLaw::Gaussian, SourceLaw::Laplace,
                                        SourceLaw::Uniform, SourceLaw::Gmm};
      std::vector<double> law_axis, est_axis;
      for (std::size_t i = 0; i < laws.size(); ++i) law_axis.push_back(static_cast<double>(i));
      for (auto e : o.estimators) est_axis.push_back(static_cast<double>(e));
      SweepGrid grid;
      grid.axes = {{"law", law_axis}, {"estimator", est_axis}};
      grid.seeds = o.seeds;
      grid.sweep_seed = o.sweep_seed;
      result.axis_names = {"law", "estimator"};
      std::vector<double> refs;
      for (auto law : laws) refs.push_back(quadrature_reference_mi(law, o.noise_sigma));
      const double closed = 0.5 * std::log1p(1.0 / (o.noise_sigma * o.noise_sigma));
      result.summary["gaussian_quadrature_vs_closed_form"] = std::abs(refs[0] - closed);
      for (std::size_t i = 0; i < laws.size(); ++i) {
        result.summary["reference_" + law_name(laws[i])] = refs[i];
      }
      const auto ids = enumerate_cells(grid);
      result.cells.resize(ids.size());
      parallel_for(ids.size(), o.jobs, [&](std::size_t i) {
        const auto& id = ids[i];
        const auto li = static_cast<std::size_t>(id.at("law"));
        const auto est_id = static_cast<EstimatorId>(static_cast<int>(id.at("estimator")));
        // Data depend on (law, replicate) only, so every estimator sees the same draws.
        Rng rng(SeedHasher(o.sweep_seed).add(static_cast<std::uint64_t>(li)).add(id.replicate).value());
        const Eigen::VectorXd u = draw_source(laws[li], o.n, rng);
        const Eigen::VectorXd v = u + o.noise_sigma * standard_normal(rng, o.n, 1).col(0);
        const double est = estimate_mi(est_id, u, v, o, id.seed);
        CellResult cell;
        cell.id = id;
        cell.extras["estimate"] = est;
        cell.extras["reference"] = refs[li];
        cell.extras["rel_err"] = rel_err(est, refs[li]);
        result.cells[i] = std::move(cell);
      });
      for (auto e : o.estimators) {
        std::vector<double> errs;
        for (const auto& c : result.cells) {
          if (static_cast<int>(c.id.at("estimator")) == static_cast<int>(e)) {
            errs.push_back(c.extras.at("rel_err"));
          }
        }
        result.summary["median_rel_err_" + to_string(e)] = median_of(errs);
      }
      break;
    }
    case AuditKind::HighD: {
      SweepGrid grid;
      grid.axes = {{"d", o.high_d_dims}, {"epsilon", o.high_d_epsilon}};
      grid.seeds = o.seeds;
      grid.sweep_seed = o.sweep_seed;
      result.axis_names = {"d", "epsilon"};
      const auto ids = enumerate_cells(grid);
      result.cells.resize(ids.size());
      parallel_for(ids.size(), o.jobs, [&](std::size_t i) {
        const auto& id = ids[i];
        ProxyConfig pc;
        pc.dx = pc.da = static_cast<int>(id.at("d"));
        pc.epsilon = id.at("epsilon");
        pc.seed = id.seed;
        const auto proxy = build_proxy(pc);
        const auto exact = analytic_bound_terms(proxy);
        const auto batch = sample(proxy, o.n, sub_seed(id.seed, "sample"));
        const Eigen::MatrixXd summary = batch.delta.cwiseAbs().rowwise().maxCoeff();
        CellResult cell;
        cell.id = id;
        cell.slack_analytic = slack(exact, 0.0, id.key());
        for (auto e : o.estimators) {
          const auto name = to_string(e);
          BoundTerms t = exact;  // analytic right-hand side
          t.source = TermSource::Estimated;
          t.estimators = {name};
          t.cap = estimate_mi(e, batch.a_star, batch.a_pi, o, sub_seed(id.seed, "cap"));
          t.rob_coupling = estimate_mi(e, batch.a_pi, batch.a_pi_tilde, o, sub_seed(id.seed, "rob"));
          t.leak = e == EstimatorId::HistogramMM
                       ? leak_debit_summary(batch.a_pi, batch.delta, o.hist)
                       : estimate_mi(e, batch.a_pi, summary, o, sub_seed(id.seed, "leak"));
          cell.slack_estimated[name] = slack(t, 0.0, id.key());
          cell.extras["rel_err_cap_" + name] = rel_err(t.cap, exact.cap);
          cell.extras["rel_err_rob_" + name] = rel_err(t.rob_coupling, exact.rob_coupling);
        }
        result.cells[i] = std::move(cell);
      });
      std::size_t checked = 0, held = 0;
      for (const auto& c : result.cells) {
        for (const auto& [_, rec] : c.slack_estimated) {
          ++checked;
          if (!rec.violated) ++held;
        }
      }
      result.summary["bound_holds_fraction"] =
          checked ? static_cast<double>(held) / static_cast<double>(checked) : 0.0;
      for (auto e : o.estimators) {
        std::vector<double> errs;
        for (const auto& c : result.cells) errs.push_back(c.extras.at("rel_err_cap_" + to_string(e)));
        result.summary["median_rel_err_cap_" + to_string(e)] = median_of(errs);
      }
      result.violations = static_cast<int>(checked - held);
      break;
    }
  }
  return result;
}

// ----------------------------------------------------------------------- DPI

SweepResult run_dpi_check(const DpiOptions& o) {
  SweepGrid grid;
  grid.name = o.broken ? "dpi-broken" : "dpi";
  grid.axes = {{"d", o.dims}, {"sigma_xy", o.sigma_xy}, {"sigma_yz", o.sigma_yz}};
  grid.seeds = o.seeds;
  grid.sweep_seed = o.sweep_seed;
  const auto ids = enumerate_cells(grid);
  SweepResult result;
  result.name = grid.name;
  result.axis_names = {"d", "sigma_xy", "sigma_yz"};
  result.cells.resize(ids.size());

  parallel_for(ids.size(), o.jobs, [&](std::size_t i) {
    const auto& id = ids[i];
    const int d = static_cast<int>(id.at("d"));
    const double sxy = id.at("sigma_xy"), syz = id.at("sigma_yz");
    Rng rng(id.seed);
    std::uniform_real_distribution<double> gain(0.5, 1.5);
    Eigen::VectorXd g1(d), g2(d);
    for (int j = 0; j < d; ++j) g1(j) = gain(rng);
    for (int j = 0; j < d; ++j) g2(j) = gain(rng);
    // Direct tap used by the broken chain: Z = g2 X + small noise.
    const double direct_noise = 0.05;

    const Eigen::MatrixXd x = standard_normal(rng, o.n, d);
    const Eigen::MatrixXd y = x * g1.asDiagonal() + sxy * standard_normal(rng, o.n, d);
    const Eigen::MatrixXd z = o.broken
                                  ? Eigen::MatrixXd(x * g2.asDiagonal() + direct_noise * standard_normal(rng, o.n, d))
                                  : Eigen::MatrixXd(y * g2.asDiagonal() + syz * standard_normal(rng, o.n, d));

    // Exact law of (X, Y, Z) for the oracle comparison.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3 * d, 3 * d);
    Eigen::VectorXd var(3 * d);
    const Eigen::MatrixXd id_d = Eigen::MatrixXd::Identity(d, d);
    m.block(0, 0, d, d) = id_d;
    m.block(d, 0, d, d) = g1.asDiagonal();
    m.block(d, d, d, d) = id_d;
    if (o.broken) {
      m.block(2 * d, 0, d, d) = g2.asDiagonal();
    } else {
      m.block(2 * d, 0, d, d) = (g2.array() * g1.array()).matrix().asDiagonal();
      m.block(2 * d, d, d, d) = g2.asDiagonal();
    }
    m.block(2 * d, 2 * d, d, d) = id_d;
    var << Eigen::VectorXd::Ones(d), Eigen::VectorXd::Constant(d, sxy * sxy),
        Eigen::VectorXd::Constant(d, o.broken ? direct_noise * direct_noise : syz * syz);
    const JointGaussian joint({{"x", d}, {"y", d}, {"z", d}},
                              CovarianceMatrix::from_factored(m * var.asDiagonal() * m.transpose()));

    CellResult cell;
    cell.id = id;
    const bool hist = o.estimator == EstimatorId::HistogramMM;
    cell.extras["i_xy"] = hist ? perdim_mi(x, y, o.hist) : ksg_mi(x, y, o.ksg_k).value;
    cell.extras["i_xz"] = hist ? perdim_mi(x, z, o.hist) : ksg_mi(x, z, o.ksg_k).value;
    cell.extras["analytic_xy"] = gaussian_mi(joint, {"x"}, {"y"});
    cell.extras["analytic_xz"] = gaussian_mi(joint, {"x"}, {"z"});
    cell.extras["seed_exceeds"] =
        cell.extras["i_xz"] > cell.extras["i_xy"] + o.tolerance ? 1.0 : 0.0;
    result.cells[i] = std::move(cell);
  });

  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  int seed_exceed = 0, analytic_v = 0;
  for (const auto& c : result.cells) {
    const auto g = c.id.group_key();
    if (!groups.count(g)) order.push_back(g);
    groups[g].first.push_back(c.extras.at("i_xy"));
    groups[g].second.push_back(c.extras.at("i_xz"));
    if (c.extras.at("seed_exceeds") == 1.0) ++seed_exceed;
    if (c.extras.at("analytic_xz") > c.extras.at("analytic_xy") + 1e-9) ++analytic_v;
  }
  int group_v = 0;
  for (const auto& g : order) {
    const double mxy = mean_of(groups[g].first), mxz = mean_of(groups[g].second);
    GroupStats gs;
    gs.group_id = g;
    gs.source = "dpi_margin";
    gs.count = groups[g].first.size();
    gs.mean = mxy - mxz;
    if (mxz > mxy + o.tolerance) ++group_v;
    result.groups.push_back(gs);
  }
  result.summary["groups"] = static_cast<double>(order.size());
  result.summary["group_violations"] = group_v;
  result.summary["seed_exceedances"] = seed_exceed;
  result.summary["analytic_violations"] = analytic_v;
  result.violations = group_v;
  return result;
}

}  // namespace caprob
