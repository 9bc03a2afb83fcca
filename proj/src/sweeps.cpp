#include "caprob/sweeps.h"

#include "caprob/error.h"
#include "caprob/rng.h"
#include "caprob/stats.h"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace caprob {

namespace {

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::uint64_t sub_seed(std::uint64_t seed, std::string_view tag) {
  return SeedHasher(seed).add(tag).value();
}

// Group cells by group_key in first-appearance order, then test S > 0 per
// group and Holm-adjust across the groups of one source.
std::vector<GroupStats> group_slacks(const std::vector<CellResult>& cells, const std::string& source,
                                     double alpha) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> samples;
  for (const auto& c : cells) {
    const SlackRecord* rec = nullptr;
    if (source == "analytic") {
      if (c.slack_analytic) rec = &*c.slack_analytic;
    } else {
      auto it = c.slack_estimated.find(source);
      if (it != c.slack_estimated.end()) rec = &it->second;
    }
    if (rec == nullptr || !std::isfinite(rec->slack)) continue;
    const auto g = c.id.group_key();
    if (!samples.count(g)) order.push_back(g);
    samples[g].push_back(rec->slack);
  }
  std::vector<GroupStats> out;
  std::vector<double> raw;
  for (const auto& g : order) {
    const auto& s = samples[g];
    GroupStats gs;
    gs.group_id = g;
    gs.source = source;
    gs.count = s.size();
    gs.mean = mean_of(s);
    gs.std = sample_std(s);
    if (s.size() >= 2) {
      const auto t = one_sided_t_or_degenerate(s, 0.0);
      gs.t_stat = t.t;
      gs.p_one_sided = t.p;
    } else {
      gs.t_stat = 0.0;
      gs.p_one_sided = 1.0;
    }
    raw.push_back(gs.p_one_sided);
    out.push_back(gs);
  }
  if (!raw.empty()) {
    const auto adj = holm_bonferroni(raw);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].p_holm_adjusted = adj[i];
      out[i].significant = adj[i] < alpha;
    }
  }
  return out;
}

double axis_or(const CellId& id, const std::string& name, double fallback) {
  for (const auto& [k, v] : id.axes) {
    if (k == name) return v;
  }
  return fallback;
}

}  // namespace

void SweepGrid::validate() const {
  std::set<std::string> names;
  for (const auto& a : axes) {
    if (!names.insert(a.name).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate axis '" + a.name + "'");
    }
    if (a.values.empty()) throw Error(ErrorKind::InvalidArgument, "axis '" + a.name + "' is empty");
  }
  if (seeds.empty()) throw Error(ErrorKind::InvalidArgument, "grid needs at least one seed");
  if (samples_n < 1) throw Error(ErrorKind::InvalidCount, "samples_n must be >= 1");
}

std::size_t SweepGrid::cell_count() const {
  std::size_t n = seeds.size();
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

double CellId::at(const std::string& axis) const {
  for (const auto& [k, v] : axes) {
    if (k == axis) return v;
  }
  throw Error(ErrorKind::InvalidArgument, "cell has no axis '" + axis + "'");
}

std::string CellId::group_key() const {
  std::string s;
  for (const auto& [k, v] : axes) {
    if (!s.empty()) s += ';';
    s += k + "=" + format_value(v);
  }
  return s;
}

std::string CellId::key() const {
  auto g = group_key();
  return (g.empty() ? "" : g + ";") + "rep=" + std::to_string(replicate);
}

std::uint64_t derive_cell_seed(std::uint64_t sweep_seed,
                               const std::vector<std::pair<std::string, double>>& axes,
                               std::uint64_t replicate) {
  SeedHasher h(sweep_seed);
  for (const auto& [k, v] : axes) h.add(std::string_view(k)).add(v);
  h.add(std::string_view("replicate")).add(replicate);
  return h.value();
}

std::vector<CellId> enumerate_cells(const SweepGrid& grid) {
  grid.validate();
  std::vector<CellId> cells;
  std::vector<std::size_t> idx(grid.axes.size(), 0);
  while (true) {
    std::vector<std::pair<std::string, double>> axes;
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
      axes.emplace_back(grid.axes[a].name, grid.axes[a].values[idx[a]]);
    }
    for (auto rep : grid.seeds) {
      CellId id;
      id.axes = axes;
      id.replicate = rep;
      id.seed = derive_cell_seed(grid.sweep_seed, axes, rep);
      cells.push_back(std::move(id));
    }
    // Odometer increment, last axis fastest.
    std::size_t a = grid.axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < grid.axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return cells;
    }
    if (grid.axes.empty()) return cells;
  }
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------- bound sweep

BoundSweepOptions BoundSweepOptions::preset(const std::string& name) {
  BoundSweepOptions o;
  o.grid.name = "bound";
  o.grid.axes = {{"dx", {4, 7, 16}},
                 {"da", {3, 7}},
                 {"sigma_pi", {0.3, 1.0}},
                 {"epsilon", {0.05, 0.1, 0.2, 0.5, 1.0, 2.0}}};
  o.grid.seeds = {0, 1, 2};
  o.grid.samples_n = 5000;
  o.grid.estimators = {EstimatorId::HistogramMM, EstimatorId::Ksg};
  if (name == "full") {
    o.grid.axes[3].values.insert(o.grid.axes[3].values.begin(), 0.0);
    o.grid.estimators.push_back(EstimatorId::Mine);
  } else if (name != "desk") {
    throw Error(ErrorKind::InvalidArgument, "unknown preset '" + name + "'");
  }
  return o;
}

BoundTerms estimate_terms(const SampleBatch& batch, EstimatorId estimator,
                          const BoundSweepOptions& options, std::uint64_t seed) {
  BoundTerms t;
  t.source = TermSource::Estimated;
  t.entropy_units = EntropyUnits::Differential;
  t.estimators = {to_string(estimator)};
  const Eigen::MatrixXd summary = batch.delta.cwiseAbs().rowwise().maxCoeff();
  switch (estimator) {
    case EstimatorId::HistogramMM:
      t.cap = perdim_mi(batch.a_star, batch.a_pi, options.hist);
      t.rob_coupling = perdim_mi(batch.a_pi, batch.a_pi_tilde, options.hist);
      t.leak = leak_debit_summary(batch.a_pi, batch.delta, options.hist);
      t.task_entropy = pca_histogram_entropy(batch.a_star, options.hist);
      t.channel = perdim_mi(batch.x, batch.x_tilde, options.hist);
      break;
    case EstimatorId::Ksg:
      t.cap = ksg_mi(batch.a_star, batch.a_pi, options.ksg_k).value;
      t.rob_coupling = ksg_mi(batch.a_pi, batch.a_pi_tilde, options.ksg_k).value;
      t.leak = ksg_mi(batch.a_pi, summary, options.ksg_k).value;
      t.task_entropy = knn_entropy(batch.a_star, options.ksg_k);
      t.channel = ksg_mi(batch.x, batch.x_tilde, options.ksg_k).value;
      break;
    case EstimatorId::Mine:
    case EstimatorId::InfoNce: {
      auto mi = [&](const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, std::string_view tag) {
        const auto s = sub_seed(seed, tag);
        return estimator == EstimatorId::Mine
                   ? mine_mi(u, v, options.critic, s).value
                   : infonce_mi(u, v, options.infonce_k, options.critic, s).value;
      };
      t.cap = mi(batch.a_star, batch.a_pi, "cap");
      t.rob_coupling = mi(batch.a_pi, batch.a_pi_tilde, "rob");
      t.leak = mi(batch.a_pi, summary, "leak");
      t.task_entropy = knn_entropy(batch.a_star, options.ksg_k);
      t.channel = mi(batch.x, batch.x_tilde, "channel");
      t.estimators.push_back("ksg_entropy");
      break;
    }
  }
  return t;
}

SweepResult run_bound_sweep(const BoundSweepOptions& options) {
  const auto ids = enumerate_cells(options.grid);
  SweepResult result;
  result.name = options.grid.name.empty() ? "bound" : options.grid.name;
  for (const auto& a : options.grid.axes) result.axis_names.push_back(a.name);
  result.cells.resize(ids.size());

  parallel_for(ids.size(), options.jobs, [&](std::size_t i) {
    const CellId& id = ids[i];
    ProxyConfig pc;
    pc.dx = static_cast<int>(axis_or(id, "dx", options.dx));
    pc.da = static_cast<int>(axis_or(id, "da", options.da));
    pc.sigma_pi = axis_or(id, "sigma_pi", options.sigma_pi);
    pc.sigma_star = axis_or(id, "sigma_star", options.sigma_star);
    pc.epsilon = axis_or(id, "epsilon", options.epsilon);
    pc.w_coupling = options.coupling;
    pc.seed = id.seed;
    const ProxySystem proxy = build_proxy(pc);

    CellResult cell;
    cell.id = id;
    cell.slack_analytic = slack(analytic_bound_terms(proxy), options.tolerance, id.key());
    cell.extras["headline"] = std::isfinite(cell.slack_analytic->slack) ? 1.0 : 0.0;

    if (!options.grid.estimators.empty()) {
      const SampleBatch batch = sample(proxy, options.grid.samples_n, sub_seed(id.seed, "sample"));
      for (auto est : options.grid.estimators) {
        const auto terms = estimate_terms(batch, est, options, sub_seed(id.seed, to_string(est)));
        cell.slack_estimated[to_string(est)] = slack(terms, options.tolerance, id.key());
      }
      // Self-consistency capability against discretised robustness on one quantiser.
      const double cap_sc = perdim_entropy(batch.a_pi, options.hist);
      const double rob_disc = perdim_mi(batch.a_pi, batch.a_pi_tilde, options.hist);
      const auto check = discrete_inequality(cap_sc, rob_disc);
      cell.extras["cap_sc"] = cap_sc;
      cell.extras["rob_disc"] = rob_disc;
      cell.extras["discrete_slack"] = check.slack;
      cell.extras["discrete_holds"] = check.holds ? 1.0 : 0.0;
    }
    result.cells[i] = std::move(cell);
  });

  int analytic_v = 0, estimated_v = 0, discrete_v = 0;
  for (const auto& c : result.cells) {
    if (c.slack_analytic && c.slack_analytic->violated) ++analytic_v;
    for (const auto& [_, rec] : c.slack_estimated) {
      if (rec.violated) ++estimated_v;
    }
    auto it = c.extras.find("discrete_holds");
    if (it != c.extras.end() && it->second == 0.0) ++discrete_v;
  }
  result.groups = group_slacks(result.cells, "analytic", options.alpha);
  for (auto est : options.grid.estimators) {
    auto g = group_slacks(result.cells, to_string(est), options.alpha);
    result.groups.insert(result.groups.end(), g.begin(), g.end());
    result.summary["one_sided_fraction_" + to_string(est)] =
        one_sidedness_fraction(result, to_string(est));
  }
  result.summary["analytic_violations"] = analytic_v;
  result.summary["estimated_violations"] = estimated_v;
  result.summary["discrete_violations"] = discrete_v;
  result.violations = analytic_v + estimated_v + discrete_v;
  return result;
}

std::vector<std::pair<double, double>> median_slack_by(const SweepResult& result,
                                                       const std::string& axis,
                                                       const std::string& source) {
  std::map<double, std::vector<double>> by;
  for (const auto& c : result.cells) {
    const SlackRecord* rec = nullptr;
    if (source == "analytic") {
      if (c.slack_analytic) rec = &*c.slack_analytic;
    } else if (auto it = c.slack_estimated.find(source); it != c.slack_estimated.end()) {
      rec = &it->second;
    }
    if (rec == nullptr || !std::isfinite(rec->slack)) continue;
    by[c.id.at(axis)].push_back(rec->slack);
  }
  std::vector<std::pair<double, double>> out;
  for (auto& [k, v] : by) out.emplace_back(k, median_of(v));
  return out;
}

double one_sidedness_fraction(const SweepResult& result, const std::string& estimator) {
  std::map<std::string, std::vector<double>> sa, sm;
  std::vector<std::string> order;
  for (const auto& c : result.cells) {
    auto it = c.slack_estimated.find(estimator);
    if (!c.slack_analytic || it == c.slack_estimated.end()) continue;
    if (!std::isfinite(c.slack_analytic->slack) || !std::isfinite(it->second.slack)) continue;
    const auto g = c.id.group_key();
    if (!sa.count(g)) order.push_back(g);
    sa[g].push_back(c.slack_analytic->slack);
    sm[g].push_back(it->second.slack);
  }
  if (order.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& g : order) {
    if (mean_of(sm[g]) <= mean_of(sa[g]) + 2.0 * sample_std(sm[g])) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(order.size());
}

// ------------------------------------------------------------- achievability

AchievabilityOptions AchievabilityOptions::preset(const std::string& name) {
  AchievabilityOptions o;
  if (name == "full") {
    o.epsilon = {0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
    o.seeds = {1, 2, 3};
  } else if (name != "desk") {
    throw Error(ErrorKind::InvalidArgument, "unknown preset '" + name + "'");
  }
  return o;
}

AchievabilityPoint achievability_point(int dx, int da, double epsilon, double alpha,
                                       double sigma_pi, const AchievabilityOptions& options,
                                       std::uint64_t cell_seed) {
  ProxyConfig pc;
  pc.dx = dx;
  pc.da = da;
  pc.sigma_star = options.sigma_star;
  pc.sigma_pi = sigma_pi;
  pc.epsilon = epsilon;
  pc.policy = PolicyVariant::ridge(alpha);
  pc.attack = options.attack;
  pc.seed = cell_seed;
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "achievability needs epsilon > 0");
  const ProxySystem proxy = build_proxy(pc);
  // Same sample seed for every (alpha, sigma_pi): only the policy changes.
  const SampleBatch b = sample(proxy, options.n, sub_seed(cell_seed, "sample"));
  HistogramSpec spec;
  spec.bins_k = options.bins;

  AchievabilityPoint p;
  p.cap_q = perdim_mi(b.a_star, b.a_pi, spec);
  p.rob_coupling_q = perdim_mi(b.a_pi, b.a_pi_tilde, spec);
  p.leak_q = leak_debit_summary(b.a_pi, b.delta, spec);
  p.entropy_q = perdim_entropy(b.a_star, spec);
  const double noise_var = options.attack.kind == AttackKind::ObliviousGaussian
                               ? epsilon * epsilon
                               : b.delta.squaredNorm() / static_cast<double>(b.delta.size());
  p.channel = isotropic_channel_bound(dx, 1.0, noise_var);
  p.r = (p.cap_q + p.rob_coupling_q - p.leak_q) / (p.entropy_q + p.channel);
  return p;
}

SweepResult run_achievability_sweep(const AchievabilityOptions& options) {
  SweepGrid grid;
  grid.name = "achievability";
  grid.axes = {{"dx", options.dx}, {"da", options.da}, {"epsilon", options.epsilon}};
  grid.seeds = options.seeds;
  grid.sweep_seed = options.sweep_seed;
  const auto ids = enumerate_cells(grid);

  SweepResult result;
  result.name = grid.name;
  result.axis_names = {"dx", "da", "epsilon"};
  result.cells.resize(ids.size());
  parallel_for(ids.size(), options.jobs, [&](std::size_t i) {
    const auto& id = ids[i];
    const int dx = static_cast<int>(id.at("dx")), da = static_cast<int>(id.at("da"));
    const double eps = id.at("epsilon");
    AchievabilityPoint best;
    double best_alpha = 0.0, best_sigma = 0.0;
    bool first = true;
    for (double a : options.alpha) {
      for (double s : options.sigma_pi) {
        const auto p = achievability_point(dx, da, eps, a, s, options, id.seed);
        if (first || p.r > best.r) {
          best = p;
          best_alpha = a;
          best_sigma = s;
          first = false;
        }
      }
    }
    CellResult cell;
    cell.id = id;
    BoundTerms t;
    t.source = TermSource::Estimated;
    t.entropy_units = EntropyUnits::Discrete;
    t.estimators = {"histogram_mm"};
    t.cap = best.cap_q;
    t.rob_coupling = best.rob_coupling_q;
    t.leak = best.leak_q;
    t.task_entropy = best.entropy_q;
    t.channel = best.channel;
    cell.slack_estimated["quantized"] = slack(t, options.tolerance, id.key());
    cell.extras["r"] = best.r;
    cell.extras["best_alpha"] = best_alpha;
    cell.extras["best_sigma_pi"] = best_sigma;
    cell.extras["over_actuated"] = dx <= da ? 1.0 : 0.0;
    result.cells[i] = std::move(cell);
  });

  double r_over = 0.0, r_under = 0.0;
  int out_of_range = 0;
  for (const auto& c : result.cells) {
    const double r = c.extras.at("r");
    if (c.extras.at("over_actuated") == 1.0) r_over = std::max(r_over, r);
    else r_under = std::max(r_under, r);
    if (r < 0.0 || r > 1.0) ++out_of_range;
  }
  result.summary["r_max_over_actuated"] = r_over;
  result.summary["r_max_under_actuated"] = r_under;
  result.summary["r_out_of_range"] = out_of_range;
  result.violations = out_of_range;
  return result;
}

// ---------------------------------------------------------------------- leak

SweepResult run_leak_sweep(const LeakOptions& options) {
  SweepResult result;
  result.name = "leak";
  result.axis_names = {"epsilon", "lambda"};
  // One fixed W for the whole grid so that lambda and epsilon are the only
  // things that change between cells.
  const std::uint64_t proxy_seed = sub_seed(options.sweep_seed, "leak-proxy");
  int debited_v = 0, free_v = 0, non_monotone = 0;
  double max_gap_err = 0.0;
  for (double eps : options.epsilon) {
    double prev_leak = -1.0;
    for (double lam : options.lambda) {
      ProxyConfig pc;
      pc.dx = options.dx;
      pc.da = options.da;
      pc.sigma_star = options.sigma_star;
      pc.sigma_pi = options.sigma_pi;
      pc.epsilon = eps;
      pc.policy = PolicyVariant::leak(lam);
      pc.w_coupling = options.coupling;
      pc.seed = proxy_seed;
      const auto terms = analytic_bound_terms(build_proxy(pc));

      CellResult cell;
      cell.id.axes = {{"epsilon", eps}, {"lambda", lam}};
      cell.id.seed = proxy_seed;
      cell.slack_analytic = slack(terms, options.tolerance, cell.id.key());
      const double free_slack =
          terms.task_entropy + terms.channel - terms.cap - terms.rob_coupling;
      cell.extras["debit_free_slack"] = free_slack;
      cell.extras["debit_free_violated"] = free_slack < -options.tolerance ? 1.0 : 0.0;
      const double gap = terms.rob_coupling - cell.slack_analytic->rob;
      max_gap_err = std::max(max_gap_err, std::abs(gap - terms.leak));
      if (cell.slack_analytic->violated) ++debited_v;
      if (free_slack < -options.tolerance) ++free_v;
      if (terms.leak < prev_leak) ++non_monotone;
      prev_leak = terms.leak;
      result.cells.push_back(std::move(cell));
    }
  }
  result.summary["debited_violations"] = debited_v;
  result.summary["debit_free_violations"] = free_v;
  result.summary["non_monotone_steps"] = non_monotone;
  result.summary["max_debit_gap_error"] = max_gap_err;
  result.violations = debited_v;
  return result;
}

// ----------------------------------------------------------------- multistep

SweepResult run_multistep(const MultistepOptions& options) {
  if (options.steps < 1) throw Error(ErrorKind::InvalidArgument, "steps must be >= 1");
  const bool iid = options.epsilon.size() == 1;
  if (!iid && options.epsilon.size() != static_cast<std::size_t>(options.steps)) {
    throw Error(ErrorKind::InvalidArgument, "epsilon list must have 1 or `steps` entries");
  }
  SweepResult result;
  result.name = "multistep";
  result.axis_names = {"step", "epsilon"};
  const std::uint64_t proxy_seed = sub_seed(options.sweep_seed, "multistep-proxy");
  std::vector<BoundTerms> per_step;
  double sum_of_slacks = 0.0;
  for (int t = 0; t < options.steps; ++t) {
    ProxyConfig pc;
    pc.dx = options.dx;
    pc.da = options.da;
    pc.sigma_star = options.sigma_star;
    pc.sigma_pi = options.sigma_pi;
    pc.epsilon = iid ? options.epsilon[0] : options.epsilon[static_cast<std::size_t>(t)];
    pc.w_coupling = options.coupling;
    pc.seed = proxy_seed;
    const auto terms = analytic_bound_terms(build_proxy(pc));
    per_step.push_back(terms);
    CellResult cell;
    cell.id.axes = {{"step", static_cast<double>(t + 1)}, {"epsilon", pc.epsilon}};
    cell.id.seed = proxy_seed;
    cell.slack_analytic = slack(terms, 0.0, cell.id.key());
    sum_of_slacks += cell.slack_analytic->slack;
    result.cells.push_back(std::move(cell));
  }
  const auto totals = multistep_accumulate(per_step);
  const double s1 = result.cells.front().slack_analytic->slack;
  result.summary["steps"] = options.steps;
  result.summary["lhs_sum"] = totals.lhs_sum;
  result.summary["rhs_sum"] = totals.rhs_sum;
  result.summary["slack_T"] = totals.slack_t;
  result.summary["sum_step_slacks"] = sum_of_slacks;
  if (iid) {
    const double target = options.steps * s1;
    const double rel = std::abs(totals.slack_t - target) / std::max(std::abs(target), 1e-300);
    result.summary["T_times_S1"] = target;
    result.summary["linear_rel_error"] = rel;
    result.summary["linear_ok"] = rel <= options.rel_tolerance ? 1.0 : 0.0;
  }
  result.violations = totals.slack_t < 0.0 ? 1 : 0;
  return result;
}

}  // namespace caprob
