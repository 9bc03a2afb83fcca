#pragma once

// Experiment grids over the proxy and the estimators. Every sweep returns a
// SweepResult whose cells are in grid-enumeration order (axes in declared
// order, replicate innermost), which is the row order of the emitted CSV.

#include "caprob/bounds.h"
#include "caprob/estimators.h"
#include "caprob/proxy.h"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace caprob {

struct Axis {
  std::string name;
  std::vector<double> values;
};

struct SweepGrid {
  std::string name;
  std::vector<Axis> axes;
  std::vector<std::uint64_t> seeds;  // replicate labels
  std::vector<EstimatorId> estimators;
  Eigen::Index samples_n = 5000;
  std::uint64_t sweep_seed = 0;

  void validate() const;
  std::size_t cell_count() const;
};

struct CellId {
  std::vector<std::pair<std::string, double>> axes;
  std::uint64_t replicate = 0;
  std::uint64_t seed = 0;

  double at(const std::string& axis) const;
  std::string key() const;        // "dx=4;da=3;...;rep=0"
  std::string group_key() const;  // key without the replicate
};

struct CellResult {
  CellId id;
  std::optional<SlackRecord> slack_analytic;
  std::map<std::string, SlackRecord> slack_estimated;  // keyed by estimator name
  std::map<std::string, double> extras;
};

struct GroupStats {
  std::string group_id;
  std::string source;  // "analytic" or an estimator name
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
  double t_stat = 0.0;
  double p_one_sided = 1.0;
  double p_holm_adjusted = 1.0;
  bool significant = false;
};

struct SweepResult {
  std::string name;
  std::vector<std::string> axis_names;
  std::vector<CellResult> cells;
  std::vector<GroupStats> groups;
  std::map<std::string, double> summary;
  int violations = 0;
};

/// Cell seed = hash(sweep seed, axis names and values, replicate label).
std::uint64_t derive_cell_seed(std::uint64_t sweep_seed,
                               const std::vector<std::pair<std::string, double>>& axes,
                               std::uint64_t replicate);

std::vector<CellId> enumerate_cells(const SweepGrid& grid);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results are
/// written by index, so output order never depends on scheduling.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------- bound sweep

struct BoundSweepOptions {
  SweepGrid grid;  // axes: dx, da, sigma_pi, epsilon (missing axes use the fixed values)
  double sigma_star = 0.3;
  int dx = 7, da = 7;
  double sigma_pi = 0.3, epsilon = 0.1;
  Coupling coupling = Coupling::Matched;
  HistogramSpec hist;
  int ksg_k = 5;
  CriticConfig critic;
  int infonce_k = 128;
  double tolerance = 0.0;
  double alpha = 0.05;  // family-wise level for the Holm step
  int jobs = 1;

  static BoundSweepOptions preset(const std::string& name);
};

/// Estimated terms for one sample batch with one estimator.
BoundTerms estimate_terms(const SampleBatch& batch, EstimatorId estimator,
                          const BoundSweepOptions& options, std::uint64_t seed);

SweepResult run_bound_sweep(const BoundSweepOptions& options);

/// Medians of a slack source per value of `axis`, ascending in the axis.
/// Cells with non-finite slack are skipped.
std::vector<std::pair<double, double>> median_slack_by(const SweepResult& result,
                                                       const std::string& axis,
                                                       const std::string& source);

/// Fraction of groups where mean S_m <= mean S_a + 2 * std(S_m) over seeds.
double one_sidedness_fraction(const SweepResult& result, const std::string& estimator);

// ------------------------------------------------------------- achievability

struct AchievabilityOptions {
  std::vector<double> dx{2, 4, 7, 16};
  std::vector<double> da{2, 4, 7};
  std::vector<double> epsilon{0.05, 0.5, 2.0};
  std::vector<double> alpha{1, 3, 10, 30};
  std::vector<double> sigma_pi{0.01, 0.05, 0.1};
  double sigma_star = 0.3;
  Eigen::Index n = 100000;
  int bins = 32;
  AttackSpec attack;
  std::vector<std::uint64_t> seeds{1};
  std::uint64_t sweep_seed = 0;
  double tolerance = 0.0;
  int jobs = 1;

  static AchievabilityOptions preset(const std::string& name);
};

struct AchievabilityPoint {
  double r = 0.0;
  double cap_q = 0.0, rob_coupling_q = 0.0, leak_q = 0.0, entropy_q = 0.0, channel = 0.0;
};

/// One ridge policy (alpha, sigma_pi) on one cell, per-dim quantised.
/// Adaptive attacks use the Gaussian surrogate channel at the realised
/// per-coordinate perturbation variance.
AchievabilityPoint achievability_point(int dx, int da, double epsilon, double alpha,
                                       double sigma_pi, const AchievabilityOptions& options,
                                       std::uint64_t cell_seed);

SweepResult run_achievability_sweep(const AchievabilityOptions& options);

// ---------------------------------------------------------------------- leak

struct LeakOptions {
  std::vector<double> lambda{0.0, 0.25, 0.5, 0.75, 0.99};
  std::vector<double> epsilon{0.05, 0.2, 1.0};
  int dx = 7, da = 7;
  double sigma_star = 0.3, sigma_pi = 0.3;
  Coupling coupling = Coupling::Matched;
  std::uint64_t sweep_seed = 0;
  double tolerance = 0.0;
};

SweepResult run_leak_sweep(const LeakOptions& options);

// ----------------------------------------------------------------------- DPI

struct DpiOptions {
  std::vector<double> dims{1, 2, 4};
  std::vector<double> sigma_xy{0.3, 1.0, 3.0};
  std::vector<double> sigma_yz{0.3, 1.0, 3.0};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  Eigen::Index n = 5000;
  EstimatorId estimator = EstimatorId::HistogramMM;
  HistogramSpec hist;
  int ksg_k = 5;
  double tolerance = 0.05;
  bool broken = false;  // Z observes X directly, bypassing Y
  std::uint64_t sweep_seed = 0;
  int jobs = 1;
};

SweepResult run_dpi_check(const DpiOptions& options);

// ---------------------------------------------------------- estimator audits

enum class AuditKind { Hyperparam, SampleComplexity, Distribution, HighD };

AuditKind audit_kind_from_string(const std::string& name);
std::string to_string(AuditKind kind);

struct AuditOptions {
  AuditKind kind = AuditKind::SampleComplexity;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  CriticConfig critic;
  Eigen::Index n = 2000;
  std::vector<double> sample_sizes{500, 2000, 5000, 20000};
  std::vector<double> high_d_dims{8, 32, 64};
  std::vector<double> high_d_epsilon{0.5, 2.0};
  double noise_sigma = 0.5;  // distribution audit: V = U + noise_sigma * N(0, 1)
  std::vector<EstimatorId> estimators{EstimatorId::HistogramMM, EstimatorId::Ksg};
  HistogramSpec hist;
  int ksg_k = 5;
  std::uint64_t sweep_seed = 0;
  int jobs = 1;

  static AuditOptions preset(const std::string& name, AuditKind kind);
};

SweepResult run_estimator_audit(const AuditOptions& options);

enum class SourceLaw { Gaussian, Laplace, Uniform, Gmm };

/// I(U; U + sigma N) for a unit-variance scalar source, by adaptive quadrature.
double quadrature_reference_mi(SourceLaw law, double noise_sigma);

// ----------------------------------------------------------------- multistep

struct MultistepOptions {
  int steps = 10;
  std::vector<double> epsilon{0.5};  // one value = i.i.d. steps, else one per step
  int dx = 7, da = 7;
  double sigma_star = 0.3, sigma_pi = 0.3;
  Coupling coupling = Coupling::Matched;
  std::uint64_t sweep_seed = 0;
  double rel_tolerance = 1e-3;
};

SweepResult run_multistep(const MultistepOptions& options);

}  // namespace caprob
