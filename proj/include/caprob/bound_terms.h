#pragma once

#include <string>
#include <vector>

namespace caprob {

enum class TermSource { Analytic, Estimated };

/// Differential entropies can be negative; discrete ones cannot. Reports
/// carry this tag next to the task-entropy column.
enum class EntropyUnits { Differential, Discrete };

/// The five quantities entering the capability-robustness inequality, in nats.
struct BoundTerms {
  double cap = 0.0;           // I(A*; A_pi)
  double rob_coupling = 0.0;  // I(A_pi; A~_pi)
  double leak = 0.0;          // I(A_pi; delta)
  double task_entropy = 0.0;  // H(A*)
  double channel = 0.0;       // I(X; X~), or an upper bound on it
  TermSource source = TermSource::Analytic;
  EntropyUnits entropy_units = EntropyUnits::Differential;
  std::vector<std::string> estimators;  // empty when analytic
};

}  // namespace caprob
