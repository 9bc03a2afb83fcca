#pragma once

#include "caprob/bound_terms.h"
#include "caprob/gaussian_core.h"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace caprob {

struct SlackRecord {
  std::string cell_id;
  BoundTerms terms;
  double rob = 0.0;    // rob_coupling - leak
  double slack = 0.0;  // task_entropy + channel - cap - rob
  bool violated = false;
};

/// Terms must be finite, except channel which may be +inf (no attack).
SlackRecord slack(const BoundTerms& terms, double tolerance = 0.0, std::string cell_id = {});

/// (d/2) ln(1 + sigma_x2 / sigma_d2).
double isotropic_channel_bound(int d, double sigma_x2, double sigma_d2);

/// sum_i (1/2) ln(1 + lambda_i / sigma_d2).
double pca_channel_bound(const Spectrum& spectrum, double sigma_d2);

struct EncoderAudit {
  Eigen::Index feature_dim = 0;
  Eigen::Index n = 0;
  double sigma2_delta_phi = 0.0;
  Spectrum spectrum;  // of the clean-feature sample covariance
  double bound = 0.0;
  std::optional<double> shift_vs_baseline;
};

EncoderAudit encoder_ceiling(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& perturbed);

enum class ShiftClass { InputSide, LlmSide };

struct ShiftSignature {
  double delta = 0.0;
  ShiftClass classification = ShiftClass::LlmSide;
};

ShiftSignature shift_signature(const EncoderAudit& defended, const EncoderAudit& vanilla,
                               double rel_threshold = 0.10);

struct DiscreteCheck {
  double slack = 0.0;
  bool holds = true;
};

DiscreteCheck discrete_inequality(double cap_sc, double rob_disc);

struct MultistepTotals {
  double lhs_sum = 0.0;
  double rhs_sum = 0.0;
  double slack_t = 0.0;
};

MultistepTotals multistep_accumulate(const std::vector<BoundTerms>& per_step);

}  // namespace caprob
