#include "caprob/bounds.h"

#include "caprob/error.h"

#include <cmath>

namespace caprob {

SlackRecord slack(const BoundTerms& terms, double tolerance, std::string cell_id) {
  for (double v : {terms.cap, terms.rob_coupling, terms.leak, terms.task_entropy}) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "bound term is not finite");
  }
  if (std::isnan(terms.channel) || terms.channel == -INFINITY) {
    throw Error(ErrorKind::NonFinite, "channel term must be finite or +inf");
  }
  SlackRecord r;
  r.cell_id = std::move(cell_id);
  r.terms = terms;
  r.rob = terms.rob_coupling - terms.leak;
  r.slack = terms.task_entropy + terms.channel - terms.cap - r.rob;
  r.violated = r.slack < -tolerance;
  return r;
}

double isotropic_channel_bound(int d, double sigma_x2, double sigma_d2) {
  if (!(sigma_d2 > 0.0)) throw Error(ErrorKind::ZeroNoise, "noise variance must be > 0");
  if (d < 0 || !(sigma_x2 >= 0.0)) throw Error(ErrorKind::InvalidArgument, "bad signal parameters");
  return 0.5 * d * std::log1p(sigma_x2 / sigma_d2);
}

double pca_channel_bound(const Spectrum& spectrum, double sigma_d2) {
  if (!(sigma_d2 > 0.0)) throw Error(ErrorKind::ZeroNoise, "noise variance must be > 0");
  double total = 0.0;
  for (double lambda : spectrum.eigenvalues) total += 0.5 * std::log1p(std::max(lambda, 0.0) / sigma_d2);
  return total;
}

EncoderAudit encoder_ceiling(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& perturbed) {
  if (clean.rows() != perturbed.rows() || clean.cols() != perturbed.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "clean and perturbed features differ in shape");
  }
  if (clean.rows() < 2 || clean.cols() < 1) {
    throw Error(ErrorKind::ShapeMismatch, "need at least 2 rows and 1 feature");
  }
  EncoderAudit a;
  a.n = clean.rows();
  a.feature_dim = clean.cols();
  a.sigma2_delta_phi =
      (perturbed - clean).squaredNorm() / static_cast<double>(a.n * a.feature_dim);
  if (!(a.sigma2_delta_phi > 0.0)) {
    throw Error(ErrorKind::DegenerateFeatures, "perturbed features equal clean features");
  }
  const Eigen::MatrixXd centered = clean.rowwise() - clean.colwise().mean();
  // With d >> n the n x n Gram matrix has the same nonzero spectrum and is far cheaper.
  const double denom = static_cast<double>(a.n - 1);
  if (a.feature_dim > a.n) {
    Eigen::MatrixXd gram = centered * centered.transpose() / denom;
    a.spectrum = eigen_spectrum(CovarianceMatrix::from_factored(std::move(gram)));
  } else {
    Eigen::MatrixXd cov = centered.transpose() * centered / denom;
    a.spectrum = eigen_spectrum(CovarianceMatrix::from_factored(std::move(cov)));
  }
  a.bound = pca_channel_bound(a.spectrum, a.sigma2_delta_phi);
  return a;
}

ShiftSignature shift_signature(const EncoderAudit& defended, const EncoderAudit& vanilla,
                               double rel_threshold) {
  if (defended.feature_dim != vanilla.feature_dim) {
    throw Error(ErrorKind::DimMismatch, "audits have different feature dims");
  }
  ShiftSignature s;
  s.delta = defended.bound - vanilla.bound;
  const double rel = vanilla.bound > 0.0 ? std::abs(s.delta) / vanilla.bound
                                         : (s.delta == 0.0 ? 0.0 : INFINITY);
  s.classification = rel > rel_threshold ? ShiftClass::InputSide : ShiftClass::LlmSide;
  return s;
}

DiscreteCheck discrete_inequality(double cap_sc, double rob_disc) {
  if (!(cap_sc >= 0.0) || !(rob_disc >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "discrete terms must be >= 0");
  }
  DiscreteCheck c;
  c.slack = cap_sc - rob_disc;
  c.holds = c.slack >= -1e-9;
  return c;
}

MultistepTotals multistep_accumulate(const std::vector<BoundTerms>& per_step) {
  if (per_step.empty()) throw Error(ErrorKind::InvalidArgument, "need at least one step");
  MultistepTotals m;
  // slack_t sums per-step slacks (same expression as slack()) so that T = 1
  // reproduces the single-step value bit for bit.
  for (const auto& t : per_step) {
    const double rob = t.rob_coupling - t.leak;
    m.lhs_sum += t.cap + rob;
    m.rhs_sum += t.task_entropy + t.channel;
    m.slack_t += t.task_entropy + t.channel - t.cap - rob;
  }
  return m;
}

}  // namespace caprob
