#pragma once

// Mutual-information and entropy estimators on sample matrices (rows are
// draws, columns are coordinates). All results in nats.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>

namespace caprob {

enum class EstimatorId { HistogramMM, Ksg, Mine, InfoNce };

std::string to_string(EstimatorId id);
EstimatorId estimator_from_string(const std::string& name);

struct MIEstimate {
  double value = 0.0;
  EstimatorId estimator = EstimatorId::HistogramMM;
  std::map<std::string, double> diagnostics;
  std::uint64_t seed = 0;
};

enum class BinRange { PerSampleMinMax, Fixed };

struct HistogramSpec {
  int bins_k = 16;
  BinRange range = BinRange::PerSampleMinMax;
  double lo = 0.0;  // used when range == Fixed
  double hi = 1.0;
  bool miller_madow = true;
  bool clamp_nonneg = true;
};

struct CriticConfig {
  int hidden_width = 512;
  int depth = 2;
  double learning_rate = 1e-4;
  double ema_decay = 0.999;
  int epochs = 2000;  // optimizer steps, one mini-batch each
  int batch_size = 256;
  int embedding_dim = 32;  // InfoNCE tower output width

  void validate() const;
};

// Each argument is binned on its own range, so u == v gives identical bin
// indices and the self-MI equals the entropy.
MIEstimate histogram_mi_1d(const Eigen::Ref<const Eigen::VectorXd>& u,
                           const Eigen::Ref<const Eigen::VectorXd>& v, const HistogramSpec& spec);

/// Plug-in (optionally Miller-Madow) entropy of one binned coordinate.
double histogram_entropy_1d(const Eigen::Ref<const Eigen::VectorXd>& u, const HistogramSpec& spec);

/// Sum over columns of max(0, histogram_mi_1d(a_i, b_i)).
double perdim_mi(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const HistogramSpec& spec);

double perdim_entropy(const Eigen::MatrixXd& a, const HistogramSpec& spec);

/// Differential entropy estimate: rotate onto the sample principal axes,
/// then sum per-axis histogram entropies plus ln(bin width). Exact in the
/// Gaussian limit; an upper bound otherwise since it drops the residual
/// dependence between rotated axes.
double pca_histogram_entropy(const Eigen::MatrixXd& a, const HistogramSpec& spec);

/// Kraskov algorithm 1, max-norm, strict neighbour counts. Unclamped.
MIEstimate ksg_mi(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, int k = 5);

/// Kozachenko-Leonenko k-NN differential entropy under the max-norm.
double knn_entropy(const Eigen::MatrixXd& a, int k = 5);

MIEstimate mine_mi(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v,
                   const CriticConfig& config, std::uint64_t rng_seed);

/// Separable critic f(u) . g(v); value <= ln(batch_k) by construction.
MIEstimate infonce_mi(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, int batch_k,
                      const CriticConfig& config, std::uint64_t rng_seed);

/// Per action coordinate, histogram MI against the scalar ||delta_row||_inf.
double leak_debit_summary(const Eigen::MatrixXd& a_pi, const Eigen::MatrixXd& delta,
                          const HistogramSpec& spec);

}  // namespace caprob
