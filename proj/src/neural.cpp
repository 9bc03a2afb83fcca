#include "caprob/error.h"
#include "caprob/estimators.h"
#include "caprob/rng.h"

#include <algorithm>
#include <cmath>
#include <vector>

namespace caprob {

namespace {

using Eigen::MatrixXf;
using Eigen::VectorXf;

constexpr double kDivergenceLimit = 1e6;

// Column-standardised copy, transposed so each sample is a column.
MatrixXf standardized_columns(const Eigen::MatrixXd& m) {
  MatrixXf out(m.cols(), m.rows());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double mean = m.col(c).mean();
    const double var = (m.col(c).array() - mean).square().mean();
    const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    out.row(c) = ((m.col(c).array() - mean) * inv).cast<float>().transpose();
  }
  return out;
}

MatrixXf gather(const MatrixXf& cols, const std::vector<Eigen::Index>& idx) {
  MatrixXf out(cols.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = cols.col(idx[j]);
  return out;
}

class Mlp {
 public:
  Mlp(int in, int width, int depth, int out, Rng& rng) {
    std::vector<int> dims{in};
    for (int i = 0; i < depth; ++i) dims.push_back(width);
    dims.push_back(out);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      const float bound = 1.0f / std::sqrt(static_cast<float>(dims[l]));
      std::uniform_real_distribution<float> init(-bound, bound);
      MatrixXf w(dims[l + 1], dims[l]);
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = init(rng);
      }
      VectorXf b(dims[l + 1]);
      for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = init(rng);
      w_.push_back(std::move(w));
      b_.push_back(std::move(b));
    }
    for (const auto& w : w_) {
      mw_.push_back(MatrixXf::Zero(w.rows(), w.cols()));
      vw_.push_back(MatrixXf::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : b_) {
      mb_.push_back(VectorXf::Zero(b.size()));
      vb_.push_back(VectorXf::Zero(b.size()));
    }
  }

  // Activations per layer are kept for the backward pass.
  const MatrixXf& forward(const MatrixXf& x) {
    acts_.resize(w_.size() + 1);
    acts_[0] = x;
    for (std::size_t l = 0; l < w_.size(); ++l) {
      acts_[l + 1].noalias() = w_[l] * acts_[l];
      acts_[l + 1].colwise() += b_[l];
      if (l + 1 < w_.size()) acts_[l + 1] = acts_[l + 1].cwiseMax(0.0f);
    }
    return acts_.back();
  }

  MatrixXf eval(const MatrixXf& x) const {
    MatrixXf h = x;
    for (std::size_t l = 0; l < w_.size(); ++l) {
      MatrixXf next = w_[l] * h;
      next.colwise() += b_[l];
      if (l + 1 < w_.size()) next = next.cwiseMax(0.0f);
      h = std::move(next);
    }
    return h;
  }

  // Backprop d(loss)/d(output) through the last forward() and take one Adam step.
  void backward_and_step(MatrixXf grad, double lr) {
    ++t_;
    const float b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
    const float c1 = 1.0f - std::pow(b1, static_cast<float>(t_));
    const float c2 = 1.0f - std::pow(b2, static_cast<float>(t_));
    const float step = static_cast<float>(lr);
    for (std::size_t l = w_.size(); l-- > 0;) {
      const MatrixXf gw = grad * acts_[l].transpose();
      const VectorXf gb = grad.rowwise().sum();
      if (l > 0) {
        MatrixXf back = w_[l].transpose() * grad;
        grad = (acts_[l].array() > 0.0f).select(back, 0.0f);
      }
      mw_[l] = b1 * mw_[l] + (1.0f - b1) * gw;
      vw_[l] = b2 * vw_[l] + (1.0f - b2) * gw.cwiseAbs2();
      w_[l].array() -= step * (mw_[l].array() / c1) / ((vw_[l].array() / c2).sqrt() + eps);
      mb_[l] = b1 * mb_[l] + (1.0f - b1) * gb;
      vb_[l] = b2 * vb_[l] + (1.0f - b2) * gb.cwiseAbs2();
      b_[l].array() -= step * (mb_[l].array() / c1) / ((vb_[l].array() / c2).sqrt() + eps);
    }
  }

 private:
  std::vector<MatrixXf> w_, mw_, vw_;
  std::vector<VectorXf> b_, mb_, vb_;
  std::vector<MatrixXf> acts_;
  long t_ = 0;
};

double log_mean_exp(const Eigen::ArrayXd& t) {
  const double m = t.maxCoeff();
  return m + std::log((t - m).exp().mean());
}

double log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void check_inputs(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
  if (u.rows() != v.rows()) throw Error(ErrorKind::LengthMismatch, "u and v differ in rows");
  if (u.cols() < 1 || v.cols() < 1) throw Error(ErrorKind::ShapeMismatch, "empty sample columns");
  if (!u.allFinite() || !v.allFinite()) throw Error(ErrorKind::NonFinite, "non-finite input sample");
}

std::vector<Eigen::Index> draw_indices(Rng& rng, Eigen::Index n, int count) {
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(count));
  for (auto& i : idx) i = pick(rng);
  return idx;
}

}  // namespace

void CriticConfig::validate() const {
  if (hidden_width < 1 || depth < 1 || epochs < 1 || batch_size < 1 || embedding_dim < 1) {
    throw Error(ErrorKind::InvalidArgument, "critic sizes must be positive");
  }
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be > 0");
  if (!(ema_decay > 0.0 && ema_decay < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "ema_decay must lie in (0, 1)");
  }
}

MIEstimate mine_mi(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v,
                   const CriticConfig& config, std::uint64_t rng_seed) {
  config.validate();
  check_inputs(u, v);
  const Eigen::Index n = u.rows();
  const int bs = config.batch_size;
  if (n < bs) throw Error(ErrorKind::TooFewSamples, "MINE needs n >= batch_size");

  const MatrixXf su = standardized_columns(u);
  const MatrixXf sv = standardized_columns(v);
  const auto p = su.rows(), q = sv.rows();
  Rng rng(rng_seed);
  Mlp critic(static_cast<int>(p + q), config.hidden_width, config.depth, 1, rng);

  MatrixXf input(p + q, 2 * bs);
  double log_ema = 0.0;
  bool ema_ready = false;
  double last_dv = 0.0;
  for (int step = 0; step < config.epochs; ++step) {
    const auto joint = draw_indices(rng, n, bs);
    const auto shuffled = draw_indices(rng, n, bs);
    input.topLeftCorner(p, bs) = gather(su, joint);
    input.bottomLeftCorner(q, bs) = gather(sv, joint);
    input.topRightCorner(p, bs) = gather(su, joint);
    input.bottomRightCorner(q, bs) = gather(sv, shuffled);

    const MatrixXf& out = critic.forward(input);
    const Eigen::ArrayXd tj = out.leftCols(bs).row(0).transpose().cast<double>().array();
    const Eigen::ArrayXd tm = out.rightCols(bs).row(0).transpose().cast<double>().array();
    const double lme = log_mean_exp(tm);
    last_dv = tj.mean() - lme;
    if (!std::isfinite(last_dv) || std::abs(last_dv) > kDivergenceLimit) {
      throw Error(ErrorKind::NonFinite, "MINE training diverged at step " + std::to_string(step));
    }
    log_ema = ema_ready ? log_add_exp(std::log(config.ema_decay) + log_ema,
                                      std::log1p(-config.ema_decay) + lme)
                        : lme;
    ema_ready = true;

    // Loss = -mean(T_joint) + mean(exp(T_marg)) / ema; the EMA is held constant.
    MatrixXf grad(1, 2 * bs);
    for (int j = 0; j < bs; ++j) {
      grad(0, j) = -1.0f / static_cast<float>(bs);
      grad(0, bs + j) = static_cast<float>(std::exp(tm(j) - log_ema) / bs);
    }
    critic.backward_and_step(std::move(grad), config.learning_rate);
  }

  // Final bound on the full sample, chunked to bound memory.
  const auto perm = permutation(rng, n);
  Eigen::ArrayXd tj(n), tm(n);
  const Eigen::Index chunk = 4096;
  for (Eigen::Index s = 0; s < n; s += chunk) {
    const Eigen::Index len = std::min(chunk, n - s);
    MatrixXf block(p + q, 2 * len);
    for (Eigen::Index j = 0; j < len; ++j) {
      block.col(j) << su.col(s + j), sv.col(s + j);
      block.col(len + j) << su.col(s + j), sv.col(perm[static_cast<std::size_t>(s + j)]);
    }
    const MatrixXf out = critic.eval(block);
    tj.segment(s, len) = out.leftCols(len).row(0).transpose().cast<double>().array();
    tm.segment(s, len) = out.rightCols(len).row(0).transpose().cast<double>().array();
  }
  MIEstimate est;
  est.estimator = EstimatorId::Mine;
  est.seed = rng_seed;
  est.value = tj.mean() - log_mean_exp(tm);
  if (!std::isfinite(est.value)) throw Error(ErrorKind::NonFinite, "MINE final estimate not finite");
  est.diagnostics["loss_trace_length"] = config.epochs;
  est.diagnostics["last_batch_bound"] = last_dv;
  return est;
}

MIEstimate infonce_mi(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, int batch_k,
                      const CriticConfig& config, std::uint64_t rng_seed) {
  config.validate();
  check_inputs(u, v);
  const Eigen::Index n = u.rows();
  if (batch_k < 2 || n < batch_k) throw Error(ErrorKind::TooFewSamples, "InfoNCE needs n >= K >= 2");

  const MatrixXf su = standardized_columns(u);
  const MatrixXf sv = standardized_columns(v);
  Rng rng(rng_seed);
  Mlp f(static_cast<int>(su.rows()), config.hidden_width, config.depth, config.embedding_dim, rng);
  Mlp g(static_cast<int>(sv.rows()), config.hidden_width, config.depth, config.embedding_dim, rng);

  const float inv_k = 1.0f / static_cast<float>(batch_k);
  std::vector<Eigen::Index> order;
  std::size_t cursor = 0;
  double last_bound = 0.0;
  for (int step = 0; step < config.epochs; ++step) {
    // Distinct rows per batch: walk a fresh permutation, reshuffling when exhausted.
    if (cursor + static_cast<std::size_t>(batch_k) > order.size()) {
      order = permutation(rng, n);
      cursor = 0;
    }
    std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                  order.begin() + static_cast<std::ptrdiff_t>(cursor + batch_k));
    cursor += static_cast<std::size_t>(batch_k);

    const MatrixXf fe = f.forward(gather(su, idx));
    const MatrixXf ge = g.forward(gather(sv, idx));
    const MatrixXf scores = fe.transpose() * ge;  // K x K, row i = anchor u_i
    MatrixXf dscores(batch_k, batch_k);
    double bound = 0.0;
    for (int i = 0; i < batch_k; ++i) {
      const float m = scores.row(i).maxCoeff();
      const Eigen::RowVectorXf e = (scores.row(i).array() - m).exp().matrix();
      const float z = e.sum();
      bound += static_cast<double>(scores(i, i) - m - std::log(z));
      dscores.row(i) = e / z * inv_k;
      dscores(i, i) -= inv_k;
    }
    last_bound = std::log(static_cast<double>(batch_k)) + bound / batch_k;
    if (!std::isfinite(last_bound)) {
      throw Error(ErrorKind::NonFinite, "InfoNCE training diverged at step " + std::to_string(step));
    }
    f.backward_and_step(ge * dscores.transpose(), config.learning_rate);
    g.backward_and_step(fe * dscores, config.learning_rate);
  }

  // Evaluate over consecutive K-blocks of a fresh permutation; the remainder is dropped.
  const auto perm = permutation(rng, n);
  const Eigen::Index blocks = n / batch_k;
  double acc = 0.0;
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    std::vector<Eigen::Index> idx(perm.begin() + blk * batch_k, perm.begin() + (blk + 1) * batch_k);
    const Eigen::MatrixXd fe = f.eval(gather(su, idx)).cast<double>();
    const Eigen::MatrixXd ge = g.eval(gather(sv, idx)).cast<double>();
    const Eigen::MatrixXd scores = fe.transpose() * ge;
    for (int i = 0; i < batch_k; ++i) {
      const double m = scores.row(i).maxCoeff();
      const double lse = m + std::log((scores.row(i).array() - m).exp().sum());
      acc += std::min(0.0, scores(i, i) - lse);
    }
  }
  const double log_k = std::log(static_cast<double>(batch_k));
  MIEstimate est;
  est.estimator = EstimatorId::InfoNce;
  est.seed = rng_seed;
  est.value = log_k + acc / static_cast<double>(blocks * batch_k);
  if (!std::isfinite(est.value)) throw Error(ErrorKind::NonFinite, "InfoNCE estimate not finite");
  est.diagnostics["loss_trace_length"] = config.epochs;
  est.diagnostics["last_batch_bound"] = last_bound;
  est.diagnostics["saturated"] = est.value > 0.95 * log_k ? 1.0 : 0.0;
  return est;
}

}  // namespace caprob
