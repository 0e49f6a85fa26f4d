#include "povpool/losses.hpp"

#include "povpool/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>

namespace povpool {

double seq_loglik(const TokenLogProbs& t) {
  if (t.size() == 0) fail(Errc::EmptySequence, "empty log-prob sequence");
  return t.sum();
}

void PreferenceRecord::validate() const {
  if (!(beta > 0.0)) fail(Errc::BadParameter, "beta must be > 0");
  for (const TokenLogProbs* t : {&policy_pos, &policy_neg, &ref_pos, &ref_neg}) {
    if (t->size() == 0) fail(Errc::EmptySequence, "empty log-prob sequence");
  }
}

double sft_loss(const std::vector<TokenLogProbs>& batch) {
  if (batch.empty()) fail(Errc::EmptyBatch, "empty batch");
  double total = 0.0;
  for (const TokenLogProbs& t : batch) total += seq_loglik(t);
  return -total / static_cast<double>(batch.size());
}

std::vector<TokenLogProbs> sft_grad(const std::vector<TokenLogProbs>& batch) {
  if (batch.empty()) fail(Errc::EmptyBatch, "empty batch");
  const double g = -1.0 / static_cast<double>(batch.size());
  std::vector<TokenLogProbs> grads;
  grads.reserve(batch.size());
  for (const TokenLogProbs& t : batch) {
    if (t.size() == 0) fail(Errc::EmptySequence, "empty log-prob sequence");
    grads.push_back(TokenLogProbs::Constant(t.size(), g));
  }
  return grads;
}

double dpo_delta(const PreferenceRecord& rec) {
  return (seq_loglik(rec.policy_pos) - seq_loglik(rec.policy_neg)) -
         (seq_loglik(rec.ref_pos) - seq_loglik(rec.ref_neg));
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

namespace {

double logistic(double x) {
  // Evaluated via exp of the negative magnitude so neither branch overflows.
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double dpo_loss(const std::vector<PreferenceRecord>& batch) {
  if (batch.empty()) fail(Errc::EmptyBatch, "empty batch");
  double total = 0.0;
  for (const PreferenceRecord& rec : batch) {
    rec.validate();
    total += softplus(-rec.beta * dpo_delta(rec));
  }
  return total / static_cast<double>(batch.size());
}

std::vector<DpoRecordGrad> dpo_grad(const std::vector<PreferenceRecord>& batch) {
  if (batch.empty()) fail(Errc::EmptyBatch, "empty batch");
  const double n = static_cast<double>(batch.size());
  std::vector<DpoRecordGrad> grads;
  grads.reserve(batch.size());
  for (const PreferenceRecord& rec : batch) {
    rec.validate();
    // d/dDelta of softplus(-beta*Delta) = -beta * sigmoid(-beta*Delta).
    const double g = rec.beta * logistic(-rec.beta * dpo_delta(rec)) / n;
    DpoRecordGrad grad;
    grad.policy_pos = TokenLogProbs::Constant(rec.policy_pos.size(), -g);
    grad.policy_neg = TokenLogProbs::Constant(rec.policy_neg.size(), g);
    grad.ref_pos = TokenLogProbs::Constant(rec.ref_pos.size(), g);
    grad.ref_neg = TokenLogProbs::Constant(rec.ref_neg.size(), -g);
    grads.push_back(std::move(grad));
  }
  return grads;
}

void LowRankUpdate::validate() const {
  if (r < 1) fail(Errc::ShapeError, "rank must be >= 1");
  if (A.rows() != r || B.cols() != r) {
    fail(Errc::ShapeError, "A must be r x d_in and B d_out x r");
  }
  if (r > std::min(A.cols(), B.rows())) {
    fail(Errc::ShapeError, "rank exceeds min(d_in, d_out)");
  }
}

Eigen::MatrixXd lowrank_delta(const LowRankUpdate& u) {
  u.validate();
  return (u.alpha / static_cast<double>(u.r)) * (u.B * u.A);
}

int numeric_rank(const Eigen::MatrixXd& m, double rel_tol) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  return static_cast<int>((sv.array() > rel_tol * sv(0)).count());
}

namespace {

void require_eps(double eps) {
  if (!(eps >= 1e-8 && eps <= 1e-3)) fail(Errc::BadParameter, "eps must be in [1e-8, 1e-3]");
}

double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
  return std::abs(a - b) / scale;
}

}  // namespace

double grad_check_sft(const std::vector<TokenLogProbs>& batch, double eps) {
  require_eps(eps);
  const std::vector<TokenLogProbs> analytic = sft_grad(batch);
  std::vector<TokenLogProbs> work = batch;
  double worst = 0.0;
  for (std::size_t i = 0; i < work.size(); ++i) {
    for (Eigen::Index j = 0; j < work[i].size(); ++j) {
      const double saved = work[i](j);
      work[i](j) = saved + eps;
      const double up = sft_loss(work);
      work[i](j) = saved - eps;
      const double down = sft_loss(work);
      work[i](j) = saved;
      const double fd = (up - down) / (2.0 * eps);
      worst = std::max(worst, relative_error(fd, analytic[i](j)));
    }
  }
  return worst;
}

double grad_check_dpo(const std::vector<PreferenceRecord>& batch, double eps) {
  require_eps(eps);
  const std::vector<DpoRecordGrad> analytic = dpo_grad(batch);
  std::vector<PreferenceRecord> work = batch;
  double worst = 0.0;
  auto fields = [](PreferenceRecord& rec) {
    return std::array<TokenLogProbs*, 4>{&rec.policy_pos, &rec.policy_neg, &rec.ref_pos,
                                         &rec.ref_neg};
  };
  auto grad_fields = [](const DpoRecordGrad& g) {
    return std::array<const TokenLogProbs*, 4>{&g.policy_pos, &g.policy_neg, &g.ref_pos,
                                               &g.ref_neg};
  };
  for (std::size_t i = 0; i < work.size(); ++i) {
    const auto grads = grad_fields(analytic[i]);
    const auto slots = fields(work[i]);
    for (std::size_t f = 0; f < slots.size(); ++f) {
      TokenLogProbs& vec = *slots[f];
      for (Eigen::Index j = 0; j < vec.size(); ++j) {
        const double saved = vec(j);
        vec(j) = saved + eps;
        const double up = dpo_loss(work);
        vec(j) = saved - eps;
        const double down = dpo_loss(work);
        vec(j) = saved;
        const double fd = (up - down) / (2.0 * eps);
        worst = std::max(worst, relative_error(fd, (*grads[f])(j)));
      }
    }
  }
  return worst;
}

}  // namespace povpool
