#pragma once

#include <Eigen/Core>

#include <vector>

namespace povpool {

/// Per-token log-probabilities of one sequence under one policy.
using TokenLogProbs = Eigen::ArrayXd;

/// One preference pair: policy and frozen-reference log-probs over the
/// preferred and dispreferred outputs.
struct PreferenceRecord {
  TokenLogProbs policy_pos;
  TokenLogProbs policy_neg;
  TokenLogProbs ref_pos;
  TokenLogProbs ref_neg;
  double beta = 0.1;

  void validate() const;
};

/// Sum of per-token log-probabilities.
double seq_loglik(const TokenLogProbs& t);

/// Negative batch mean of sequence log-likelihoods.
double sft_loss(const std::vector<TokenLogProbs>& batch);

/// d sft_loss / d logp: -1/N for every token of every sequence.
std::vector<TokenLogProbs> sft_grad(const std::vector<TokenLogProbs>& batch);

/// (sum policy_pos - sum policy_neg) - (sum ref_pos - sum ref_neg).
double dpo_delta(const PreferenceRecord& rec);

/// max(x, 0) + log1p(exp(-|x|)); overflow-free for any x.
double softplus(double x);

/// Mean of -log sigmoid(beta * delta) per record, via the softplus form.
double dpo_loss(const std::vector<PreferenceRecord>& batch);

/// Gradients of dpo_loss w.r.t. every log-prob entry of one record.
struct DpoRecordGrad {
  TokenLogProbs policy_pos;
  TokenLogProbs policy_neg;
  TokenLogProbs ref_pos;
  TokenLogProbs ref_neg;
};

std::vector<DpoRecordGrad> dpo_grad(const std::vector<PreferenceRecord>& batch);

/// Low-rank adapter update for a frozen d_out x d_in base matrix.
struct LowRankUpdate {
  Eigen::MatrixXd A;  ///< r x d_in
  Eigen::MatrixXd B;  ///< d_out x r
  double alpha = 1.0;
  int r = 1;

  void validate() const;
};

/// (alpha / r) * B * A; rank at most r.
Eigen::MatrixXd lowrank_delta(const LowRankUpdate& u);

/// Singular values above rel_tol of the largest one.
int numeric_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

/// Max relative deviation between the analytic gradient and central finite
/// differences over every log-prob entry. eps must lie in [1e-8, 1e-3].
double grad_check_sft(const std::vector<TokenLogProbs>& batch, double eps);
double grad_check_dpo(const std::vector<PreferenceRecord>& batch, double eps);

}  // namespace povpool
