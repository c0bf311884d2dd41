#pragma once

#include <span>
#include <vector>

// Group-relative advantage computation and the policy-gradient / KL
// arithmetic the simulator builds on. All functions are pure.

namespace rlvr {

struct AdvantageOptions {
  // The advantage estimate subtracts the group mean and nothing else. Some
  // trainers additionally divide by the group standard deviation; that
  // deviation is available behind this flag, default off.
  bool normalize_by_std = false;
  double std_epsilon = 1e-8;
};

// advantages[k] = rewards[k] - mean(rewards). Zero-sum by construction.
// Throws GroupTooSmallError for fewer than two rewards and
// std::invalid_argument on non-finite rewards.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     const AdvantageOptions& options = {});

// sum_k advantages[k] * log_probs[k] (maximization convention; a trainer
// negates for descent). Throws LengthMismatchError.
double pg_objective(std::span<const double> advantages, std::span<const double> log_probs);

// KL(p || q) = sum_i p_i * ln(p_i / q_i) in nats, with 0*ln 0 = 0.
// Preconditions: equal lengths, entries non-negative, each sums to 1 within
// 1e-9. Throws SupportMismatchError when p_i > 0 while q_i = 0 and
// std::invalid_argument on the other precondition violations.
double categorical_kl(std::span<const double> p, std::span<const double> q);

// H(p) = -sum_i p_i * ln p_i, with 0*ln 0 = 0.
double entropy(std::span<const double> p);

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace rlvr
