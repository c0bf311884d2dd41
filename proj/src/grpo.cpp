#include "rlvr/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rlvr/errors.hpp"

namespace rlvr {

std::vector<double> group_advantages(std::span<const double> rewards,
                                     const AdvantageOptions& options) {
  const std::size_t k = rewards.size();
  if (k < 2) throw GroupTooSmallError("group size < 2 (got " + std::to_string(k) + ")");
  for (const double r : rewards)
    if (!std::isfinite(r)) throw std::invalid_argument("rewards must be finite");

  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(k);
  std::vector<double> advantages(k);
  for (std::size_t i = 0; i < k; ++i) advantages[i] = rewards[i] - mean;

  if (options.normalize_by_std) {
    double variance = 0.0;
    for (const double a : advantages) variance += a * a;
    variance /= static_cast<double>(k);
    const double scale = std::sqrt(variance) + options.std_epsilon;
    for (double& a : advantages) a /= scale;
  }
  return advantages;
}

double pg_objective(std::span<const double> advantages, std::span<const double> log_probs) {
  if (advantages.size() != log_probs.size())
    throw LengthMismatchError("advantages and log_probs differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < advantages.size(); ++i) sum += advantages[i] * log_probs[i];
  return sum;
}

namespace {

void check_distribution(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (const double v : p) {
    if (!(v >= 0.0)) throw std::invalid_argument(std::string(name) + " has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(name) + " does not sum to 1");
}

}  // namespace

double categorical_kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw LengthMismatchError("p and q differ in length");
  check_distribution(p, "p");
  check_distribution(q, "q");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;  // 0 * ln 0 = 0
    if (q[i] == 0.0)
      throw SupportMismatchError("p has mass where q is zero (index " + std::to_string(i) + ")");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(0.0, kl);
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (const double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> probs(logits.size());
  if (logits.empty()) return probs;
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - max_logit);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

}  // namespace rlvr
