#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rlvr/types.hpp"

// Desk-scale policy-gradient simulation over a handful of named response
// strategies. Each rollout collapses to a triple (strategy, D, A): D is the
// groundedness bit (the description would pass the judge) and A the answer
// bit. The simulation shows how the reward composition decides which strategy
// wins: answer-only credit favors high-A strategies regardless of D, the
// description-gated composition does not.

namespace rlvr::sim {

struct Strategy {
  std::string name;
  double p_desc_ok = 0.0;            // P(D = 1)
  double p_ans_given_desc_ok = 0.0;  // P(A = 1 | D = 1)
  double p_ans_given_desc_bad = 0.0; // P(A = 1 | D = 0)

  double p_answer() const {
    return p_desc_ok * p_ans_given_desc_ok + (1.0 - p_desc_ok) * p_ans_given_desc_bad;
  }
};

struct StrategyModel {
  std::vector<Strategy> strategies;
  std::vector<std::string> validate() const;
};

// Categorical policy over strategies plus the frozen reference distribution
// anchoring the KL penalty.
struct SimPolicyState {
  std::vector<double> logits;
  std::vector<double> reference_probs;
  int step = 0;

  std::vector<double> probs() const;
};

struct SimConfig {
  RewardConfig reward;
  StrategyModel model;
  int rollouts_per_group = 16;  // K
  double learning_rate = 0.05;
  double beta_kl = 0.001;
  double entropy_coeff = 0.001;
  int steps = 2000;
  std::uint64_t seed = 7;

  std::vector<std::string> validate() const;
};

struct SampleOutcome {
  int strategy = 0;
  int desc_ok = 0;   // D
  int answer_ok = 0; // A
};

struct StepMetrics {
  double mean_reward = 0.0;
  double fp_rate = 0.0;  // P(D = 0 | A = 1) under the post-step policy
  std::vector<double> strategy_probs;
};

struct SimReport {
  std::vector<std::string> strategy_names;
  std::vector<StepMetrics> trajectory;
  double final_fp_rate = 0.0;
  std::vector<double> final_strategy_probs;
};

// Deterministic uniform stream with a fixed mapping from mt19937_64 output to
// [0,1); identical seeds reproduce identical draws on every platform.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : generator_(seed) {}
  double next() { return static_cast<double>(generator_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 generator_;
};

// K i.i.d. draws: strategy ~ softmax(logits), D ~ Bernoulli(p_desc_ok),
// A ~ Bernoulli(p_ans_given_desc_*). Deterministic given the rng state.
std::vector<SampleOutcome> sample_group(const SimPolicyState& state, const StrategyModel& model,
                                        int k, UniformSource& rng);

// Reward of one simulated rollout: r_fmt = 1, r_desc = D, r_ans = A, composed
// under `config`.
double sim_reward(const SampleOutcome& sample, const RewardConfig& config);

// Exact expectation of sim_reward over the two Bernoullis of one strategy.
double expected_strategy_reward(const Strategy& strategy, const RewardConfig& config);

// Exact P(D = 0 | A = 1) under the mixture `probs` over strategies; 0 when
// P(A = 1) = 0.
double policy_false_positive_rate(std::span<const double> probs, const StrategyModel& model);

// The per-step objective at a fixed sampled group:
//   J(z) = sum_k a_k log pi_{s_k}(z) - beta KL(pi(z) || ref) + c H(pi(z)).
// Advantages and strategy indices are data, not functions of z.
double step_objective(std::span<const double> logits, const std::vector<SampleOutcome>& group,
                      std::span<const double> advantages, std::span<const double> reference_probs,
                      double beta_kl, double entropy_coeff);

// Analytic gradient of step_objective with respect to the logits.
std::vector<double> step_gradient(std::span<const double> logits,
                                  const std::vector<SampleOutcome>& group,
                                  std::span<const double> advantages,
                                  std::span<const double> reference_probs, double beta_kl,
                                  double entropy_coeff);

// One plain gradient-ascent step on the logits: sample a group, score it,
// compute group-relative advantages, ascend. Returns the step's metrics.
StepMetrics sim_train_step(SimPolicyState& state, const SimConfig& config, UniformSource& rng);

// Runs config.steps training steps from a uniform policy (which is also the
// frozen reference). Deterministic given config.seed. Throws ConfigError on
// an invalid config.
SimReport run_simulation(const SimConfig& config);

// CSV with columns: step, mean_reward, fp_rate, then one probability column
// per strategy.
void write_trajectory_csv(std::ostream& out, const SimReport& report);

}  // namespace rlvr::sim
