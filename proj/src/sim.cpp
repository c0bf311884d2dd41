#include "rlvr/sim.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "rlvr/errors.hpp"
#include "rlvr/grpo.hpp"
#include "rlvr/reward.hpp"

namespace rlvr::sim {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void append_number(std::string& out, double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, result.ptr);
}

}  // namespace

std::vector<std::string> StrategyModel::validate() const {
  std::vector<std::string> violations;
  if (strategies.empty()) violations.push_back("strategies: empty");
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    const auto& s = strategies[i];
    const std::string path = "strategies[" + std::to_string(i) + "]";
    if (s.name.empty()) violations.push_back(path + ".name: empty");
    if (!is_probability(s.p_desc_ok)) violations.push_back(path + ".p_desc_ok: outside [0,1]");
    if (!is_probability(s.p_ans_given_desc_ok))
      violations.push_back(path + ".p_ans_given_desc_ok: outside [0,1]");
    if (!is_probability(s.p_ans_given_desc_bad))
      violations.push_back(path + ".p_ans_given_desc_bad: outside [0,1]");
  }
  return violations;
}

std::vector<double> SimPolicyState::probs() const { return softmax(logits); }

std::vector<std::string> SimConfig::validate() const {
  std::vector<std::string> violations = model.validate();
  for (const auto& v : reward.validate()) violations.push_back("reward." + v);
  if (rollouts_per_group < 2) violations.push_back("rollouts_per_group: must be >= 2");
  if (steps < 1) violations.push_back("steps: must be >= 1");
  if (!(learning_rate > 0.0)) violations.push_back("learning_rate: must be > 0");
  if (beta_kl < 0.0) violations.push_back("beta_kl: negative");
  if (entropy_coeff < 0.0) violations.push_back("entropy_coeff: negative");
  return violations;
}

std::vector<SampleOutcome> sample_group(const SimPolicyState& state, const StrategyModel& model,
                                        int k, UniformSource& rng) {
  if (k < 2) throw GroupTooSmallError("group size < 2 (got " + std::to_string(k) + ")");
  const std::vector<double> probs = state.probs();
  std::vector<SampleOutcome> group;
  group.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    SampleOutcome sample;
    // inverse-CDF draw over strategies
    const double u = rng.next();
    double cumulative = 0.0;
    sample.strategy = static_cast<int>(probs.size()) - 1;
    for (std::size_t s = 0; s < probs.size(); ++s) {
      cumulative += probs[s];
      if (u < cumulative) {
        sample.strategy = static_cast<int>(s);
        break;
      }
    }
    const Strategy& strategy = model.strategies[static_cast<std::size_t>(sample.strategy)];
    sample.desc_ok = rng.next() < strategy.p_desc_ok ? 1 : 0;
    const double p_answer =
        sample.desc_ok == 1 ? strategy.p_ans_given_desc_ok : strategy.p_ans_given_desc_bad;
    sample.answer_ok = rng.next() < p_answer ? 1 : 0;
    group.push_back(sample);
  }
  return group;
}

double sim_reward(const SampleOutcome& sample, const RewardConfig& config) {
  ComponentRewards components;
  components.r_fmt = 1;  // format is not what the simulation studies
  components.r_ans = sample.answer_ok;
  components.r_desc = sample.desc_ok;
  return compose_total(components, config);
}

double expected_strategy_reward(const Strategy& strategy, const RewardConfig& config) {
  const double p_answer = strategy.p_answer();
  const double p_answer_and_desc = strategy.p_desc_ok * strategy.p_ans_given_desc_ok;
  if (config.mode == RewardMode::Aggregated) {
    return config.alpha_fmt + config.alpha_desc * strategy.p_desc_ok + config.alpha_ans * p_answer;
  }
  return config.alpha_fmt +
         config.alpha_ans *
             (config.gamma * p_answer + (1.0 - config.gamma) * p_answer_and_desc);
}

double policy_false_positive_rate(std::span<const double> probs, const StrategyModel& model) {
  double p_answer = 0.0;
  double p_answer_not_grounded = 0.0;
  for (std::size_t s = 0; s < probs.size(); ++s) {
    const Strategy& strategy = model.strategies[s];
    p_answer += probs[s] * strategy.p_answer();
    p_answer_not_grounded += probs[s] * (1.0 - strategy.p_desc_ok) * strategy.p_ans_given_desc_bad;
  }
  if (p_answer <= 0.0) return 0.0;
  return p_answer_not_grounded / p_answer;
}

double step_objective(std::span<const double> logits, const std::vector<SampleOutcome>& group,
                      std::span<const double> advantages, std::span<const double> reference_probs,
                      double beta_kl, double entropy_coeff) {
  const std::vector<double> probs = softmax(logits);
  std::vector<double> log_probs(group.size());
  for (std::size_t k = 0; k < group.size(); ++k)
    log_probs[k] = std::log(probs[static_cast<std::size_t>(group[k].strategy)]);
  return pg_objective(advantages, log_probs) - beta_kl * categorical_kl(probs, reference_probs) +
         entropy_coeff * entropy(probs);
}

std::vector<double> step_gradient(std::span<const double> logits,
                                  const std::vector<SampleOutcome>& group,
                                  std::span<const double> advantages,
                                  std::span<const double> reference_probs, double beta_kl,
                                  double entropy_coeff) {
  const std::vector<double> probs = softmax(logits);
  const std::size_t n = probs.size();
  std::vector<double> gradient(n, 0.0);

  // policy-gradient term: d/dz_i sum_k a_k log pi_{s_k} = sum_k a_k (1[s_k=i] - pi_i)
  double advantage_sum = 0.0;
  for (std::size_t k = 0; k < group.size(); ++k) {
    gradient[static_cast<std::size_t>(group[k].strategy)] += advantages[k];
    advantage_sum += advantages[k];
  }
  for (std::size_t i = 0; i < n; ++i) gradient[i] -= probs[i] * advantage_sum;

  // KL term: d/dz_i KL(pi || q) = pi_i (ln(pi_i/q_i) - KL)
  if (beta_kl != 0.0) {
    const double kl = categorical_kl(probs, reference_probs);
    for (std::size_t i = 0; i < n; ++i) {
      const double log_ratio = probs[i] > 0.0 ? std::log(probs[i] / reference_probs[i]) : 0.0;
      gradient[i] -= beta_kl * probs[i] * (log_ratio - kl);
    }
  }

  // entropy term: d/dz_i H(pi) = -pi_i (ln pi_i + H)
  if (entropy_coeff != 0.0) {
    const double h = entropy(probs);
    for (std::size_t i = 0; i < n; ++i) {
      const double log_p = probs[i] > 0.0 ? std::log(probs[i]) : 0.0;
      gradient[i] += entropy_coeff * (-probs[i] * (log_p + h));
    }
  }
  return gradient;
}

StepMetrics sim_train_step(SimPolicyState& state, const SimConfig& config, UniformSource& rng) {
  const std::vector<SampleOutcome> group =
      sample_group(state, config.model, config.rollouts_per_group, rng);

  std::vector<double> rewards(group.size());
  for (std::size_t k = 0; k < group.size(); ++k) rewards[k] = sim_reward(group[k], config.reward);
  const std::vector<double> advantages = group_advantages(rewards);

  const std::vector<double> gradient = step_gradient(
      state.logits, group, advantages, state.reference_probs, config.beta_kl, config.entropy_coeff);
  for (std::size_t i = 0; i < state.logits.size(); ++i)
    state.logits[i] += config.learning_rate * gradient[i];
  ++state.step;

  StepMetrics metrics;
  double reward_sum = 0.0;
  for (const double r : rewards) reward_sum += r;
  metrics.mean_reward = reward_sum / static_cast<double>(rewards.size());
  metrics.strategy_probs = state.probs();
  metrics.fp_rate = policy_false_positive_rate(metrics.strategy_probs, config.model);
  return metrics;
}

SimReport run_simulation(const SimConfig& config) {
  const auto violations = config.validate();
  if (!violations.empty()) throw ConfigError("invalid sim config: " + violations.front());

  SimPolicyState state;
  state.logits.assign(config.model.strategies.size(), 0.0);
  state.reference_probs = softmax(state.logits);

  UniformSource rng(config.seed);
  SimReport report;
  for (const auto& strategy : config.model.strategies) report.strategy_names.push_back(strategy.name);
  report.trajectory.reserve(static_cast<std::size_t>(config.steps));
  for (int step = 0; step < config.steps; ++step)
    report.trajectory.push_back(sim_train_step(state, config, rng));

  report.final_strategy_probs = state.probs();
  report.final_fp_rate = policy_false_positive_rate(report.final_strategy_probs, config.model);
  return report;
}

void write_trajectory_csv(std::ostream& out, const SimReport& report) {
  std::string header = "step,mean_reward,fp_rate";
  for (const auto& name : report.strategy_names) header += ",p_" + name;
  out << header << '\n';
  for (std::size_t step = 0; step < report.trajectory.size(); ++step) {
    const StepMetrics& metrics = report.trajectory[step];
    std::string line = std::to_string(step + 1);
    line += ',';
    append_number(line, metrics.mean_reward);
    line += ',';
    append_number(line, metrics.fp_rate);
    for (const double p : metrics.strategy_probs) {
      line += ',';
      append_number(line, p);
    }
    out << line << '\n';
  }
}

}  // namespace rlvr::sim
