#include <cmath>
#include <sstream>

#include "doctest.h"
#include "rlvr/config.hpp"
#include "rlvr/errors.hpp"
#include "rlvr/grpo.hpp"
#include "rlvr/sim.hpp"
#include "testutil.hpp"

using namespace rlvr;
using namespace rlvr::sim;

namespace {

RewardConfig conditional(double gamma) {
  RewardConfig config;
  config.mode = RewardMode::Conditional;
  config.alpha_fmt = 0.1;
  config.alpha_ans = 0.9;
  config.gamma = gamma;
  return config;
}

RewardConfig aggregated() {
  RewardConfig config;
  config.mode = RewardMode::Aggregated;
  config.alpha_fmt = 0.1;
  config.alpha_desc = 0.45;
  config.alpha_ans = 0.45;
  return config;
}

StrategyModel default_model() { return default_config().sim.model; }

}  // namespace

TEST_CASE("sample_group basics") {
  StrategyModel model;
  model.strategies = {{"sure", 1.0, 1.0, 0.0}};
  SimPolicyState state;
  state.logits = {0.0};
  state.reference_probs = {1.0};

  SUBCASE("degenerate policy with certain bits") {
    UniformSource rng(1);
    const auto group = sample_group(state, model, 8, rng);
    REQUIRE(group.size() == 8);
    for (const auto& sample : group) {
      CHECK(sample.strategy == 0);
      CHECK(sample.desc_ok == 1);
      CHECK(sample.answer_ok == 1);
    }
  }

  SUBCASE("same seed reproduces the sample list") {
    StrategyModel noisy;
    noisy.strategies = {{"a", 0.3, 0.7, 0.2}, {"b", 0.8, 0.5, 0.5}};
    SimPolicyState two;
    two.logits = {0.0, 0.3};
    two.reference_probs = softmax(two.logits);
    UniformSource rng1(77), rng2(77);
    const auto g1 = sample_group(two, noisy, 16, rng1);
    const auto g2 = sample_group(two, noisy, 16, rng2);
    REQUIRE(g1.size() == 16);
    for (std::size_t i = 0; i < g1.size(); ++i) {
      CHECK(g1[i].strategy == g2[i].strategy);
      CHECK(g1[i].desc_ok == g2[i].desc_ok);
      CHECK(g1[i].answer_ok == g2[i].answer_ok);
    }
  }

  SUBCASE("K below 2 is rejected") {
    UniformSource rng(1);
    CHECK_THROWS_AS(sample_group(state, model, 1, rng), GroupTooSmallError);
  }
}

TEST_CASE("sim_reward composes with r_fmt = 1") {
  CHECK(sim_reward({0, 0, 1}, conditional(1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sim_reward({0, 0, 1}, conditional(0.0)) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(sim_reward({0, 1, 0}, aggregated()) == doctest::Approx(0.55).epsilon(1e-12));
}

TEST_CASE("expected strategy reward: closed form against the default model") {
  const auto model = default_model();
  const Strategy& grounded = model.strategies[0];
  const Strategy& shortcut = model.strategies[1];

  CHECK(expected_strategy_reward(grounded, conditional(1.0)) ==
        doctest::Approx(0.7975).epsilon(1e-12));
  CHECK(expected_strategy_reward(shortcut, conditional(1.0)) ==
        doctest::Approx(0.82).epsilon(1e-12));
  CHECK(expected_strategy_reward(shortcut, conditional(0.0)) ==
        doctest::Approx(0.208).epsilon(1e-12));
  CHECK(expected_strategy_reward(grounded, conditional(0.0)) ==
        doctest::Approx(0.7885).epsilon(1e-12));
}

TEST_CASE("expected strategy reward agrees with a 1e6-sample Monte Carlo oracle") {
  const auto model = default_model();
  testutil::Rng rng(606);
  for (const auto& config : {conditional(0.0), conditional(0.5), conditional(1.0), aggregated()}) {
    for (const auto& strategy : model.strategies) {
      const int n = 1000000;
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const int d = rng.uniform() < strategy.p_desc_ok ? 1 : 0;
        const double pa = d == 1 ? strategy.p_ans_given_desc_ok : strategy.p_ans_given_desc_bad;
        const int a = rng.uniform() < pa ? 1 : 0;
        sum += sim_reward({0, d, a}, config);
      }
      const double monte_carlo = sum / n;
      CHECK(expected_strategy_reward(strategy, config) ==
            doctest::Approx(monte_carlo).epsilon(5e-3));
    }
  }
}

TEST_CASE("step gradient matches central finite differences at 100 random states") {
  testutil::Rng rng(918273);
  const double h = 1e-5;
  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 5));
    StrategyModel model;
    for (std::size_t s = 0; s < n; ++s)
      model.strategies.push_back({"s" + std::to_string(s), rng.uniform(), rng.uniform(), rng.uniform()});

    std::vector<double> logits(n);
    for (auto& z : logits) z = rng.uniform(-2.0, 2.0);
    const std::vector<double> reference = rng.simplex(n);

    SimPolicyState state;
    state.logits = logits;
    state.reference_probs = reference;

    const RewardConfig config = rng.bit() == 0 ? conditional(rng.uniform()) : aggregated();
    const int k = rng.uniform_int(2, 24);
    UniformSource source(static_cast<std::uint64_t>(iter) * 7919 + 13);
    const auto group = sample_group(state, model, k, source);

    std::vector<double> rewards(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) rewards[i] = sim_reward(group[i], config);
    const auto advantages = group_advantages(rewards);

    const double beta = rng.uniform(0.0, 0.1);
    const double entropy_coeff = rng.uniform(0.0, 0.1);

    const auto analytic =
        step_gradient(logits, group, advantages, reference, beta, entropy_coeff);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> up = logits, down = logits;
      up[i] += h;
      down[i] -= h;
      const double fd = (step_objective(up, group, advantages, reference, beta, entropy_coeff) -
                         step_objective(down, group, advantages, reference, beta, entropy_coeff)) /
                        (2 * h);
      CHECK(std::abs(analytic[i] - fd) < 1e-6);
    }
  }
}

TEST_CASE("uniform rewards with no regularizers leave the logits unchanged") {
  SimConfig config;
  config.reward = conditional(1.0);
  config.model.strategies = {{"always", 1.0, 1.0, 1.0}, {"also", 1.0, 1.0, 1.0}};
  config.beta_kl = 0.0;
  config.entropy_coeff = 0.0;
  config.steps = 5;

  SimPolicyState state;
  state.logits = {0.2, -0.1};
  state.reference_probs = softmax(state.logits);
  UniformSource rng(3);
  const auto before = state.logits;
  sim_train_step(state, config, rng);
  CHECK(state.logits[0] == before[0]);
  CHECK(state.logits[1] == before[1]);
}

TEST_CASE("a huge KL coefficient pins the policy to the reference") {
  SimConfig config;
  config.reward = conditional(1.0);
  config.model = default_model();
  config.beta_kl = 1000.0;
  config.entropy_coeff = 0.0;
  config.steps = 100;
  config.seed = 5;
  config.learning_rate = 0.05;

  const auto report = run_simulation(config);
  const auto& final_probs = report.final_strategy_probs;
  const double uniform = 1.0 / static_cast<double>(final_probs.size());
  double total_variation = 0.0;
  for (const double p : final_probs) total_variation += std::abs(p - uniform);
  total_variation /= 2.0;
  CHECK(total_variation < 0.01);
}

TEST_CASE("run_simulation is deterministic and validates its config") {
  SimConfig config = default_config().sim;
  config.steps = 50;

  const auto a = run_simulation(config);
  const auto b = run_simulation(config);
  REQUIRE(a.trajectory.size() == 50);
  CHECK(a.final_fp_rate == b.final_fp_rate);
  for (std::size_t step = 0; step < a.trajectory.size(); ++step) {
    CHECK(a.trajectory[step].mean_reward == b.trajectory[step].mean_reward);
    CHECK(a.trajectory[step].fp_rate == b.trajectory[step].fp_rate);
    for (std::size_t s = 0; s < a.trajectory[step].strategy_probs.size(); ++s)
      CHECK(a.trajectory[step].strategy_probs[s] == b.trajectory[step].strategy_probs[s]);
  }

  SimConfig zero_steps = config;
  zero_steps.steps = 0;
  CHECK_THROWS_AS(run_simulation(zero_steps), ConfigError);

  SimConfig one_step = config;
  one_step.steps = 1;
  CHECK(run_simulation(one_step).trajectory.size() == 1);

  // strategy probabilities stay a distribution at every step
  for (const auto& metrics : a.trajectory) {
    double sum = 0.0;
    for (const double p : metrics.strategy_probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(metrics.fp_rate >= 0.0);
    CHECK(metrics.fp_rate <= 1.0);
  }
}

TEST_CASE("preference reversal: the expected-reward argmax wins the simulation") {
  testutil::Rng rng(5150);
  int tested = 0;
  while (tested < 8) {
    StrategyModel model;
    for (int s = 0; s < 3; ++s)
      model.strategies.push_back(
          {"s" + std::to_string(s), rng.uniform(), rng.uniform(), rng.uniform()});
    const RewardConfig config =
        rng.bit() == 0 ? conditional(rng.bit() == 0 ? 0.0 : 1.0) : aggregated();

    // filter: a strict argmax by margin >= 0.05
    std::vector<double> expected;
    for (const auto& s : model.strategies)
      expected.push_back(expected_strategy_reward(s, config));
    std::size_t best = 0;
    for (std::size_t i = 1; i < expected.size(); ++i)
      if (expected[i] > expected[best]) best = i;
    double second = -1.0;
    for (std::size_t i = 0; i < expected.size(); ++i)
      if (i != best) second = std::max(second, expected[i]);
    if (expected[best] - second < 0.05) continue;

    SimConfig sim_config;
    sim_config.reward = config;
    sim_config.model = model;
    sim_config.steps = 3000;
    sim_config.seed = 1000 + static_cast<std::uint64_t>(tested);
    const auto report = run_simulation(sim_config);
    CHECK(report.final_strategy_probs[best] > 0.8);
    ++tested;
  }
}

TEST_CASE("trajectory CSV layout") {
  SimConfig config = default_config().sim;
  config.steps = 3;
  const auto report = run_simulation(config);
  std::ostringstream out;
  write_trajectory_csv(out, report);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,mean_reward,fp_rate,p_grounded,p_shortcut,p_guess");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
}
