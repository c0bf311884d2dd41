#include <algorithm>

#include "doctest.h"
#include "rlvr/jsonl.hpp"
#include "rlvr/types.hpp"
#include "testutil.hpp"

using namespace rlvr;

namespace {

bool has_violation(const std::vector<std::string>& violations, const std::string& needle) {
  return std::any_of(violations.begin(), violations.end(), [&](const std::string& v) {
    return v.find(needle) != std::string::npos;
  });
}

Task make_task(const std::string& id) {
  Task task;
  task.id = id;
  task.question = "What is the total volume of the measuring cup? (Unit: g)";
  task.ground_truth = "1000";
  return task;
}

RolloutRecord make_rollout(const std::string& task_id, int index) {
  RolloutRecord rollout;
  rollout.task_id = task_id;
  rollout.sample_index = index;
  rollout.response = "<description>d</description><think>t</think><answer>\\boxed{1000}</answer>";
  return rollout;
}

}  // namespace

TEST_CASE("validate_group accepts a well-formed K=16 group") {
  Group group;
  group.task = make_task("cup");
  for (int i = 0; i < 16; ++i) group.rollouts.push_back(make_rollout("cup", i));
  CHECK(validate_group(group).empty());
}

TEST_CASE("validate_group rejects K=1") {
  Group group;
  group.task = make_task("cup");
  group.rollouts.push_back(make_rollout("cup", 0));
  CHECK(has_violation(validate_group(group), "group size < 2"));
}

TEST_CASE("validate_group rejects advantages that are not zero-sum") {
  Group group;
  group.task = make_task("cup");
  for (int i = 0; i < 4; ++i) {
    auto rollout = make_rollout("cup", i);
    rollout.advantage = i == 0 ? 0.3 : 0.0;
    group.rollouts.push_back(rollout);
  }
  CHECK(has_violation(validate_group(group), "advantages not zero-sum"));
}

TEST_CASE("validate_group flags duplicate sample indices and foreign task ids") {
  Group group;
  group.task = make_task("cup");
  group.rollouts.push_back(make_rollout("cup", 0));
  group.rollouts.push_back(make_rollout("cup", 0));
  group.rollouts.push_back(make_rollout("other", 1));
  const auto violations = validate_group(group);
  CHECK(has_violation(violations, "sample_index: duplicate"));
  CHECK(has_violation(violations, "task_id: does not match"));
}

TEST_CASE("validate_group checks choice labels") {
  Group group;
  group.task = make_task("mc");
  group.task.choices = std::vector<Choice>{{"A", "yes"}, {"A", "no"}, {"XX", "maybe"}};
  group.rollouts.push_back(make_rollout("mc", 0));
  group.rollouts.push_back(make_rollout("mc", 1));
  const auto violations = validate_group(group);
  CHECK(has_violation(violations, "duplicate label"));
  CHECK(has_violation(violations, "not a single letter"));
}

TEST_CASE("reward config validation") {
  RewardConfig aggregated;
  aggregated.mode = RewardMode::Aggregated;
  aggregated.alpha_fmt = 0.1;
  aggregated.alpha_desc = 0.45;
  aggregated.alpha_ans = 0.45;
  CHECK(aggregated.validate().empty());

  aggregated.alpha_desc = 0.5;
  CHECK(has_violation(aggregated.validate(), "sum to 1"));

  RewardConfig conditional;
  conditional.mode = RewardMode::Conditional;
  conditional.alpha_fmt = 0.1;
  conditional.alpha_ans = 0.9;
  conditional.gamma = 0.5;
  CHECK(conditional.validate().empty());

  conditional.gamma = 1.5;
  CHECK(has_violation(conditional.validate(), "gamma"));
}

namespace {

RolloutRecord random_record(testutil::Rng& rng) {
  RolloutRecord record;
  record.task_id = "task-" + std::to_string(rng.uniform_int(0, 99));
  record.sample_index = rng.uniform_int(0, 31);
  record.response = rng.ascii_text(60);
  if (rng.bit() != 0) {
    RewardBreakdown breakdown;
    breakdown.r_fmt = rng.bit();
    breakdown.r_ans = rng.bit();
    if (rng.bit() != 0) breakdown.r_desc = rng.bit();
    breakdown.total = rng.uniform();
    record.breakdown = breakdown;
  }
  if (rng.bit() != 0) record.advantage = rng.uniform(-1.0, 1.0);
  if (rng.bit() != 0) {
    VerdictSet verdicts;
    JudgeVerdict verdict;
    verdict.outcome = rng.bit();
    verdict.raw = rng.ascii_text(40);
    if (verdict.raw.empty()) verdict.raw = "x";
    const int reviews = rng.uniform_int(0, 2);
    for (int i = 0; i < reviews; ++i)
      verdict.sentence_reviews.push_back({rng.ascii_text(20), rng.ascii_text(20), rng.bit()});
    verdicts.description = verdict;
    if (rng.bit() != 0) verdicts.answer_match = verdict;
    record.verdicts = verdicts;
  }
  if (rng.bit() != 0) {
    StructuredOutput parsed;
    parsed.description = rng.ascii_text(30);
    parsed.think = rng.ascii_text(30);
    parsed.answer = rng.ascii_text(20);
    parsed.raw = record.response;
    record.parsed = parsed;
  }
  return record;
}

Task random_task(testutil::Rng& rng) {
  Task task;
  task.id = "task-" + std::to_string(rng.uniform_int(1, 9999));
  task.question = rng.ascii_text(80);
  task.ground_truth = "gt-" + rng.ascii_text(10);
  if (rng.bit() != 0) {
    ImageRef ref;
    ref.kind = static_cast<ImageRef::Kind>(rng.uniform_int(0, 2));
    ref.value = rng.ascii_text(30);
    task.image_ref = ref;
  }
  if (rng.bit() != 0) {
    std::vector<Choice> choices;
    const int n = rng.uniform_int(2, 5);
    for (int i = 0; i < n; ++i)
      choices.push_back({std::string(1, static_cast<char>('A' + i)), rng.ascii_text(15)});
    task.choices = choices;
  }
  if (rng.bit() != 0) task.benchmark = "bench-" + std::to_string(rng.uniform_int(0, 5));
  return task;
}

}  // namespace

TEST_CASE("JSONL round-trip over 1000 randomized records and tasks") {
  testutil::Rng rng(20240811);
  for (int i = 0; i < 1000; ++i) {
    const RolloutRecord record = random_record(rng);
    const json serialized = rollout_record_to_json(record);
    const RolloutRecord back =
        rollout_record_from_json(json::parse(serialized.dump()), "rollout");
    CHECK(back == record);

    const Task task = random_task(rng);
    const Task task_back = task_from_json(json::parse(to_json(task).dump()), "task");
    CHECK(task_back == task);
  }
}

TEST_CASE("canonical record omits absent optionals") {
  RolloutRecord record;
  record.task_id = "t";
  record.sample_index = 0;
  record.response = "r";
  RewardBreakdown breakdown;
  breakdown.r_fmt = 1;
  breakdown.r_ans = 0;
  breakdown.total = 0.1;
  record.breakdown = breakdown;

  const json j = rollout_record_to_json(record);
  CHECK(j.contains("task_id"));
  CHECK(j.contains("sample_index"));
  CHECK(j.contains("response"));
  CHECK(j.contains("r_fmt"));
  CHECK(j.contains("r_ans"));
  CHECK(j.contains("total"));
  CHECK_FALSE(j.contains("r_desc"));
  CHECK_FALSE(j.contains("advantage"));
  CHECK_FALSE(j.contains("verdicts"));
  for (const auto& [key, value] : j.items()) CHECK_FALSE(value.is_null());
}

TEST_CASE("breakdown total is reproducible bit-for-bit from its components") {
  // recomputing with the same expression and operands must give the stored bits
  RewardConfig config;
  config.mode = RewardMode::Aggregated;
  config.alpha_fmt = 0.1;
  config.alpha_desc = 0.45;
  config.alpha_ans = 0.45;
  testutil::Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const int r_fmt = rng.bit(), r_desc = rng.bit(), r_ans = rng.bit();
    const double total = config.alpha_fmt * r_fmt + config.alpha_desc * r_desc + config.alpha_ans * r_ans;
    const double again = config.alpha_fmt * r_fmt + config.alpha_desc * r_desc + config.alpha_ans * r_ans;
    CHECK(total == again);
  }
}
