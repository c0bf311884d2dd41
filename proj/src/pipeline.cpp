#include "rlvr/pipeline.hpp"

#include <cctype>
#include <map>
#include <set>

#include "rlvr/errors.hpp"
#include "rlvr/grpo.hpp"
#include "rlvr/jsonl.hpp"
#include "rlvr/parser.hpp"
#include "rlvr/reward.hpp"

namespace rlvr {

namespace {

std::map<std::string, const Task*> index_tasks(const std::vector<Task>& tasks) {
  std::map<std::string, const Task*> by_id;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!by_id.emplace(tasks[i].id, &tasks[i]).second)
      throw SchemaError("tasks[" + std::to_string(i) + "].id: duplicate id '" + tasks[i].id + "'");
  }
  return by_id;
}

const Task& task_for(const std::map<std::string, const Task*>& by_id, const RolloutRecord& rollout,
                     std::size_t index) {
  const auto it = by_id.find(rollout.task_id);
  if (it == by_id.end())
    throw SchemaError("rollouts[" + std::to_string(index) + "].task_id: unknown task '" +
                      rollout.task_id + "'");
  return *it->second;
}

}  // namespace

std::string problem_with_choices(const Task& task) {
  std::string problem = task.question;
  if (task.choices) {
    for (const auto& choice : *task.choices) {
      problem += '\n';
      problem += choice.label + ". " + choice.text;
    }
  }
  return problem;
}

std::optional<char> ground_truth_letter(const Task& task) {
  if (!task.choices) return std::nullopt;
  const AnswerMatchPolicy policy;
  const std::string normalized = normalize_answer(task.ground_truth, policy);
  for (const auto& choice : *task.choices) {
    if (normalized == normalize_answer(choice.label, policy) ||
        normalized == normalize_answer(choice.text, policy))
      return static_cast<char>(std::toupper(static_cast<unsigned char>(choice.label[0])));
  }
  return std::nullopt;
}

std::vector<RolloutRecord> score_batch(const std::vector<Task>& tasks,
                                       std::vector<RolloutRecord> rollouts,
                                       const RewardConfig& config, judge::JudgeClient* judge,
                                       ScoreStats* stats) {
  const auto violations = config.validate();
  if (!violations.empty()) throw ConfigError(violations.front());

  const auto by_id = index_tasks(tasks);
  const bool wants_desc_judge =
      config.uses_description() && config.schema == TagSchema::SeeThinkAnswer;
  const bool wants_eval_judge = config.match.mode == MatchMode::JudgeDelegated;
  if ((wants_desc_judge || wants_eval_judge) && judge == nullptr)
    throw ConfigError("config consults a judge but no judge client was provided");

  // duplicate-sample detection per task
  std::set<std::pair<std::string, int>> seen;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    if (!seen.emplace(rollouts[i].task_id, rollouts[i].sample_index).second)
      throw SchemaError("rollouts[" + std::to_string(i) + "].sample_index: duplicate index " +
                        std::to_string(rollouts[i].sample_index) + " for task '" +
                        rollouts[i].task_id + "'");
  }

  ScoreStats local_stats;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    RolloutRecord& rollout = rollouts[i];
    const Task& task = task_for(by_id, rollout, i);

    const ParseOutcome outcome = parse_structured(rollout.response, config.schema);
    const StructuredOutput* parsed =
        parse_ok(outcome) ? &std::get<StructuredOutput>(outcome) : nullptr;
    if (parsed) rollout.parsed = *parsed;

    VerdictSet verdicts;

    std::optional<int> desc_verdict;
    if (wants_desc_judge && parsed && !parsed->description.empty()) {
      auto messages = judge::render_description_prompt(task.question, parsed->description);
      if (task.image_ref) judge::attach_image(messages, *task.image_ref);
      const std::string reply = judge->call(messages);
      ++local_stats.judge_calls;
      const auto parsed_outcome = judge::parse_outcome(reply);
      if (parsed_outcome) {
        desc_verdict = *parsed_outcome;
        JudgeVerdict verdict;
        verdict.outcome = *parsed_outcome;
        verdict.sentence_reviews = judge::parse_sentence_reviews(reply);
        verdict.raw = reply;
        verdicts.description = std::move(verdict);
      } else {
        // no well-formed verdict: conservative 0, distinguishable from a
        // parsed 0 by the absent description verdict
        desc_verdict = 0;
        ++local_stats.judge_parse_failures;
      }
    }

    std::optional<int> answer_verdict;
    if (wants_eval_judge && task.choices) {
      const std::string_view answer_text = parsed ? parsed->answer : rollout.response;
      auto messages = judge::render_eval_prompt(problem_with_choices(task), answer_text);
      const std::string reply = judge->call(messages);
      ++local_stats.judge_calls;
      const auto extraction = judge::parse_letter_extraction(reply);
      const auto truth = ground_truth_letter(task);
      if (extraction && truth) {
        answer_verdict = (extraction->letter != 'Z' && extraction->letter == *truth) ? 1 : 0;
        JudgeVerdict verdict;
        verdict.outcome = *answer_verdict;
        verdict.raw = reply;
        verdicts.answer_match = std::move(verdict);
      } else {
        answer_verdict = 0;
        ++local_stats.judge_parse_failures;
      }
    }

    rollout.breakdown = score_rollout(rollout, task, config, desc_verdict, answer_verdict);
    if (!verdicts.empty()) rollout.verdicts = std::move(verdicts);
  }

  // group-relative advantages per task
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rollouts.size(); ++i)
    groups[rollouts[i].task_id].push_back(i);
  for (const auto& [task_id, indices] : groups) {
    if (indices.size() < 2)
      throw GroupTooSmallError("task '" + task_id + "' has fewer than 2 rollouts");
    std::vector<double> totals;
    totals.reserve(indices.size());
    for (const std::size_t i : indices) totals.push_back(rollouts[i].breakdown->total);
    const std::vector<double> advantages = group_advantages(totals);
    for (std::size_t j = 0; j < indices.size(); ++j)
      rollouts[indices[j]].advantage = advantages[j];
  }
  local_stats.groups = groups.size();

  if (judge != nullptr) local_stats.judge_network_calls = judge->network_calls();
  if (stats != nullptr) *stats = local_stats;
  return rollouts;
}

std::vector<nlohmann::json> records_to_json(const std::vector<RolloutRecord>& records) {
  std::vector<nlohmann::json> lines;
  lines.reserve(records.size());
  for (const auto& record : records) lines.push_back(rollout_record_to_json(record));
  return lines;
}

AuditResult audit_batch(const std::vector<Task>& tasks, const std::vector<RolloutRecord>& rollouts,
                        const RewardConfig& config, judge::JudgeClient& judge) {
  const auto by_id = index_tasks(tasks);
  AuditResult result;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    const RolloutRecord& rollout = rollouts[i];
    const Task& task = task_for(by_id, rollout, i);

    const ParseOutcome outcome = parse_structured(rollout.response, config.schema);
    if (!parse_ok(outcome)) {
      ++result.unjudged;  // no think trace to audit
      continue;
    }
    const StructuredOutput& parsed = std::get<StructuredOutput>(outcome);
    if (parsed.think.empty()) {
      ++result.unjudged;
      continue;
    }

    const BoxedExtraction box = extract_boxed(parsed.answer);
    const std::string_view predicted = box.value ? *box.value : std::string_view(parsed.answer);
    const int answer_correct = answer_reward(predicted, task.ground_truth, config.match);

    try {
      auto messages = judge::render_think_prompt(task.question, task.ground_truth, parsed.think);
      if (task.image_ref) judge::attach_image(messages, *task.image_ref);
      const std::string reply = judge.call(messages);
      const auto solution = judge::parse_outcome(reply);
      if (!solution) {
        ++result.unjudged;
        continue;
      }
      result.records.push_back({rollout.task_id, answer_correct, *solution});
    } catch (const TransportExhaustedError&) {
      ++result.unjudged;  // partial results, reported by the caller
    }
  }
  return result;
}

}  // namespace rlvr
