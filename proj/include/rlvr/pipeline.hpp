#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlvr/eval.hpp"
#include "rlvr/judge.hpp"
#include "rlvr/types.hpp"

// Batch scoring and auditing over (tasks, rollouts) inputs. The CLI commands
// and the HTTP service both call straight into these functions, which is what
// makes their outputs byte-equivalent.

namespace rlvr {

struct ScoreStats {
  std::uint64_t judge_calls = 0;
  std::uint64_t judge_network_calls = 0;
  std::uint64_t judge_parse_failures = 0;  // replies with no well-formed verdict, scored 0
  std::size_t groups = 0;
};

// Scores every rollout under `config`, then assigns group-relative advantages
// per task_id. Records come back in input order. `judge` may be null only
// when the config consults no judge (gamma = 1 conditional without
// judge-delegated matching). Throws SchemaError on unknown task ids or
// duplicate sample indices and GroupTooSmallError when a task has fewer than
// two rollouts.
std::vector<RolloutRecord> score_batch(const std::vector<Task>& tasks,
                                       std::vector<RolloutRecord> rollouts,
                                       const RewardConfig& config, judge::JudgeClient* judge,
                                       ScoreStats* stats = nullptr);

// Serializes scored records as canonical JSONL lines.
std::vector<nlohmann::json> records_to_json(const std::vector<RolloutRecord>& records);

struct AuditResult {
  std::vector<eval::AuditRecord> records;
  std::size_t unjudged = 0;  // rollouts skipped: unparseable output or judge failure
};

// Judges the think trace of every parseable rollout against the task's image,
// question and ground truth, and pairs the verdict with answer correctness.
// Judge failures degrade to partial results (counted, not fatal).
AuditResult audit_batch(const std::vector<Task>& tasks, const std::vector<RolloutRecord>& rollouts,
                        const RewardConfig& config, judge::JudgeClient& judge);

// `question + "\n" + one "L. text" line per choice` — the problem text the
// eval prompt embeds.
std::string problem_with_choices(const Task& task);

// The ground-truth answer letter of a multiple-choice task: the ground truth
// is either a bare letter or equal to one of the choice texts.
std::optional<char> ground_truth_letter(const Task& task);

}  // namespace rlvr
