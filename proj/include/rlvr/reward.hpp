#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "rlvr/types.hpp"

// Answer matching and reward composition.
//
// Every component reward is a 0/1 indicator; totals are their weighted
// composition and always land in [0,1] for a valid config.

namespace rlvr {

// Lowercases (when case_fold), collapses whitespace runs to single spaces,
// trims, and strips punctuation (when strip_punctuation). Characters that
// carry numeric meaning survive the strip: '.' between digits, and '-'/'+'
// immediately before a digit.
std::string normalize_answer(std::string_view text, const AnswerMatchPolicy& policy);

// Attempts to read the whole normalized string as a number.
std::optional<double> parse_numeric(std::string_view normalized);

// Reduces a text to a single answer letter when it plausibly is one: a judge
// reply carrying \letter{X}, or a token that normalizes to one alphabetic
// character ("A", "(a)", "B."). 'Z' is the no-match sentinel and never
// compares equal.
std::optional<char> extract_answer_letter(std::string_view text, const AnswerMatchPolicy& policy);

// 1 iff `predicted` matches `ground_truth` under the policy.
//   ExactNormalized  compares normalized strings.
//   NumericTolerant  additionally parses both sides as numbers and compares
//                    with relative tolerance; unparseable values fall back to
//                    the string comparison.
//   JudgeDelegated   compares extracted answer letters; when either side has
//                    no letter the question is not letter-shaped and the
//                    numeric-tolerant comparison applies instead.
// Throws std::invalid_argument when ground_truth is empty.
int answer_reward(std::string_view predicted, std::string_view ground_truth,
                  const AnswerMatchPolicy& policy);

// The component rewards feeding a composition.
struct ComponentRewards {
  int r_fmt = 0;
  int r_ans = 0;
  std::optional<int> r_desc;
};

// alpha_fmt*r_fmt + alpha_desc*r_desc + alpha_ans*r_ans.
// Throws ConfigError when the config is not a valid Aggregated config and
// MissingDescriptionError when r_desc is absent.
double compose_aggregated(const ComponentRewards& components, const RewardConfig& config);

// alpha_fmt*r_fmt + alpha_ans*(gamma*r_ans + (1-gamma)*r_ans*r_desc).
// At gamma = 1 the result is independent of r_desc (which may be absent); at
// gamma < 1 an absent r_desc throws MissingDescriptionError.
double compose_conditional(const ComponentRewards& components, const RewardConfig& config);

// Dispatches on config.mode.
double compose_total(const ComponentRewards& components, const RewardConfig& config);

// Scores one rollout end to end:
//   r_fmt   from the structured parser under config.schema;
//   r_ans   from answer_reward on the boxed extraction of the parsed answer
//           (falling back to the full answer text; on parse failure the raw
//           response is searched for a box instead);
//   r_desc  desc_verdict when the config consults the description judge and a
//           judgeable description exists; forced to 0 when the rollout has no
//           description to judge (parse failure, think-answer schema, or an
//           empty description field); absent when the config never consults.
// answer_verdict, when provided, overrides the computed r_ans — it carries a
// judge-delegated letter match decided by the caller.
RewardBreakdown score_rollout(const RolloutRecord& rollout, const Task& task,
                              const RewardConfig& config, std::optional<int> desc_verdict,
                              std::optional<int> answer_verdict = std::nullopt);

}  // namespace rlvr
