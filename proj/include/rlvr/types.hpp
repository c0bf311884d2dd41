#pragma once

#include <optional>
#include <string>
#include <vector>

namespace rlvr {

// ---------------------------------------------------------------------------
// Task
// ---------------------------------------------------------------------------

// Media reference carried alongside a task. The engine treats the value as an
// opaque string; it only ever travels to a judge endpoint, which is the one
// place pixels matter.
struct ImageRef {
  enum class Kind { Path, Url, Base64 };
  Kind kind = Kind::Url;
  std::string value;

  bool operator==(const ImageRef&) const = default;
};

// One labeled option of a multiple-choice task, e.g. {"A", "Rhode Island"}.
struct Choice {
  std::string label;
  std::string text;

  bool operator==(const Choice&) const = default;
};

// One question to be answered, with its ground truth.
struct Task {
  std::string id;
  std::string question;
  std::optional<ImageRef> image_ref;
  std::string ground_truth;
  std::optional<std::vector<Choice>> choices;
  std::optional<std::string> benchmark;

  bool operator==(const Task&) const = default;
};

// ---------------------------------------------------------------------------
// Structured output
// ---------------------------------------------------------------------------

// The parsed <description>/<think>/<answer> triple of one rollout. The three
// content fields hold trimmed tag contents; `raw` preserves the original text
// verbatim. Under the think-answer schema `description` is always empty.
struct StructuredOutput {
  std::string description;
  std::string think;
  std::string answer;
  std::string raw;

  bool operator==(const StructuredOutput&) const = default;

  // Field-wise equality ignoring `raw`; this is the round-trip notion of
  // sameness (re-rendering never reproduces the original surrounding text).
  bool same_fields(const StructuredOutput& other) const {
    return description == other.description && think == other.think && answer == other.answer;
  }
};

// ---------------------------------------------------------------------------
// Reward configuration
// ---------------------------------------------------------------------------

enum class RewardMode { Aggregated, Conditional };
enum class TagSchema { SeeThinkAnswer, ThinkAnswer };
enum class MatchMode { ExactNormalized, NumericTolerant, JudgeDelegated };

// How predicted answers are compared with ground truth.
struct AnswerMatchPolicy {
  MatchMode mode = MatchMode::NumericTolerant;
  double numeric_rel_tol = 1e-6;
  bool case_fold = true;
  bool strip_punctuation = true;

  bool operator==(const AnswerMatchPolicy&) const = default;
};

// Weights, gate and schema that define the total reward.
//
// Aggregated:  total = alpha_fmt*r_fmt + alpha_desc*r_desc + alpha_ans*r_ans
// Conditional: total = alpha_fmt*r_fmt
//                    + alpha_ans*(gamma*r_ans + (1-gamma)*r_ans*r_desc)
//
// gamma = 0 is the hard gate (answer credit requires a verified description),
// gamma = 1 ignores the description entirely, gamma in between interpolates.
struct RewardConfig {
  RewardMode mode = RewardMode::Conditional;
  double alpha_fmt = 0.1;
  double alpha_desc = 0.0;  // Aggregated only
  double alpha_ans = 0.9;
  double gamma = 0.0;  // Conditional only
  TagSchema schema = TagSchema::SeeThinkAnswer;
  AnswerMatchPolicy match;

  // True when the description reward can influence the total, i.e. the
  // formula has a live r_desc term. The gamma = 1 conditional config ignores
  // descriptions even when they are present.
  bool uses_description() const {
    return mode == RewardMode::Aggregated || gamma < 1.0;
  }

  // Returns violated invariants (empty when valid): weight sums must be 1
  // within 1e-9, all weights in [0,1], gamma in [0,1].
  std::vector<std::string> validate() const;
};

// ---------------------------------------------------------------------------
// Per-rollout results
// ---------------------------------------------------------------------------

// Component rewards plus the composed total of one rollout. r_desc is absent
// when no configuration path ever consulted the description judge.
struct RewardBreakdown {
  int r_fmt = 0;
  int r_ans = 0;
  std::optional<int> r_desc;
  double total = 0.0;

  bool operator==(const RewardBreakdown&) const = default;
};

// One per-sentence review inside a judge reply.
struct SentenceReview {
  std::string sentence;
  std::string reasoning;
  int score = 0;

  bool operator==(const SentenceReview&) const = default;
};

// A judge reply reduced to its verdict. `raw` keeps the full reply so audits
// can re-parse without another call.
struct JudgeVerdict {
  int outcome = 0;
  std::vector<SentenceReview> sentence_reviews;
  std::string raw;

  bool operator==(const JudgeVerdict&) const = default;
};

// The verdicts that may accumulate on one rollout.
struct VerdictSet {
  std::optional<JudgeVerdict> description;
  std::optional<JudgeVerdict> think;
  std::optional<JudgeVerdict> answer_match;

  bool empty() const { return !description && !think && !answer_match; }
  bool operator==(const VerdictSet&) const = default;
};

// One sampled response to one task. `parsed`, `breakdown`, `advantage` and
// `verdicts` fill in as the rollout moves through the pipeline.
struct RolloutRecord {
  std::string task_id;
  int sample_index = 0;
  std::string response;
  std::optional<StructuredOutput> parsed;
  std::optional<RewardBreakdown> breakdown;
  std::optional<double> advantage;
  std::optional<VerdictSet> verdicts;

  bool operator==(const RolloutRecord&) const = default;
};

// The K rollouts sampled for one task; the unit advantages are computed over.
struct Group {
  Task task;
  std::vector<RolloutRecord> rollouts;
};

// Checks every structural invariant of a group and returns one message per
// violation, each prefixed with the offending field path. An empty result
// means the group is well formed. Violations are data, not failures.
std::vector<std::string> validate_group(const Group& group);

}  // namespace rlvr
