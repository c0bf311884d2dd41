#include "rlvr/reward.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "rlvr/errors.hpp"
#include "rlvr/judge.hpp"
#include "rlvr/parser.hpp"

namespace rlvr {

namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

void require_bit(int value, const char* name) {
  if (value != 0 && value != 1)
    throw std::invalid_argument(std::string(name) + " must be 0 or 1");
}

void require_valid(const RewardConfig& config, RewardMode expected) {
  if (config.mode != expected)
    throw ConfigError(expected == RewardMode::Aggregated
                          ? "compose_aggregated called with a conditional config"
                          : "compose_conditional called with an aggregated config");
  const auto violations = config.validate();
  if (!violations.empty()) throw ConfigError(violations.front());
}

}  // namespace

std::string normalize_answer(std::string_view text, const AnswerMatchPolicy& policy) {
  std::string kept;
  kept.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (policy.strip_punctuation && is_punct(c)) {
      const bool prev_digit = i > 0 && is_digit(text[i - 1]);
      const bool next_digit = i + 1 < text.size() && is_digit(text[i + 1]);
      if (c == '.' && prev_digit && next_digit) {
        kept.push_back(c);  // decimal point
      } else if ((c == '-' || c == '+') && next_digit) {
        kept.push_back(c);  // numeric sign
      }
      continue;
    }
    kept.push_back(policy.case_fold ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                                    : c);
  }

  // collapse whitespace runs and trim
  std::string out;
  out.reserve(kept.size());
  bool pending_space = false;
  for (const char c : kept) {
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::optional<double> parse_numeric(std::string_view normalized) {
  if (normalized.empty()) return std::nullopt;
  const std::string buffer(normalized);
  char* end = nullptr;
  const double value = std::strtod(buffer.c_str(), &end);
  if (end != buffer.c_str() + buffer.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<char> extract_answer_letter(std::string_view text, const AnswerMatchPolicy& policy) {
  if (auto extraction = judge::parse_letter_extraction(text)) return extraction->letter;
  const std::string normalized = normalize_answer(text, policy);
  if (normalized.size() == 1 && std::isalpha(static_cast<unsigned char>(normalized[0])) != 0)
    return static_cast<char>(std::toupper(static_cast<unsigned char>(normalized[0])));
  return std::nullopt;
}

int answer_reward(std::string_view predicted, std::string_view ground_truth,
                  const AnswerMatchPolicy& policy) {
  if (ground_truth.empty()) throw std::invalid_argument("ground_truth must be non-empty");

  const std::string np = normalize_answer(predicted, policy);
  const std::string ng = normalize_answer(ground_truth, policy);

  switch (policy.mode) {
    case MatchMode::ExactNormalized:
      return np == ng ? 1 : 0;
    case MatchMode::NumericTolerant: {
      if (np == ng) return 1;
      const auto a = parse_numeric(np);
      const auto b = parse_numeric(ng);
      if (a && b) {
        const double scale = std::max(std::abs(*a), std::abs(*b));
        return std::abs(*a - *b) <= policy.numeric_rel_tol * scale ? 1 : 0;
      }
      return 0;
    }
    case MatchMode::JudgeDelegated: {
      const auto pl = extract_answer_letter(predicted, policy);
      const auto gl = extract_answer_letter(ground_truth, policy);
      if (pl && gl) return (*pl != 'Z' && *pl == *gl) ? 1 : 0;
      // not a letter question after all: numeric-tolerant fallback
      AnswerMatchPolicy fallback = policy;
      fallback.mode = MatchMode::NumericTolerant;
      return answer_reward(predicted, ground_truth, fallback);
    }
  }
  return 0;
}

double compose_aggregated(const ComponentRewards& components, const RewardConfig& config) {
  require_valid(config, RewardMode::Aggregated);
  require_bit(components.r_fmt, "r_fmt");
  require_bit(components.r_ans, "r_ans");
  if (!components.r_desc)
    throw MissingDescriptionError("aggregated composition requires r_desc");
  require_bit(*components.r_desc, "r_desc");
  return config.alpha_fmt * components.r_fmt + config.alpha_desc * *components.r_desc +
         config.alpha_ans * components.r_ans;
}

double compose_conditional(const ComponentRewards& components, const RewardConfig& config) {
  require_valid(config, RewardMode::Conditional);
  require_bit(components.r_fmt, "r_fmt");
  require_bit(components.r_ans, "r_ans");
  if (config.gamma == 1.0) {
    // (1-gamma) is exactly zero: r_desc cannot influence the result.
    return config.alpha_fmt * components.r_fmt + config.alpha_ans * components.r_ans;
  }
  if (!components.r_desc)
    throw MissingDescriptionError("conditional composition with gamma < 1 requires r_desc");
  require_bit(*components.r_desc, "r_desc");
  const double gated = config.gamma * components.r_ans +
                       (1.0 - config.gamma) * (components.r_ans * *components.r_desc);
  return config.alpha_fmt * components.r_fmt + config.alpha_ans * gated;
}

double compose_total(const ComponentRewards& components, const RewardConfig& config) {
  return config.mode == RewardMode::Aggregated ? compose_aggregated(components, config)
                                               : compose_conditional(components, config);
}

RewardBreakdown score_rollout(const RolloutRecord& rollout, const Task& task,
                              const RewardConfig& config, std::optional<int> desc_verdict,
                              std::optional<int> answer_verdict) {
  const ParseOutcome outcome = parse_structured(rollout.response, config.schema);
  const StructuredOutput* parsed =
      parse_ok(outcome) ? &std::get<StructuredOutput>(outcome) : nullptr;

  ComponentRewards components;
  components.r_fmt = parsed ? 1 : 0;

  if (answer_verdict) {
    require_bit(*answer_verdict, "answer_verdict");
    components.r_ans = *answer_verdict;
  } else {
    const std::string_view answer_text = parsed ? parsed->answer : rollout.response;
    const BoxedExtraction box = extract_boxed(answer_text);
    const std::string_view predicted = box.value ? *box.value : answer_text;
    components.r_ans = answer_reward(predicted, task.ground_truth, config.match);
  }

  if (config.uses_description()) {
    const bool judgeable = parsed != nullptr && config.schema == TagSchema::SeeThinkAnswer &&
                           !parsed->description.empty();
    if (!judgeable) {
      // No description exists to judge; it cannot be faithful and sufficient.
      components.r_desc = 0;
    } else {
      if (!desc_verdict)
        throw MissingDescriptionError("config consults the description judge but no verdict given");
      require_bit(*desc_verdict, "desc_verdict");
      components.r_desc = *desc_verdict;
    }
  }

  RewardBreakdown breakdown;
  breakdown.r_fmt = components.r_fmt;
  breakdown.r_ans = components.r_ans;
  breakdown.r_desc = components.r_desc;
  breakdown.total = compose_total(components, config);
  return breakdown;
}

}  // namespace rlvr
