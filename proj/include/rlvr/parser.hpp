#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rlvr/types.hpp"

// Strict parser and renderer for the structured output grammar:
//
//   <description>c</description> <think>t</think> <answer>a</answer>   (full)
//   <think>t</think> <answer>a</answer>                                (baseline)
//
// Each tag must appear exactly once, in schema order, with nothing but
// whitespace between blocks. Prose before the first opening tag and after the
// last closing tag is tolerated. Tag matching is case-sensitive and
// byte-literal.

namespace rlvr {

enum class FormatViolation { MissingTag, DuplicateTag, WrongOrder, Interleaved, StrayText };

// First violated grammar rule. Not a fault: it simply drives r_fmt = 0.
struct FormatError {
  FormatViolation kind;
  std::string tag;      // offending tag name; empty for stray text
  std::string message;
};

using ParseOutcome = std::variant<StructuredOutput, FormatError>;

inline bool parse_ok(const ParseOutcome& outcome) {
  return std::holds_alternative<StructuredOutput>(outcome);
}

// Tag names in schema order.
const std::vector<std::string>& schema_tags(TagSchema schema);

// Parses `text` against the schema. On success every field holds the trimmed
// inner content of its tag and `raw` preserves the input verbatim; under the
// think-answer schema `description` is empty.
ParseOutcome parse_structured(std::string_view text, TagSchema schema);

// 1 iff parse_structured succeeds.
int format_reward(std::string_view text, TagSchema schema);

struct BoxedExtraction {
  std::optional<std::string> value;  // trimmed content of the last \boxed{...}
  bool unbalanced = false;           // the last \boxed{ never closes
};

// Returns the content of the last \boxed{...} occurrence, brace-balanced and
// whitespace-trimmed. `value` is absent when the text has no \boxed{ at all.
BoxedExtraction extract_boxed(std::string_view text);

// Renders fields into the tag grammar, one block per line, such that
// parse_structured(render_structured(o, s), s) reproduces o's fields for any
// o with trimmed, delimiter-free fields. Throws IllegalContentError when a
// field embeds one of the schema's tag delimiters, or when a non-empty
// description cannot be represented (think-answer schema).
std::string render_structured(const StructuredOutput& output, TagSchema schema);

}  // namespace rlvr
