#include "rlvr/parser.hpp"

#include <algorithm>
#include <cctype>

#include "rlvr/errors.hpp"

namespace rlvr {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && is_space(s[begin])) ++begin;
  while (end > begin && is_space(s[end - 1])) --end;
  return std::string(s.substr(begin, end - begin));
}

bool whitespace_only(std::string_view s) {
  return std::all_of(s.begin(), s.end(), is_space);
}

std::vector<std::size_t> find_all(std::string_view hay, std::string_view needle) {
  std::vector<std::size_t> hits;
  std::size_t pos = hay.find(needle);
  while (pos != std::string_view::npos) {
    hits.push_back(pos);
    pos = hay.find(needle, pos + 1);
  }
  return hits;
}

struct TagSpan {
  std::size_t open_begin = 0;
  std::size_t open_end = 0;  // one past '>'
  std::size_t close_begin = 0;
  std::size_t close_end = 0;
};

}  // namespace

const std::vector<std::string>& schema_tags(TagSchema schema) {
  static const std::vector<std::string> full{"description", "think", "answer"};
  static const std::vector<std::string> baseline{"think", "answer"};
  return schema == TagSchema::SeeThinkAnswer ? full : baseline;
}

ParseOutcome parse_structured(std::string_view text, TagSchema schema) {
  const auto& tags = schema_tags(schema);
  std::vector<TagSpan> spans(tags.size());

  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string open = "<" + tags[i] + ">";
    const std::string close = "</" + tags[i] + ">";
    const auto opens = find_all(text, open);
    const auto closes = find_all(text, close);
    if (opens.empty())
      return FormatError{FormatViolation::MissingTag, tags[i], "missing tag " + open};
    if (closes.empty())
      return FormatError{FormatViolation::MissingTag, tags[i], "missing closing tag " + close};
    if (opens.size() > 1)
      return FormatError{FormatViolation::DuplicateTag, tags[i], "duplicate tag " + open};
    if (closes.size() > 1)
      return FormatError{FormatViolation::DuplicateTag, tags[i], "duplicate closing tag " + close};
    spans[i] = {opens[0], opens[0] + open.size(), closes[0], closes[0] + close.size()};
    if (spans[i].close_begin < spans[i].open_end)
      return FormatError{FormatViolation::WrongOrder, tags[i],
                         "closing tag " + close + " precedes " + open};
  }

  for (std::size_t i = 1; i < tags.size(); ++i) {
    if (spans[i].open_begin < spans[i - 1].open_begin)
      return FormatError{FormatViolation::WrongOrder, tags[i],
                         "tag <" + tags[i] + "> appears before <" + tags[i - 1] + ">"};
    if (spans[i].open_begin < spans[i - 1].close_end)
      return FormatError{FormatViolation::Interleaved, tags[i],
                         "blocks <" + tags[i - 1] + "> and <" + tags[i] + "> interleave"};
    const std::string_view gap =
        text.substr(spans[i - 1].close_end, spans[i].open_begin - spans[i - 1].close_end);
    if (!whitespace_only(gap))
      return FormatError{FormatViolation::StrayText, "",
                         "non-whitespace text between </" + tags[i - 1] + "> and <" + tags[i] + ">"};
  }

  std::vector<std::string> fields(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i)
    fields[i] = trim(text.substr(spans[i].open_end, spans[i].close_begin - spans[i].open_end));

  StructuredOutput out;
  out.raw = std::string(text);
  if (schema == TagSchema::SeeThinkAnswer) {
    out.description = std::move(fields[0]);
    out.think = std::move(fields[1]);
    out.answer = std::move(fields[2]);
  } else {
    out.think = std::move(fields[0]);
    out.answer = std::move(fields[1]);
  }
  return out;
}

int format_reward(std::string_view text, TagSchema schema) {
  return parse_ok(parse_structured(text, schema)) ? 1 : 0;
}

BoxedExtraction extract_boxed(std::string_view text) {
  constexpr std::string_view kMarker = "\\boxed{";
  const std::size_t start = text.rfind(kMarker);
  if (start == std::string_view::npos) return {};

  int depth = 1;
  std::string content;
  for (std::size_t i = start + kMarker.size(); i < text.size(); ++i) {
    const char c = text[i];
    if (c == '{') {
      ++depth;
    } else if (c == '}') {
      --depth;
      if (depth == 0) return {trim(content), false};
    }
    content.push_back(c);
  }
  return {std::nullopt, true};
}

std::string render_structured(const StructuredOutput& output, TagSchema schema) {
  const auto& tags = schema_tags(schema);
  if (schema == TagSchema::ThinkAnswer && !output.description.empty())
    throw IllegalContentError("description is not representable in the think-answer schema");

  std::vector<const std::string*> fields;
  if (schema == TagSchema::SeeThinkAnswer)
    fields = {&output.description, &output.think, &output.answer};
  else
    fields = {&output.think, &output.answer};

  for (std::size_t i = 0; i < tags.size(); ++i) {
    for (const auto& tag : tags) {
      for (const std::string& delimiter : {"<" + tag + ">", "</" + tag + ">"}) {
        if (fields[i]->find(delimiter) != std::string::npos)
          throw IllegalContentError("field <" + tags[i] + "> embeds the tag delimiter " +
                                    delimiter);
      }
    }
  }

  std::string result;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (i > 0) result += '\n';
    result += "<" + tags[i] + ">" + *fields[i] + "</" + tags[i] + ">";
  }
  return result;
}

}  // namespace rlvr
