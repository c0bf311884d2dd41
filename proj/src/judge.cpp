#include "rlvr/judge.hpp"

#include <openssl/evp.h>

#include "httplib.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "rlvr/errors.hpp"
#include "rlvr/jsonl.hpp"
#include "rlvr/parser.hpp"
#include "rlvr/reward.hpp"

namespace rlvr::judge {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------
//
// The {image} slots render empty: the image travels as a structured message
// part, not as prompt text.

constexpr std::string_view kDescriptionSystem =
    "You are a helpful assistant that checks correctness, detailness, and completeness of each "
    "sentence in the description to the image. You also check if the description is correct and "
    "provides sufficient information to answer the provided question.";

constexpr std::string_view kDescriptionUser =
    "Given the image, check if the provided description (for each sentence) is correct, "
    "unambiguous and would the description as a whole be sufficient to solve the following "
    "problem even without seeing the image.\n"
    "Problem:{problem}\n"
    "Here is the description for you to check: {description}\n"
    "\n"
    "To check correctness, for each sentence, provide which sentence you are checking in "
    "\\sentence{<SENTENCE>}, your explanation for the score in \\reasoning{<YOUR REASONING>} and "
    "the score in \\score{<SCORE>} for each sentence.\n"
    "Then at the end, if all the sentences are correct, unambiguous, and fully sufficient to "
    "solve the problem, then output the outcome 1 in the \\outcome{<OUTCOME>} format, "
    "\\outcome{1}.\n"
    "Otherwise, output the outcome 0 in the \\outcome{<OUTCOME>} format, \\outcome{0}.\n"
    "\n"
    "Example output format (numbers are placeholders): \\sentence{...}\n"
    "\\reasoning{...}\n"
    "\\score{0}\n"
    "...\n"
    "The description is insufficient to solve the problem, because ... . Thus, the outcome is "
    "\\outcome{0}.";

constexpr std::string_view kThinkSystem =
    "You are a helpful assistant that checks correctness of each logical step in the solution to "
    "a problem. You also check if the step uses correct information from the image.";

constexpr std::string_view kThinkUser =
    "Given the image, check if the provided solution to a problem is correct and does not have "
    "any wrong logical steps or wrong references to the image.\n"
    "Image:{image}\n"
    "\n"
    "Problem:{problem}\n"
    "\n"
    "Ground Truth: {groundtruth}\n"
    "\n"
    "Here is the solution for you to check: {solution}\n"
    "\n"
    "Carefully analyze the solution by breaking down into individual step. For each step in the "
    "solution, if you find a step that is logically wrong or makes an incorrect reference to the "
    "image, please output \\OUTCOME{0}. Otherwise, output \\OUTCOME{1} if all steps are correct.";

constexpr std::string_view kGenerationSystem =
    "Please think step by step and check carefully all details in the image.\n"
    "Before solving the problem, You FIRST think about the description of the image as an "
    "internal monologue and then provide the description. Make sure the description contains "
    "necessary details to answer the given problem.\n"
    "The description process MUST BE enclosed within <description> </description> tags.\n"
    "Then proceed to solving the problem step by step and provide your thought process between "
    "<think> </think> tags. Lastly, provide the summary of your solution between the <answer> "
    "</answer> tags with the key result enclosed within \\boxed{}.";

constexpr std::string_view kGenerationUser =
    "Given a question and an image, please solve the problem.\n"
    "Question: {Question}\n"
    "Image: {Image}\n"
    "\n"
    "The ground truth should be: {groundtruth}.";

constexpr std::string_view kEvalSystem =
    "You are a helpful assistant. Your goal is to extract my answer letter from my response.";

constexpr std::string_view kEvalUser =
    "Given the question problem: {problem}.\n"
    "Z. no previous option matches my response\n"
    "\n"
    "Given my response:\n"
    "<START OF MY RESPONSE>\n"
    "{response}.\n"
    "<END OF MY RESPONSE>\n"
    "\n"
    "Do not solve the problem. First extract the final answer from MY RESPONSE, then write down "
    "explicitly again the above answer choices, and lastly Check which of the options my "
    "response best matches.\n"
    "If MY RESPONSE has not reached a clear conclusion, then choose other option.\n"
    "Ignore the upper and lower cases.\n"
    "Return the final answer and place in \\extracted{}, and the above answer choice in "
    "\\choices{} and the answer letter that best matches my final answer in \\letter{} format.";

// Mock anchors, all substrings of the templates above.
constexpr std::string_view kDescriptionAnchor = "Here is the description for you to check: ";
constexpr std::string_view kDescriptionTail = "\n\nTo check correctness, for each sentence";
constexpr std::string_view kSolutionAnchor = "Here is the solution for you to check: ";
constexpr std::string_view kSolutionTail = "\n\nCarefully analyze the solution";
constexpr std::string_view kResponseStart = "<START OF MY RESPONSE>\n";
constexpr std::string_view kResponseEnd = "\n<END OF MY RESPONSE>";
constexpr std::string_view kProblemAnchor = "Given the question problem: ";
constexpr std::string_view kProblemTail = "\nZ. no previous option matches my response";
constexpr std::string_view kGroundTruthAnchor = "The ground truth should be: ";

std::string fill(std::string_view tmpl, std::initializer_list<std::pair<std::string_view, std::string_view>> slots) {
  std::string out(tmpl);
  for (const auto& [name, value] : slots) {
    const std::string token = "{" + std::string(name) + "}";
    std::size_t pos = 0;
    while ((pos = out.find(token, pos)) != std::string::npos) {
      out.replace(pos, token.size(), value);
      pos += value.size();
    }
  }
  return out;
}

std::string trim_copy(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])) != 0) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])) != 0) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower_copy(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool contains_ci(std::string_view hay, std::string_view needle) {
  return lower_copy(hay).find(lower_copy(needle)) != std::string::npos;
}

// ---------------------------------------------------------------------------
// Macro scanning
// ---------------------------------------------------------------------------

struct MacroHit {
  std::size_t pos = 0;
  std::string content;
};

// Finds \name{...} occurrences with balanced braces; the macro name is
// matched case-insensitively.
std::vector<MacroHit> find_macros(std::string_view text, std::string_view name) {
  std::vector<MacroHit> hits;
  const std::string lower_name = lower_copy(name);
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '\\') {
      ++i;
      continue;
    }
    const std::size_t name_begin = i + 1;
    if (name_begin + lower_name.size() > text.size() ||
        lower_copy(text.substr(name_begin, lower_name.size())) != lower_name) {
      ++i;
      continue;
    }
    std::size_t j = name_begin + lower_name.size();
    if (j >= text.size() || text[j] != '{') {
      ++i;
      continue;
    }
    int depth = 1;
    std::string content;
    ++j;
    for (; j < text.size(); ++j) {
      const char c = text[j];
      if (c == '{') ++depth;
      if (c == '}') {
        --depth;
        if (depth == 0) break;
      }
      content.push_back(c);
    }
    if (depth != 0) {
      ++i;  // unbalanced: not a well-formed occurrence
      continue;
    }
    hits.push_back({i, std::move(content)});
    i = j + 1;
  }
  return hits;
}

std::optional<std::string_view> slot_between(std::string_view text, std::string_view anchor,
                                             std::string_view tail) {
  const std::size_t begin = text.find(anchor);
  if (begin == std::string_view::npos) return std::nullopt;
  const std::size_t content_begin = begin + anchor.size();
  const std::size_t end = tail.empty() ? text.size() : text.rfind(tail);
  if (end == std::string_view::npos || end < content_begin) return std::nullopt;
  return text.substr(content_begin, end - content_begin);
}

// The reply macros use literal braces; echoed content must not break them.
std::string sanitize_braces(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c == '{') c = '(';
    if (c == '}') c = ')';
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::string current;
  for (const char c : text) {
    current.push_back(c);
    if (c == '.' || c == '!' || c == '?') {
      const std::string trimmed = trim_copy(current);
      if (!trimmed.empty()) sentences.push_back(trimmed);
      current.clear();
    }
  }
  const std::string trimmed = trim_copy(current);
  if (!trimmed.empty()) sentences.push_back(trimmed);
  if (sentences.empty()) sentences.push_back(trim_copy(text));
  return sentences;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Messages
// ---------------------------------------------------------------------------

ChatMessage ChatMessage::system_text(std::string text) {
  return {Role::System, {ContentPart::make_text(std::move(text))}};
}

ChatMessage ChatMessage::user_text(std::string text) {
  return {Role::User, {ContentPart::make_text(std::move(text))}};
}

std::string ChatMessage::text() const {
  std::string out;
  for (const auto& part : content)
    if (part.type == ContentPart::Type::Text) out += part.text;
  return out;
}

// ---------------------------------------------------------------------------
// Renderers
// ---------------------------------------------------------------------------

ChatMessages render_description_prompt(std::string_view problem, std::string_view description) {
  if (description.empty()) throw std::invalid_argument("description must be non-empty");
  return {ChatMessage::system_text(std::string(kDescriptionSystem)),
          ChatMessage::user_text(
              fill(kDescriptionUser, {{"problem", problem}, {"description", description}}))};
}

ChatMessages render_think_prompt(std::string_view problem, std::string_view ground_truth,
                                 std::string_view solution) {
  if (solution.empty()) throw std::invalid_argument("solution must be non-empty");
  return {ChatMessage::system_text(std::string(kThinkSystem)),
          ChatMessage::user_text(fill(kThinkUser, {{"image", ""},
                                                   {"problem", problem},
                                                   {"groundtruth", ground_truth},
                                                   {"solution", solution}}))};
}

ChatMessages render_eval_prompt(std::string_view problem_with_choices, std::string_view response) {
  return {ChatMessage::system_text(std::string(kEvalSystem)),
          ChatMessage::user_text(
              fill(kEvalUser, {{"problem", problem_with_choices}, {"response", response}}))};
}

ChatMessages render_generation_prompt(std::string_view question, std::string_view ground_truth) {
  return {ChatMessage::system_text(std::string(kGenerationSystem)),
          ChatMessage::user_text(fill(kGenerationUser, {{"Question", question},
                                                        {"Image", ""},
                                                        {"groundtruth", ground_truth}}))};
}

void attach_image(ChatMessages& messages, const ImageRef& image) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == ChatMessage::Role::User) {
      it->content.push_back(ContentPart::make_image(image));
      return;
    }
  }
  throw std::invalid_argument("no user message to attach the image to");
}

// ---------------------------------------------------------------------------
// Parsers
// ---------------------------------------------------------------------------

std::optional<int> parse_outcome(std::string_view reply) {
  std::optional<int> outcome;
  for (const auto& hit : find_macros(reply, "outcome")) {
    const std::string content = trim_copy(hit.content);
    if (content == "0") outcome = 0;
    if (content == "1") outcome = 1;
  }
  return outcome;
}

std::vector<SentenceReview> parse_sentence_reviews(std::string_view reply) {
  struct Tagged {
    std::size_t pos;
    int kind;  // 0 = sentence, 1 = reasoning, 2 = score
    std::string content;
  };
  std::vector<Tagged> stream;
  for (const auto& hit : find_macros(reply, "sentence")) stream.push_back({hit.pos, 0, hit.content});
  for (const auto& hit : find_macros(reply, "reasoning"))
    stream.push_back({hit.pos, 1, hit.content});
  for (const auto& hit : find_macros(reply, "score")) stream.push_back({hit.pos, 2, hit.content});
  std::sort(stream.begin(), stream.end(),
            [](const Tagged& a, const Tagged& b) { return a.pos < b.pos; });

  std::vector<SentenceReview> reviews;
  std::size_t i = 0;
  while (i < stream.size()) {
    if (i + 2 < stream.size() && stream[i].kind == 0 && stream[i + 1].kind == 1 &&
        stream[i + 2].kind == 2) {
      const std::string score = trim_copy(stream[i + 2].content);
      if (score == "0" || score == "1") {
        reviews.push_back({trim_copy(stream[i].content), trim_copy(stream[i + 1].content),
                           score == "1" ? 1 : 0});
        i += 3;
        continue;
      }
    }
    ++i;  // unmatched fragment
  }
  return reviews;
}

std::optional<LetterExtraction> parse_letter_extraction(std::string_view reply) {
  std::optional<char> letter;
  for (const auto& hit : find_macros(reply, "letter")) {
    const std::string content = trim_copy(hit.content);
    if (content.size() == 1 && std::isalpha(static_cast<unsigned char>(content[0])) != 0)
      letter = static_cast<char>(std::toupper(static_cast<unsigned char>(content[0])));
  }
  if (!letter) return std::nullopt;

  LetterExtraction extraction;
  extraction.letter = *letter;
  const auto extracted = find_macros(reply, "extracted");
  if (!extracted.empty()) extraction.extracted = trim_copy(extracted.back().content);
  return extraction;
}

JudgeVerdict parse_verdict(std::string_view reply) {
  JudgeVerdict verdict;
  verdict.outcome = parse_outcome(reply).value_or(0);
  verdict.sentence_reviews = parse_sentence_reviews(reply);
  verdict.raw = std::string(reply);
  return verdict;
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

json chat_request_json(const std::string& model, const ChatMessages& messages,
                       double temperature) {
  json message_list = json::array();
  for (const auto& message : messages) {
    json parts = json::array();
    for (const auto& part : message.content) {
      if (part.type == ContentPart::Type::Text) {
        parts.push_back({{"type", "text"}, {"text", part.text}});
      } else {
        parts.push_back({{"type", "image"},
                         {"kind", to_string(part.image->kind)},
                         {"image", part.image->value}});
      }
    }
    message_list.push_back(
        {{"role", message.role == ChatMessage::Role::System ? "system" : "user"},
         {"content", parts}});
  }
  return json{{"model", model}, {"messages", message_list}, {"temperature", temperature}};
}

ChatMessages chat_messages_from_json(const json& body) {
  if (!body.is_object() || !body.contains("messages") || !body["messages"].is_array())
    throw MalformedReplyError("chat request lacks a messages array");
  ChatMessages messages;
  for (const auto& m : body["messages"]) {
    if (!m.is_object() || !m.contains("role") || !m.contains("content"))
      throw MalformedReplyError("chat message lacks role or content");
    ChatMessage message;
    message.role =
        m["role"].get<std::string>() == "system" ? ChatMessage::Role::System : ChatMessage::Role::User;
    const auto& content = m["content"];
    if (content.is_string()) {
      message.content.push_back(ContentPart::make_text(content.get<std::string>()));
    } else if (content.is_array()) {
      for (const auto& part : content) {
        if (!part.is_object() || !part.contains("type"))
          throw MalformedReplyError("chat content part lacks a type");
        if (part["type"] == "text") {
          message.content.push_back(ContentPart::make_text(part.value("text", std::string())));
        } else if (part["type"] == "image") {
          ImageRef ref;
          ref.kind = image_kind_from_string(part.value("kind", std::string("url")));
          ref.value = part.value("image", std::string());
          message.content.push_back(ContentPart::make_image(ref));
        } else {
          throw MalformedReplyError("unknown chat content part type");
        }
      }
    } else {
      throw MalformedReplyError("chat message content must be a string or an array");
    }
    messages.push_back(std::move(message));
  }
  return messages;
}

std::string reply_content_from_json(const json& body) {
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() ||
      body["choices"].empty())
    throw MalformedReplyError("chat reply lacks choices");
  const auto& message = body["choices"][0];
  if (!message.is_object() || !message.contains("message") ||
      !message["message"].contains("content"))
    throw MalformedReplyError("chat reply lacks message content");
  const auto& content = message["message"]["content"];
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string out;
    for (const auto& part : content)
      if (part.is_object() && part.value("type", "") == "text")
        out += part.value("text", std::string());
    if (!out.empty()) return out;
  }
  throw MalformedReplyError("chat reply content is not text");
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

JudgeCache::JudgeCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // created on first store
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json entry = json::parse(line, nullptr, false);
    if (entry.is_discarded() || !entry.contains("key") || !entry.contains("reply")) continue;
    entries_[entry["key"].get<std::string>()] = entry["reply"].get<std::string>();
  }
}

std::string JudgeCache::key_for(const std::string& model, double temperature,
                                const ChatMessages& messages) {
  char temp_buf[32];
  const auto result = std::to_chars(temp_buf, temp_buf + sizeof temp_buf, temperature);
  std::string canonical = model;
  canonical += '\n';
  canonical.append(temp_buf, result.ptr);
  canonical += '\n';
  canonical += chat_request_json(model, messages, temperature)["messages"].dump();
  return sha256_hex(canonical);
}

std::optional<std::string> JudgeCache::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void JudgeCache::store(const std::string& key, const std::string& model,
                       const std::string& reply) {
  std::unique_lock lock(mutex_);
  const auto [it, inserted] = entries_.emplace(key, reply);
  if (!inserted) return;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to judge cache " + path_.string());
  const auto now_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
  out << json{{"key", key}, {"model", model}, {"reply", reply}, {"created_unix_ms", now_ms}}.dump()
      << '\n';
}

std::size_t JudgeCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// Mock judge
// ---------------------------------------------------------------------------

MockRuleSet default_mock_rules() {
  MockRuleSet rules;
  rules.description_rules = {{"hallucinated", 0}, {"vague", 0}, {"incorrect", 0}};
  rules.think_rules = {{"hallucinated", 0}, {"wrong step", 0}, {"incorrect", 0}};
  rules.default_outcome = 1;
  return rules;
}

namespace {

int outcome_for(std::string_view slot, const std::vector<OutcomeRule>& rules, int fallback) {
  for (const auto& rule : rules)
    if (contains_ci(slot, rule.keyword)) return rule.outcome;
  return fallback;
}

std::string mock_description_reply(std::string_view description, const MockRuleSet& rules) {
  const int outcome = outcome_for(description, rules.description_rules, rules.default_outcome);
  std::ostringstream reply;
  for (const auto& sentence : split_sentences(description)) {
    const int score = outcome_for(sentence, rules.description_rules, rules.default_outcome);
    reply << "\\sentence{" << sanitize_braces(sentence) << "}\n"
          << "\\reasoning{" << (score == 1 ? "consistent with the image" : "contradicts the image")
          << "}\n"
          << "\\score{" << score << "}\n";
  }
  if (outcome == 1) {
    reply << "The description is sufficient to solve the problem. Thus, the outcome is "
             "\\outcome{1}.";
  } else {
    reply << "The description is insufficient to solve the problem, because at least one sentence "
             "fails the check. Thus, the outcome is \\outcome{0}.";
  }
  return reply.str();
}

std::string mock_think_reply(std::string_view solution, const MockRuleSet& rules) {
  const int outcome = outcome_for(solution, rules.think_rules, rules.default_outcome);
  std::ostringstream reply;
  reply << "Checked each step of the solution against the problem statement. ";
  if (outcome == 1)
    reply << "All steps are correct. \\OUTCOME{1}";
  else
    reply << "A step is logically wrong or misreads the image. \\OUTCOME{0}";
  return reply.str();
}

struct ParsedChoice {
  char letter;
  std::string text;
};

std::vector<ParsedChoice> parse_choices(std::string_view problem) {
  std::vector<ParsedChoice> choices;
  static const std::regex line_pattern(R"(^\s*\(?([A-Z])[\.\)]\s*(.*?)\s*$)");
  std::istringstream in{std::string(problem)};
  std::string line;
  while (std::getline(in, line)) {
    std::smatch match;
    if (std::regex_match(line, match, line_pattern))
      choices.push_back({match[1].str()[0], match[2].str()});
  }
  return choices;
}

std::string mock_eval_reply(std::string_view problem, std::string_view response,
                            const MockRuleSet& rules) {
  // extracted candidate: last \boxed{...} wins, otherwise the response itself
  const BoxedExtraction box = extract_boxed(response);
  const std::string candidate = box.value ? *box.value : trim_copy(response);

  char letter = 'Z';
  for (const auto& rule : rules.letter_rules) {
    if (contains_ci(response, rule.keyword)) {
      letter = rule.letter;
      break;
    }
  }

  const auto choices = parse_choices(problem);
  const AnswerMatchPolicy policy;
  if (letter == 'Z') {
    const std::string normalized = normalize_answer(candidate, policy);
    for (const auto& choice : choices) {
      const std::string label(1, choice.letter);
      if (normalized == normalize_answer(choice.text, policy) ||
          normalized == normalize_answer(label, policy)) {
        letter = choice.letter;
        break;
      }
    }
  }

  std::ostringstream reply;
  reply << "The final answer in the response is \\extracted{" << sanitize_braces(candidate)
        << "}. The answer choices are \\choices{";
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (i > 0) reply << " ";
    reply << choices[i].letter << ". " << sanitize_braces(choices[i].text);
  }
  reply << "}. The option that best matches is \\letter{" << letter << "}.";
  return reply.str();
}

std::string mock_generation_reply(std::string_view ground_truth) {
  const std::string boxed = sanitize_braces(ground_truth);
  std::ostringstream reply;
  reply << "<description>The image shows exactly the quantities and labels needed for this "
           "question.</description>\n"
        << "<think>Reading the relevant values from the image and combining them step by step "
           "leads directly to the result.</think>\n"
        << "<answer>The final result is \\boxed{" << boxed << "}.</answer>";
  return reply.str();
}

}  // namespace

std::string mock_judge(const ChatMessages& messages, const MockRuleSet& rules) {
  std::string user_text;
  for (const auto& message : messages)
    if (message.role == ChatMessage::Role::User) user_text += message.text();

  if (const auto slot = slot_between(user_text, kDescriptionAnchor, kDescriptionTail))
    return mock_description_reply(*slot, rules);
  if (const auto slot = slot_between(user_text, kSolutionAnchor, kSolutionTail))
    return mock_think_reply(*slot, rules);
  if (user_text.find(kResponseStart) != std::string::npos) {
    auto response = slot_between(user_text, kResponseStart, kResponseEnd);
    auto problem = slot_between(user_text, kProblemAnchor, kProblemTail);
    if (response && problem) {
      // the template appends a literal '.' after the response slot
      std::string_view r = *response;
      if (!r.empty() && r.back() == '.') r.remove_suffix(1);
      return mock_eval_reply(*problem, r, rules);
    }
  }
  if (const auto anchor_pos = user_text.find(kGroundTruthAnchor); anchor_pos != std::string::npos) {
    std::string_view gt{user_text};
    gt.remove_prefix(anchor_pos + kGroundTruthAnchor.size());
    if (!gt.empty() && gt.back() == '.') gt.remove_suffix(1);
    return mock_generation_reply(gt);
  }
  throw NoRuleMatchedError("messages match no known prompt family");
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

JudgeClient::JudgeClient(JudgeEndpoint endpoint, std::shared_ptr<JudgeCache> cache)
    : endpoint_(std::move(endpoint)), cache_(std::move(cache)), model_name_(endpoint_.model_name) {
  if (endpoint_.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (endpoint_.temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (!cache_) cache_ = std::make_shared<JudgeCache>();
}

JudgeClient::JudgeClient(MockRuleSet rules, std::shared_ptr<JudgeCache> cache,
                         std::string model_name)
    : mock_rules_(std::move(rules)), cache_(std::move(cache)), model_name_(std::move(model_name)) {
  endpoint_.model_name = model_name_;
  endpoint_.max_in_flight = 1;
  if (!cache_) cache_ = std::make_shared<JudgeCache>();
}

JudgeClient::~JudgeClient() = default;

std::string JudgeClient::call(const ChatMessages& messages) {
  calls_.fetch_add(1);
  const std::string key = JudgeCache::key_for(model_name_, endpoint_.temperature, messages);
  if (auto cached = cache_->lookup(key)) {
    cache_hits_.fetch_add(1);
    return *cached;
  }
  const std::string reply =
      mock_rules_ ? mock_judge(messages, *mock_rules_) : transport(messages);
  cache_->store(key, model_name_, reply);
  return reply;
}

std::string JudgeClient::transport(const ChatMessages& messages) {
  // bound outstanding requests
  struct InFlightSlot {
    JudgeClient& client;
    explicit InFlightSlot(JudgeClient& c) : client(c) {
      std::unique_lock lock(client.in_flight_mutex_);
      client.in_flight_cv_.wait(lock,
                                [&] { return client.in_flight_ < client.endpoint_.max_in_flight; });
      ++client.in_flight_;
    }
    ~InFlightSlot() {
      {
        std::lock_guard lock(client.in_flight_mutex_);
        --client.in_flight_;
      }
      client.in_flight_cv_.notify_one();
    }
  } slot(*this);

  static const std::regex url_pattern(R"(^(https?)://([^/]+)(/.*)?$)");
  std::smatch match;
  if (!std::regex_match(endpoint_.base_url, match, url_pattern))
    throw ConfigError("judge base_url is not a valid http(s) URL: " + endpoint_.base_url);
  const std::string origin = match[1].str() + "://" + match[2].str();
  const std::string path = match[3].length() > 0 ? match[3].str() : "/v1/chat/completions";

  const std::string body =
      chat_request_json(endpoint_.model_name, messages, endpoint_.temperature).dump();

  httplib::Client client(origin);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (endpoint_.api_key && !endpoint_.api_key->empty())
    headers.emplace("Authorization", "Bearer " + *endpoint_.api_key);

  const int attempts = std::max(1, endpoint_.retry.max_attempts);
  std::string last_failure = "no attempt made";
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1 && endpoint_.retry.backoff_base_ms > 0) {
      const auto delay = std::chrono::milliseconds(
          static_cast<long long>(endpoint_.retry.backoff_base_ms) << (attempt - 2));
      std::this_thread::sleep_for(delay);
    }
    network_calls_.fetch_add(1);
    auto result = client.Post(path, headers, body, "application/json");
    if (!result) {
      last_failure = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 200 && result->status < 300) {
      json parsed = json::parse(result->body, nullptr, false);
      if (parsed.is_discarded()) throw MalformedReplyError("judge reply is not JSON");
      return reply_content_from_json(parsed);
    }
    if (result->status >= 500) {
      last_failure = "HTTP " + std::to_string(result->status);
      continue;
    }
    throw TransportExhaustedError("judge endpoint rejected the request with HTTP " +
                                  std::to_string(result->status));
  }
  throw TransportExhaustedError("judge endpoint unavailable after " + std::to_string(attempts) +
                                " attempts (" + last_failure + ")");
}

}  // namespace rlvr::judge
