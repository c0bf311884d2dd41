#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlvr/types.hpp"

// Gateway to the verdict model: prompt rendering, reply parsing, a
// content-addressed reply cache, an HTTP chat-completions client with retry
// and in-flight bounds, and a deterministic mock for tests and offline runs.
//
// Any chat-completions endpoint can serve as the judge, including the policy
// model's own endpoint (self-reward wiring).

namespace rlvr::judge {

// ---------------------------------------------------------------------------
// Wire types
// ---------------------------------------------------------------------------

struct ContentPart {
  enum class Type { Text, Image };
  Type type = Type::Text;
  std::string text;               // Type::Text
  std::optional<ImageRef> image;  // Type::Image

  static ContentPart make_text(std::string t) { return {Type::Text, std::move(t), std::nullopt}; }
  static ContentPart make_image(ImageRef ref) { return {Type::Image, {}, std::move(ref)}; }
};

struct ChatMessage {
  enum class Role { System, User };
  Role role = Role::User;
  std::vector<ContentPart> content;

  static ChatMessage system_text(std::string text);
  static ChatMessage user_text(std::string text);

  // Concatenated text parts.
  std::string text() const;
};

using ChatMessages = std::vector<ChatMessage>;

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_base_ms = 100;
};

struct JudgeEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8080/v1/chat/completions
  std::string model_name;
  std::optional<std::string> api_key;
  double temperature = 0.0;
  int max_in_flight = 4;
  RetryPolicy retry;
};

// ---------------------------------------------------------------------------
// Prompt rendering
// ---------------------------------------------------------------------------
//
// Each renderer returns a system + user message pair with the template slots
// filled. The image itself is not a template slot: callers attach it as a
// structured image part via attach_image (the engine never decodes pixels).

// Description check: is the description faithful and sufficient?
// Throws std::invalid_argument when `description` is empty.
ChatMessages render_description_prompt(std::string_view problem, std::string_view description);

// Solution check: is every logical step of the think trace sound?
// Throws std::invalid_argument when `solution` is empty.
ChatMessages render_think_prompt(std::string_view problem, std::string_view ground_truth,
                                 std::string_view solution);

// Answer-letter extraction for multiple-choice grading. `problem_with_choices`
// carries the question text plus its lettered options.
ChatMessages render_eval_prompt(std::string_view problem_with_choices, std::string_view response);

// Distillation data generation in the structured output format.
ChatMessages render_generation_prompt(std::string_view question, std::string_view ground_truth);

// Appends the image as a content part of the last user message.
void attach_image(ChatMessages& messages, const ImageRef& image);

// ---------------------------------------------------------------------------
// Reply parsing
// ---------------------------------------------------------------------------
//
// Macro names are matched case-insensitively (\outcome vs \OUTCOME) and the
// last well-formed occurrence wins; judges often restate the format before
// concluding. A nullopt result is the ParseError case.

std::optional<int> parse_outcome(std::string_view reply);

std::vector<SentenceReview> parse_sentence_reviews(std::string_view reply);

struct LetterExtraction {
  std::string extracted;  // content of the last \extracted{...}, possibly empty
  char letter = 'Z';      // 'Z' is the no-match sentinel
};
std::optional<LetterExtraction> parse_letter_extraction(std::string_view reply);

// Complete parse of one verdict reply: outcome (0 on a ParseError — the
// conservative mapping), sentence reviews, and the raw text.
JudgeVerdict parse_verdict(std::string_view reply);

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

// JSON body of a chat request; field names are part of the wire contract:
// {model, messages: [{role, content: [{type, ...}]}], temperature}.
nlohmann::json chat_request_json(const std::string& model, const ChatMessages& messages,
                                 double temperature);

// Parses the message list out of a chat request body (the mock endpoint's
// inverse of chat_request_json). Throws MalformedReplyError.
ChatMessages chat_messages_from_json(const nlohmann::json& body);

// Extracts the first choice's message content from a chat reply envelope.
// Throws MalformedReplyError when the envelope lacks message content.
std::string reply_content_from_json(const nlohmann::json& body);

// Content-addressed reply cache persisted as append-only JSONL lines of
// {key, model, reply, created_unix_ms}. Concurrent reads share a lock;
// appends are exclusive. Entries never expire.
class JudgeCache {
 public:
  // In-memory only.
  JudgeCache() = default;
  // Loads existing entries; the file is created on first store.
  explicit JudgeCache(std::filesystem::path path);

  // Cache key: SHA-256 over (model, temperature, canonical messages JSON).
  // Independent of retry counts and timestamps by construction.
  static std::string key_for(const std::string& model, double temperature,
                             const ChatMessages& messages);

  std::optional<std::string> lookup(const std::string& key) const;
  void store(const std::string& key, const std::string& model, const std::string& reply);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Mock judge
// ---------------------------------------------------------------------------

// Keyword rules applied to the filled slot of a rendered prompt (the
// description, solution or response text), case-insensitively. First match
// wins; without a match the default outcome applies.
struct OutcomeRule {
  std::string keyword;
  int outcome = 0;
};

// Forces the extracted letter for eval prompts whose response slot contains
// the keyword.
struct LetterRule {
  std::string keyword;
  char letter = 'Z';
};

struct MockRuleSet {
  std::vector<OutcomeRule> description_rules;
  std::vector<OutcomeRule> think_rules;
  std::vector<LetterRule> letter_rules;
  int default_outcome = 1;
};

// Rules used when no explicit rule set is configured: descriptions or
// solutions mentioning "hallucinated", "vague" or "incorrect" fail, all
// others pass.
MockRuleSet default_mock_rules();

// Deterministic stand-in for a judge endpoint. Classifies the rendered
// template family from its anchors and produces a syntactically valid reply
// for it (one the matching parse_* accepts). Throws NoRuleMatchedError when
// the messages belong to no known family.
std::string mock_judge(const ChatMessages& messages, const MockRuleSet& rules);

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

// judge_call: cache lookup, then transport, then store. The HTTP backend
// POSTs the chat request, retrying transport failures and 5xx responses with
// exponential backoff up to max_attempts, and allows at most max_in_flight
// outstanding requests. The mock backend never touches the network.
class JudgeClient {
 public:
  // HTTP-backed client.
  JudgeClient(JudgeEndpoint endpoint, std::shared_ptr<JudgeCache> cache);
  // Mock-backed client.
  JudgeClient(MockRuleSet rules, std::shared_ptr<JudgeCache> cache,
              std::string model_name = "mock-judge");
  ~JudgeClient();

  JudgeClient(const JudgeClient&) = delete;
  JudgeClient& operator=(const JudgeClient&) = delete;

  // Returns the reply text. Throws TransportExhaustedError after the final
  // retry and MalformedReplyError on an unusable envelope.
  std::string call(const ChatMessages& messages);

  std::uint64_t calls() const { return calls_.load(); }
  std::uint64_t network_calls() const { return network_calls_.load(); }
  std::uint64_t cache_hits() const { return cache_hits_.load(); }
  const std::string& model_name() const { return model_name_; }

 private:
  std::string transport(const ChatMessages& messages);

  JudgeEndpoint endpoint_;
  std::optional<MockRuleSet> mock_rules_;
  std::shared_ptr<JudgeCache> cache_;
  std::string model_name_;

  std::mutex in_flight_mutex_;
  std::condition_variable in_flight_cv_;
  int in_flight_ = 0;

  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> network_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
};

}  // namespace rlvr::judge
