#include "rlvr/jsonl.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "rlvr/errors.hpp"

namespace rlvr {

namespace {

// Strict field accessors: every input mistake should name the exact path.

const json& require_field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path + ": expected an object", path);
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "." + key + ": missing", path + "." + key);
  return *it;
}

std::string require_string(const json& j, const char* key, const std::string& path) {
  const json& v = require_field(j, key, path);
  if (!v.is_string()) throw SchemaError(path + "." + key + ": expected a string", path + "." + key);
  return v.get<std::string>();
}

int require_int(const json& j, const char* key, const std::string& path) {
  const json& v = require_field(j, key, path);
  if (!v.is_number_integer())
    throw SchemaError(path + "." + key + ": expected an integer", path + "." + key);
  return v.get<int>();
}

double require_number(const json& j, const char* key, const std::string& path) {
  const json& v = require_field(j, key, path);
  if (!v.is_number()) throw SchemaError(path + "." + key + ": expected a number", path + "." + key);
  return v.get<double>();
}

int bit_from_json(const json& v, const std::string& path) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_number_integer()) {
    const int b = v.get<int>();
    if (b == 0 || b == 1) return b;
  }
  throw SchemaError(path + ": expected a 0/1 bit", path);
}

}  // namespace

// --- enum <-> string ---------------------------------------------------------

std::string to_string(RewardMode mode) {
  return mode == RewardMode::Aggregated ? "aggregated" : "conditional";
}

std::string to_string(TagSchema schema) {
  return schema == TagSchema::SeeThinkAnswer ? "see_think_answer" : "think_answer";
}

std::string to_string(MatchMode mode) {
  switch (mode) {
    case MatchMode::ExactNormalized: return "exact";
    case MatchMode::NumericTolerant: return "numeric";
    case MatchMode::JudgeDelegated: return "judge";
  }
  return "numeric";
}

std::string to_string(ImageRef::Kind kind) {
  switch (kind) {
    case ImageRef::Kind::Path: return "path";
    case ImageRef::Kind::Url: return "url";
    case ImageRef::Kind::Base64: return "base64";
  }
  return "url";
}

RewardMode reward_mode_from_string(const std::string& s) {
  if (s == "aggregated") return RewardMode::Aggregated;
  if (s == "conditional") return RewardMode::Conditional;
  throw SchemaError("unknown reward mode '" + s + "'", "mode");
}

TagSchema tag_schema_from_string(const std::string& s) {
  if (s == "see_think_answer") return TagSchema::SeeThinkAnswer;
  if (s == "think_answer") return TagSchema::ThinkAnswer;
  throw SchemaError("unknown tag schema '" + s + "'", "schema");
}

MatchMode match_mode_from_string(const std::string& s) {
  if (s == "exact") return MatchMode::ExactNormalized;
  if (s == "numeric") return MatchMode::NumericTolerant;
  if (s == "judge") return MatchMode::JudgeDelegated;
  throw SchemaError("unknown match mode '" + s + "'", "match_mode");
}

ImageRef::Kind image_kind_from_string(const std::string& s) {
  if (s == "path") return ImageRef::Kind::Path;
  if (s == "url") return ImageRef::Kind::Url;
  if (s == "base64") return ImageRef::Kind::Base64;
  throw SchemaError("unknown image kind '" + s + "'", "image_ref.kind");
}

// --- type -> json -------------------------------------------------------------

json to_json(const ImageRef& ref) {
  return json{{"kind", to_string(ref.kind)}, {"value", ref.value}};
}

json to_json(const Task& task) {
  json j{{"id", task.id}, {"question", task.question}, {"ground_truth", task.ground_truth}};
  if (task.image_ref) j["image_ref"] = to_json(*task.image_ref);
  if (task.choices) {
    json choices = json::array();
    for (const auto& c : *task.choices) choices.push_back({{"label", c.label}, {"text", c.text}});
    j["choices"] = choices;
  }
  if (task.benchmark) j["benchmark"] = *task.benchmark;
  return j;
}

json to_json(const StructuredOutput& output) {
  return json{{"description", output.description},
              {"think", output.think},
              {"answer", output.answer},
              {"raw", output.raw}};
}

json to_json(const RewardConfig& config) {
  json j{{"mode", to_string(config.mode)},
         {"alpha_fmt", config.alpha_fmt},
         {"alpha_ans", config.alpha_ans},
         {"schema", to_string(config.schema)},
         {"match_mode", to_string(config.match.mode)}};
  if (config.mode == RewardMode::Aggregated) j["alpha_desc"] = config.alpha_desc;
  if (config.mode == RewardMode::Conditional) j["gamma"] = config.gamma;
  return j;
}

json to_json(const SentenceReview& review) {
  return json{{"sentence", review.sentence}, {"reasoning", review.reasoning}, {"score", review.score}};
}

json to_json(const JudgeVerdict& verdict) {
  json reviews = json::array();
  for (const auto& r : verdict.sentence_reviews) reviews.push_back(to_json(r));
  return json{{"outcome", verdict.outcome}, {"sentence_reviews", reviews}, {"raw", verdict.raw}};
}

json to_json(const VerdictSet& verdicts) {
  json j = json::object();
  if (verdicts.description) j["description"] = to_json(*verdicts.description);
  if (verdicts.think) j["think"] = to_json(*verdicts.think);
  if (verdicts.answer_match) j["answer_match"] = to_json(*verdicts.answer_match);
  return j;
}

json rollout_record_to_json(const RolloutRecord& record) {
  json j{{"task_id", record.task_id},
         {"sample_index", record.sample_index},
         {"response", record.response}};
  if (record.breakdown) {
    j["r_fmt"] = record.breakdown->r_fmt;
    j["r_ans"] = record.breakdown->r_ans;
    if (record.breakdown->r_desc) j["r_desc"] = *record.breakdown->r_desc;
    j["total"] = record.breakdown->total;
  }
  if (record.advantage) j["advantage"] = *record.advantage;
  if (record.verdicts && !record.verdicts->empty()) j["verdicts"] = to_json(*record.verdicts);
  return j;
}

// --- json -> type -------------------------------------------------------------

ImageRef image_ref_from_json(const json& j, const std::string& path) {
  ImageRef ref;
  ref.kind = image_kind_from_string(require_string(j, "kind", path));
  ref.value = require_string(j, "value", path);
  return ref;
}

Task task_from_json(const json& j, const std::string& path) {
  Task task;
  task.id = require_string(j, "id", path);
  if (task.id.empty()) throw SchemaError(path + ".id: empty", path + ".id");
  task.question = require_string(j, "question", path);
  task.ground_truth = require_string(j, "ground_truth", path);
  if (j.contains("image_ref")) task.image_ref = image_ref_from_json(j["image_ref"], path + ".image_ref");
  if (j.contains("choices")) {
    const json& choices = j["choices"];
    if (!choices.is_array()) throw SchemaError(path + ".choices: expected an array", path + ".choices");
    std::vector<Choice> out;
    for (std::size_t i = 0; i < choices.size(); ++i) {
      const std::string cpath = path + ".choices[" + std::to_string(i) + "]";
      out.push_back({require_string(choices[i], "label", cpath), require_string(choices[i], "text", cpath)});
    }
    task.choices = std::move(out);
  }
  if (j.contains("benchmark")) {
    if (!j["benchmark"].is_string())
      throw SchemaError(path + ".benchmark: expected a string", path + ".benchmark");
    task.benchmark = j["benchmark"].get<std::string>();
  }
  return task;
}

StructuredOutput structured_output_from_json(const json& j, const std::string& path) {
  StructuredOutput out;
  out.description = require_string(j, "description", path);
  out.think = require_string(j, "think", path);
  out.answer = require_string(j, "answer", path);
  out.raw = require_string(j, "raw", path);
  return out;
}

RewardConfig reward_config_from_json(const json& j, const std::string& path) {
  RewardConfig config;
  config.mode = reward_mode_from_string(require_string(j, "mode", path));
  config.alpha_fmt = require_number(j, "alpha_fmt", path);
  config.alpha_ans = require_number(j, "alpha_ans", path);
  if (config.mode == RewardMode::Aggregated) {
    config.alpha_desc = require_number(j, "alpha_desc", path);
    config.gamma = 0.0;
  } else {
    config.alpha_desc = 0.0;
    config.gamma = require_number(j, "gamma", path);
  }
  if (j.contains("schema")) config.schema = tag_schema_from_string(j["schema"].get<std::string>());
  if (j.contains("match_mode"))
    config.match.mode = match_mode_from_string(j["match_mode"].get<std::string>());
  if (j.contains("numeric_rel_tol")) config.match.numeric_rel_tol = require_number(j, "numeric_rel_tol", path);
  const auto violations = config.validate();
  if (!violations.empty()) throw SchemaError(path + ": " + violations.front(), path);
  return config;
}

JudgeVerdict judge_verdict_from_json(const json& j, const std::string& path) {
  JudgeVerdict verdict;
  verdict.outcome = bit_from_json(require_field(j, "outcome", path), path + ".outcome");
  verdict.raw = require_string(j, "raw", path);
  if (j.contains("sentence_reviews")) {
    const json& reviews = j["sentence_reviews"];
    if (!reviews.is_array())
      throw SchemaError(path + ".sentence_reviews: expected an array", path + ".sentence_reviews");
    for (std::size_t i = 0; i < reviews.size(); ++i) {
      const std::string rpath = path + ".sentence_reviews[" + std::to_string(i) + "]";
      SentenceReview review;
      review.sentence = require_string(reviews[i], "sentence", rpath);
      review.reasoning = require_string(reviews[i], "reasoning", rpath);
      review.score = bit_from_json(require_field(reviews[i], "score", rpath), rpath + ".score");
      verdict.sentence_reviews.push_back(std::move(review));
    }
  }
  return verdict;
}

VerdictSet verdict_set_from_json(const json& j, const std::string& path) {
  VerdictSet set;
  if (!j.is_object()) throw SchemaError(path + ": expected an object", path);
  if (j.contains("description")) set.description = judge_verdict_from_json(j["description"], path + ".description");
  if (j.contains("think")) set.think = judge_verdict_from_json(j["think"], path + ".think");
  if (j.contains("answer_match"))
    set.answer_match = judge_verdict_from_json(j["answer_match"], path + ".answer_match");
  return set;
}

RolloutRecord rollout_record_from_json(const json& j, const std::string& path) {
  RolloutRecord record;
  record.task_id = require_string(j, "task_id", path);
  record.sample_index = require_int(j, "sample_index", path);
  if (record.sample_index < 0)
    throw SchemaError(path + ".sample_index: negative", path + ".sample_index");
  record.response = require_string(j, "response", path);
  if (j.contains("r_fmt") || j.contains("r_ans") || j.contains("total")) {
    RewardBreakdown b;
    b.r_fmt = bit_from_json(require_field(j, "r_fmt", path), path + ".r_fmt");
    b.r_ans = bit_from_json(require_field(j, "r_ans", path), path + ".r_ans");
    if (j.contains("r_desc")) b.r_desc = bit_from_json(j["r_desc"], path + ".r_desc");
    b.total = require_number(j, "total", path);
    record.breakdown = b;
  }
  if (j.contains("advantage")) {
    if (!j["advantage"].is_number())
      throw SchemaError(path + ".advantage: expected a number", path + ".advantage");
    record.advantage = j["advantage"].get<double>();
  }
  if (j.contains("verdicts")) record.verdicts = verdict_set_from_json(j["verdicts"], path + ".verdicts");
  if (j.contains("parsed")) record.parsed = structured_output_from_json(j["parsed"], path + ".parsed");
  return record;
}

// --- JSONL files ---------------------------------------------------------------

std::vector<json> read_jsonl_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<json> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded())
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON line", "",
                        line_no);
    lines.push_back(std::move(parsed));
  }
  return lines;
}

void write_jsonl_file(const std::filesystem::path& path, const std::vector<json>& lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& line : lines) out << line.dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Task> read_tasks_file(const std::filesystem::path& path) {
  std::vector<Task> tasks;
  std::set<std::string> ids;
  const auto lines = read_jsonl_file(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Task task = task_from_json(lines[i], "tasks[" + std::to_string(i) + "]");
    if (!ids.insert(task.id).second)
      throw SchemaError("tasks[" + std::to_string(i) + "].id: duplicate id '" + task.id + "'");
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::vector<RolloutRecord> read_rollouts_file(const std::filesystem::path& path) {
  std::vector<RolloutRecord> rollouts;
  const auto lines = read_jsonl_file(path);
  for (std::size_t i = 0; i < lines.size(); ++i)
    rollouts.push_back(rollout_record_from_json(lines[i], "rollouts[" + std::to_string(i) + "]"));
  return rollouts;
}

}  // namespace rlvr
