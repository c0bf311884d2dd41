#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlvr/types.hpp"

// JSON forms of the domain types plus JSONL file helpers.
//
// Field names are part of the external contract and must not drift:
// a scored rollout serializes to exactly
//   {task_id, sample_index, response, r_fmt, r_ans, r_desc, total,
//    advantage, verdicts}
// with absent optionals omitted, never null.

namespace rlvr {

using nlohmann::json;

// --- enum <-> string ---------------------------------------------------------

std::string to_string(RewardMode mode);
std::string to_string(TagSchema schema);
std::string to_string(MatchMode mode);
std::string to_string(ImageRef::Kind kind);

RewardMode reward_mode_from_string(const std::string& s);
TagSchema tag_schema_from_string(const std::string& s);
MatchMode match_mode_from_string(const std::string& s);
ImageRef::Kind image_kind_from_string(const std::string& s);

// --- type -> json -------------------------------------------------------------

json to_json(const ImageRef& ref);
json to_json(const Task& task);
json to_json(const StructuredOutput& output);
json to_json(const RewardConfig& config);
json to_json(const SentenceReview& review);
json to_json(const JudgeVerdict& verdict);
json to_json(const VerdictSet& verdicts);

// The canonical per-rollout record described above. Only fields that have
// been computed appear.
json rollout_record_to_json(const RolloutRecord& record);

// --- json -> type -------------------------------------------------------------
//
// These throw SchemaError naming the offending field. Unknown extra fields in
// input records are tolerated; required fields are type-checked strictly.

ImageRef image_ref_from_json(const json& j, const std::string& path = "image_ref");
Task task_from_json(const json& j, const std::string& path = "task");
StructuredOutput structured_output_from_json(const json& j, const std::string& path = "parsed");
RewardConfig reward_config_from_json(const json& j, const std::string& path = "reward");
JudgeVerdict judge_verdict_from_json(const json& j, const std::string& path = "verdict");
VerdictSet verdict_set_from_json(const json& j, const std::string& path = "verdicts");
RolloutRecord rollout_record_from_json(const json& j, const std::string& path = "rollout");

// --- JSONL files ---------------------------------------------------------------

// Parses one JSON object per non-empty line. Throws IoError when the file
// cannot be read and SchemaError (with the 1-based line number) on the first
// malformed line.
std::vector<json> read_jsonl_file(const std::filesystem::path& path);

// Writes one compact JSON document per line. Throws IoError.
void write_jsonl_file(const std::filesystem::path& path, const std::vector<json>& lines);

std::vector<Task> read_tasks_file(const std::filesystem::path& path);
std::vector<RolloutRecord> read_rollouts_file(const std::filesystem::path& path);

}  // namespace rlvr
