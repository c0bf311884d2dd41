#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rlvr/judge.hpp"
#include "rlvr/sim.hpp"
#include "rlvr/types.hpp"

// INI-style configuration: bracketed sections, flat key = value pairs, '#' or
// ';' full-line comments. Unknown sections or keys are rejected with the
// offending section.key path.

namespace rlvr {

struct JudgeSettings {
  std::string base_url;  // empty means "mock only"
  std::string model = "mock-judge";
  std::string api_key_env;
  double temperature = 0.0;
  int max_in_flight = 4;
  int max_attempts = 3;
  int backoff_base_ms = 100;
  std::string cache_path = "judge_cache.jsonl";

  judge::JudgeEndpoint endpoint() const;
};

struct EvalSettings {
  std::vector<int> thresholds = {1, 2, 4, 8};
};

struct ServerSettings {
  std::string bind_addr = "127.0.0.1";
  int port = 8080;
};

struct AppConfig {
  RewardConfig reward;
  JudgeSettings judge;
  sim::SimConfig sim;  // sim.reward mirrors the [reward] section after load
  EvalSettings eval;
  ServerSettings server;
};

// The built-in defaults: conditional hard gate (gamma = 0) with weights
// 0.1/0.9, the full structured schema, numeric answer matching, K = 16,
// lr = 0.05, KL 0.001, entropy 0.001, and the three-strategy model whose
// answer-only optimum is the ungrounded strategy.
AppConfig default_config();

// Loads and validates a config file over the defaults. Throws ConfigError
// naming the offending section.key, and IoError when the file is unreadable.
AppConfig load_config(const std::filesystem::path& path);

// Renders a config back to INI text (the exact format load_config accepts).
std::string to_ini(const AppConfig& config);

}  // namespace rlvr
