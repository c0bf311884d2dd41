#include "rlvr/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "rlvr/errors.hpp"
#include "rlvr/jsonl.hpp"

namespace rlvr {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])) != 0) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])) != 0) --e;
  return std::string(s.substr(b, e - b));
}

double parse_double(const std::string& value, const std::string& path) {
  try {
    std::size_t consumed = 0;
    const double parsed = std::stod(value, &consumed);
    if (consumed != value.size()) throw std::invalid_argument("trailing characters");
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError(path + ": not a number ('" + value + "')");
  }
}

long long parse_integer(const std::string& value, const std::string& path) {
  long long parsed = 0;
  const auto result = std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (result.ec != std::errc{} || result.ptr != value.data() + value.size())
    throw ConfigError(path + ": not an integer ('" + value + "')");
  return parsed;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    const std::string trimmed = trim(item);
    if (!trimmed.empty()) items.push_back(trimmed);
  }
  return items;
}

void append_number(std::string& out, double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, result.ptr);
}

}  // namespace

judge::JudgeEndpoint JudgeSettings::endpoint() const {
  judge::JudgeEndpoint endpoint;
  endpoint.base_url = base_url;
  endpoint.model_name = model;
  endpoint.temperature = temperature;
  endpoint.max_in_flight = max_in_flight;
  endpoint.retry.max_attempts = max_attempts;
  endpoint.retry.backoff_base_ms = backoff_base_ms;
  if (!api_key_env.empty()) {
    if (const char* key = std::getenv(api_key_env.c_str()); key != nullptr && *key != '\0')
      endpoint.api_key = std::string(key);
  }
  return endpoint;
}

AppConfig default_config() {
  AppConfig config;

  config.reward.mode = RewardMode::Conditional;
  config.reward.alpha_fmt = 0.1;
  config.reward.alpha_ans = 0.9;
  config.reward.alpha_desc = 0.0;
  config.reward.gamma = 0.0;
  config.reward.schema = TagSchema::SeeThinkAnswer;
  config.reward.match.mode = MatchMode::NumericTolerant;

  config.sim.reward = config.reward;
  config.sim.model.strategies = {
      {"grounded", 0.9, 0.85, 0.1},
      {"shortcut", 0.15, 0.8, 0.8},
      {"guess", 0.05, 0.25, 0.25},
  };
  config.sim.rollouts_per_group = 16;
  config.sim.learning_rate = 0.05;
  config.sim.beta_kl = 0.001;
  config.sim.entropy_coeff = 0.001;
  config.sim.steps = 2000;
  config.sim.seed = 7;

  return config;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());

  AppConfig config = default_config();
  config.sim.model.strategies.clear();  // a [sim] section with strategies replaces the defaults
  bool saw_strategy = false;

  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;

    if (text.front() == '[') {
      if (text.back() != ']')
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": malformed section header");
      section = trim(text.substr(1, text.size() - 2));
      static const std::vector<std::string> known = {"reward", "judge", "sim", "eval", "server"};
      if (std::find(known.begin(), known.end(), section) == known.end())
        throw ConfigError("unknown section [" + section + "]");
      continue;
    }

    const std::size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    const std::string key_path = "[" + section + "] " + key;

    if (section == "reward") {
      if (key == "mode")
        config.reward.mode = reward_mode_from_string(value);
      else if (key == "alpha_fmt")
        config.reward.alpha_fmt = parse_double(value, key_path);
      else if (key == "alpha_desc")
        config.reward.alpha_desc = parse_double(value, key_path);
      else if (key == "alpha_ans")
        config.reward.alpha_ans = parse_double(value, key_path);
      else if (key == "gamma")
        config.reward.gamma = parse_double(value, key_path);
      else if (key == "schema")
        config.reward.schema = tag_schema_from_string(value);
      else if (key == "match_mode")
        config.reward.match.mode = match_mode_from_string(value);
      else if (key == "numeric_rel_tol")
        config.reward.match.numeric_rel_tol = parse_double(value, key_path);
      else
        throw ConfigError("unknown key " + key_path);
    } else if (section == "judge") {
      if (key == "base_url")
        config.judge.base_url = value;
      else if (key == "model")
        config.judge.model = value;
      else if (key == "api_key_env")
        config.judge.api_key_env = value;
      else if (key == "temperature")
        config.judge.temperature = parse_double(value, key_path);
      else if (key == "max_in_flight")
        config.judge.max_in_flight = static_cast<int>(parse_integer(value, key_path));
      else if (key == "max_attempts")
        config.judge.max_attempts = static_cast<int>(parse_integer(value, key_path));
      else if (key == "backoff_base_ms")
        config.judge.backoff_base_ms = static_cast<int>(parse_integer(value, key_path));
      else if (key == "cache_path")
        config.judge.cache_path = value;
      else
        throw ConfigError("unknown key " + key_path);
    } else if (section == "sim") {
      if (key == "K" || key == "rollouts_per_group")
        config.sim.rollouts_per_group = static_cast<int>(parse_integer(value, key_path));
      else if (key == "learning_rate")
        config.sim.learning_rate = parse_double(value, key_path);
      else if (key == "beta_kl")
        config.sim.beta_kl = parse_double(value, key_path);
      else if (key == "entropy_coeff")
        config.sim.entropy_coeff = parse_double(value, key_path);
      else if (key == "steps")
        config.sim.steps = static_cast<int>(parse_integer(value, key_path));
      else if (key == "seed")
        config.sim.seed = static_cast<std::uint64_t>(parse_integer(value, key_path));
      else if (key.rfind("strategy.", 0) == 0) {
        const std::string name = key.substr(std::string("strategy.").size());
        if (name.empty()) throw ConfigError(key_path + ": strategy name missing");
        const auto parts = split_list(value);
        if (parts.size() != 3)
          throw ConfigError(key_path + ": expected p_desc_ok, p_ans_given_desc_ok, p_ans_given_desc_bad");
        sim::Strategy strategy;
        strategy.name = name;
        strategy.p_desc_ok = parse_double(parts[0], key_path);
        strategy.p_ans_given_desc_ok = parse_double(parts[1], key_path);
        strategy.p_ans_given_desc_bad = parse_double(parts[2], key_path);
        config.sim.model.strategies.push_back(std::move(strategy));
        saw_strategy = true;
      } else {
        throw ConfigError("unknown key " + key_path);
      }
    } else if (section == "eval") {
      if (key == "thresholds") {
        config.eval.thresholds.clear();
        for (const auto& item : split_list(value))
          config.eval.thresholds.push_back(static_cast<int>(parse_integer(item, key_path)));
        if (config.eval.thresholds.empty()) throw ConfigError(key_path + ": empty threshold list");
      } else {
        throw ConfigError("unknown key " + key_path);
      }
    } else if (section == "server") {
      if (key == "bind_addr")
        config.server.bind_addr = value;
      else if (key == "port")
        config.server.port = static_cast<int>(parse_integer(value, key_path));
      else
        throw ConfigError("unknown key " + key_path);
    } else {
      throw ConfigError("key outside any section: " + key);
    }
  }

  if (!saw_strategy) config.sim.model = default_config().sim.model;
  config.sim.reward = config.reward;

  const auto reward_violations = config.reward.validate();
  if (!reward_violations.empty())
    throw ConfigError("[reward] " + reward_violations.front());
  const auto sim_violations = config.sim.validate();
  if (!sim_violations.empty()) throw ConfigError("[sim] " + sim_violations.front());
  if (config.judge.max_in_flight < 1) throw ConfigError("[judge] max_in_flight: must be >= 1");
  if (config.judge.max_attempts < 1) throw ConfigError("[judge] max_attempts: must be >= 1");
  if (config.judge.temperature < 0.0) throw ConfigError("[judge] temperature: must be >= 0");
  if (config.server.port < 0 || config.server.port > 65535)
    throw ConfigError("[server] port: outside [0, 65535]");
  for (const int k : config.eval.thresholds)
    if (k < 1) throw ConfigError("[eval] thresholds: must be >= 1");

  return config;
}

std::string to_ini(const AppConfig& config) {
  std::string out;
  const auto add = [&out](std::string_view text) {
    out += text;
    out += '\n';
  };
  const auto add_number = [&out](std::string_view key, double value) {
    out += key;
    out += " = ";
    append_number(out, value);
    out += '\n';
  };

  add("[reward]");
  add("mode = " + to_string(config.reward.mode));
  add_number("alpha_fmt", config.reward.alpha_fmt);
  if (config.reward.mode == RewardMode::Aggregated)
    add_number("alpha_desc", config.reward.alpha_desc);
  add_number("alpha_ans", config.reward.alpha_ans);
  if (config.reward.mode == RewardMode::Conditional) add_number("gamma", config.reward.gamma);
  add("schema = " + to_string(config.reward.schema));
  add("match_mode = " + to_string(config.reward.match.mode));
  add("");

  add("[judge]");
  add("base_url = " + config.judge.base_url);
  add("model = " + config.judge.model);
  add("api_key_env = " + config.judge.api_key_env);
  add_number("temperature", config.judge.temperature);
  add("max_in_flight = " + std::to_string(config.judge.max_in_flight));
  add("max_attempts = " + std::to_string(config.judge.max_attempts));
  add("backoff_base_ms = " + std::to_string(config.judge.backoff_base_ms));
  add("cache_path = " + config.judge.cache_path);
  add("");

  add("[sim]");
  add("K = " + std::to_string(config.sim.rollouts_per_group));
  add_number("learning_rate", config.sim.learning_rate);
  add_number("beta_kl", config.sim.beta_kl);
  add_number("entropy_coeff", config.sim.entropy_coeff);
  add("steps = " + std::to_string(config.sim.steps));
  add("seed = " + std::to_string(config.sim.seed));
  for (const auto& strategy : config.sim.model.strategies) {
    out += "strategy." + strategy.name + " = ";
    append_number(out, strategy.p_desc_ok);
    out += ", ";
    append_number(out, strategy.p_ans_given_desc_ok);
    out += ", ";
    append_number(out, strategy.p_ans_given_desc_bad);
    out += '\n';
  }
  add("");

  add("[eval]");
  out += "thresholds = ";
  for (std::size_t i = 0; i < config.eval.thresholds.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(config.eval.thresholds[i]);
  }
  out += '\n';
  add("");

  add("[server]");
  add("bind_addr = " + config.server.bind_addr);
  add("port = " + std::to_string(config.server.port));
  return out;
}

}  // namespace rlvr
