#include "rlvr/server.hpp"

#include "httplib.h"

#include <nlohmann/json.hpp>

#include "rlvr/errors.hpp"
#include "rlvr/grpo.hpp"
#include "rlvr/jsonl.hpp"
#include "rlvr/pipeline.hpp"

namespace rlvr {

namespace {

using nlohmann::json;

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& code,
                 const std::string& message, const std::string& field = "") {
  json body{{"code", code}, {"message", message}};
  if (!field.empty()) body["field"] = field;
  reply_json(res, status, body);
}

}  // namespace

ScoreServer::ScoreServer(AppConfig config, bool mock_judge)
    : config_(std::move(config)),
      mock_judge_(mock_judge),
      cache_(std::make_shared<judge::JudgeCache>()),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

ScoreServer::~ScoreServer() { stop(); }

std::unique_ptr<judge::JudgeClient> ScoreServer::make_judge(const RewardConfig& reward) {
  const bool needs_judge = (reward.uses_description() && reward.schema == TagSchema::SeeThinkAnswer) ||
                           reward.match.mode == MatchMode::JudgeDelegated;
  if (!needs_judge) return nullptr;
  if (mock_judge_ || config_.judge.base_url.empty())
    return std::make_unique<judge::JudgeClient>(judge::default_mock_rules(), cache_,
                                                config_.judge.model);
  return std::make_unique<judge::JudgeClient>(config_.judge.endpoint(), cache_);
}

void ScoreServer::install_routes() {
  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  server_->Post("/advantages", [](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) return reply_error(res, 400, "schema_violation", "body is not JSON");
    if (!body.is_object() || !body.contains("rewards") || !body["rewards"].is_array())
      return reply_error(res, 400, "schema_violation", "expected a rewards array", "rewards");
    std::vector<double> rewards;
    for (std::size_t i = 0; i < body["rewards"].size(); ++i) {
      if (!body["rewards"][i].is_number())
        return reply_error(res, 400, "schema_violation", "rewards must be numbers",
                           "rewards[" + std::to_string(i) + "]");
      rewards.push_back(body["rewards"][i].get<double>());
    }
    try {
      reply_json(res, 200, json{{"advantages", group_advantages(rewards)}});
    } catch (const Error& e) {
      reply_error(res, 400, e.code(), e.what(), "rewards");
    }
  });

  server_->Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) return reply_error(res, 400, "schema_violation", "body is not JSON");
    try {
      if (!body.is_object() || !body.contains("tasks") || !body["tasks"].is_array())
        throw SchemaError("expected a tasks array", "tasks");
      if (!body.contains("rollouts") || !body["rollouts"].is_array())
        throw SchemaError("expected a rollouts array", "rollouts");
      if (!body.contains("reward") || !body["reward"].is_object())
        throw SchemaError("expected a reward config object", "reward");

      std::vector<Task> tasks;
      for (std::size_t i = 0; i < body["tasks"].size(); ++i)
        tasks.push_back(task_from_json(body["tasks"][i], "tasks[" + std::to_string(i) + "]"));
      std::vector<RolloutRecord> rollouts;
      for (std::size_t i = 0; i < body["rollouts"].size(); ++i)
        rollouts.push_back(
            rollout_record_from_json(body["rollouts"][i], "rollouts[" + std::to_string(i) + "]"));
      const RewardConfig reward = reward_config_from_json(body["reward"], "reward");

      auto judge = make_judge(reward);
      const auto records = score_batch(tasks, std::move(rollouts), reward, judge.get());
      reply_json(res, 200, json{{"records", records_to_json(records)}});
    } catch (const TransportExhaustedError& e) {
      reply_error(res, 502, e.code(), e.what());
    } catch (const SchemaError& e) {
      reply_error(res, 400, e.code(), e.what(), e.field());
    } catch (const Error& e) {
      reply_error(res, 400, e.code(), e.what());
    }
  });

  server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    if (!mock_judge_)
      return reply_error(res, 404, "not_found", "mock judge endpoint is disabled");
    mock_chat_requests_.fetch_add(1);
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) return reply_error(res, 400, "schema_violation", "body is not JSON");
    try {
      const auto messages = judge::chat_messages_from_json(body);
      const std::string reply = judge::mock_judge(messages, judge::default_mock_rules());
      reply_json(res, 200,
                 json{{"choices",
                       {{{"message", {{"role", "assistant"}, {"content", reply}}}}}},
                      {"model", body.value("model", std::string("mock-judge"))}});
    } catch (const Error& e) {
      reply_error(res, 400, e.code(), e.what());
    }
  });
}

int ScoreServer::start(const std::string& bind_addr, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(bind_addr);
    if (bound < 0) throw IoError("cannot bind " + bind_addr);
  } else {
    if (!server_->bind_to_port(bind_addr, port))
      throw IoError("cannot bind " + bind_addr + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

bool ScoreServer::run(const std::string& bind_addr, int port) {
  return server_->listen(bind_addr, port);
}

void ScoreServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace rlvr
