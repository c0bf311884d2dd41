#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "rlvr/config.hpp"
#include "rlvr/judge.hpp"

namespace httplib {
class Server;
}

namespace rlvr {

// Reward service for external trainers:
//
//   GET  /healthz              -> 200 "ok"
//   POST /advantages           {"rewards": [...]} -> {"advantages": [...]}
//   POST /score                {"tasks": [...], "rollouts": [...],
//                               "reward": {...}} -> {"records": [...]}
//   POST /v1/chat/completions  deterministic mock judge (mock mode only);
//                              pointing [judge].base_url here makes the
//                              service its own judge
//
// Requests are stateless apart from the shared judge cache. Schema
// violations return 400 with the offending field path; judge transport
// exhaustion returns 502.
class ScoreServer {
 public:
  // mock_judge selects the deterministic mock as judge backend (and enables
  // the mock chat endpoint); otherwise [judge].base_url is used.
  ScoreServer(AppConfig config, bool mock_judge);
  ~ScoreServer();

  ScoreServer(const ScoreServer&) = delete;
  ScoreServer& operator=(const ScoreServer&) = delete;

  // Binds (port 0 picks an ephemeral port) and serves on a background
  // thread. Returns the bound port.
  int start(const std::string& bind_addr, int port);
  // Binds and serves on the calling thread (the CLI `serve` path).
  bool run(const std::string& bind_addr, int port);
  void stop();

  std::uint64_t mock_chat_requests() const { return mock_chat_requests_.load(); }
  const std::shared_ptr<judge::JudgeCache>& cache() const { return cache_; }

 private:
  void install_routes();
  std::unique_ptr<judge::JudgeClient> make_judge(const RewardConfig& reward);

  AppConfig config_;
  bool mock_judge_;
  std::shared_ptr<judge::JudgeCache> cache_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<std::uint64_t> mock_chat_requests_{0};
};

}  // namespace rlvr
