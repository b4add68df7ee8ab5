#pragma once

#include "adgen/run_repository.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>

namespace adgen {

/// Candidate rows for the review UI: candidates joined with their variant and
/// quality report, gated (selected) candidates first in rank order, the rest
/// by combined score.
nlohmann::json candidate_cards(const nlohmann::json &manifest);

/// JSON API over the run repository plus static hosting of the review UI.
///
///   GET  /api/runs                      run summaries
///   GET  /api/runs/{id}                 full manifest
///   GET  /api/runs/{id}/candidates      candidate cards
///   GET  /api/images/{hash}.png         stored images
///   POST /api/runs/{id}/selection       {"candidate_ids": [...]} -> manifest
///
/// Anything else is served from `static_dir` when one is configured.
class ApiServer {
public:
  ApiServer(std::shared_ptr<RunRepository> runs, std::filesystem::path static_dir = {});
  ~ApiServer();
  ApiServer(const ApiServer &) = delete;
  ApiServer &operator=(const ApiServer &) = delete;

  /// Binds and serves until stop(). Throws std::runtime_error when the port
  /// cannot be bound.
  void listen(const std::string &host, int port);
  /// Binds an ephemeral port and returns it; call serve() afterwards.
  int bind_any(const std::string &host);
  void serve();
  void stop();
  void wait_until_ready() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace adgen
