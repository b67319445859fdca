#pragma once

#include <memory>
#include <string>

#include "cirl/session.hpp"

namespace cirl {

/**
HTTP + JSON front end of a SessionManager:

  GET  /scenarios                 list of scenarios
  POST /sessions                  CreateRequest body -> session summary (201)
  GET  /sessions/{id}             full session view including the trace
  POST /sessions/{id}/action      {"action": label | index, "turn"?: n} -> summary

Errors carry {code, message, legal_actions?} with a matching HTTP status.
*/
class PlayServer {
public:
    explicit PlayServer(SessionManager& sessions);
    ~PlayServer();
    PlayServer(const PlayServer&) = delete;
    PlayServer& operator=(const PlayServer&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    bool serve();
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace cirl
