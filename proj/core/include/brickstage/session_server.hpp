#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

namespace brickstage {

struct ServerOptions {
  std::filesystem::path project_dir;
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks an ephemeral port
  unsigned threads = 2;
};

// WebSocket endpoint for live sessions plus static costume assets under
// /assets/<sprite>/<costume_id>[?project=<name>], both on one port. Each
// connection owns its own LiveSession on its own strand.
class SessionServer {
 public:
  // Binds immediately. Throws std::invalid_argument for a bad project
  // directory and std::system_error when the port cannot be bound.
  explicit SessionServer(ServerOptions options);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  std::uint16_t port() const;

  // Blocks until stop() is called, or until SIGINT/SIGTERM when
  // handle_signals is set.
  void run(bool handle_signals = false);

  // Thread-safe.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace brickstage
