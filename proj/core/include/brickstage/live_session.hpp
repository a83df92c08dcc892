#pragma once

// Transport-independent half of the session service: the per-connection
// protocol state machine and the wall-clock to logical-tick pacing. The socket
// layer (session_server.hpp) only moves text frames in and out of it, which is
// what lets the tests drive it with a fake clock.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "brickstage/project.hpp"
#include "brickstage/replay.hpp"

namespace brickstage {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::string_view kProjectSuffix = ".catproj.json";

using SteadyClock = std::chrono::steady_clock;

// Read-only view of a directory of `<name>.catproj.json` documents. Projects
// are re-read on every load so edits show up without restarting.
class ProjectLibrary {
 public:
  // Throws std::invalid_argument if dir is not a directory.
  explicit ProjectLibrary(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::vector<std::string> names() const;

  // Throws std::out_of_range for unknown names and ParseError for bad documents.
  std::shared_ptr<const Project> load(std::string_view name) const;

  // Resolves a costume asset. With a project name the lookup is confined to
  // that project; without one it must be unambiguous across the directory.
  std::optional<std::filesystem::path> costume_file(std::string_view sprite, std::string_view costume_id,
                                                    std::optional<std::string_view> project) const;

 private:
  std::filesystem::path dir_;
};

// Ticks are emitted when their interval has fully elapsed: tick k is due once
// (k + 1) / rate seconds have passed since start.
class TickPacer {
 public:
  TickPacer(std::int64_t tick_rate, SteadyClock::time_point start) : rate_(tick_rate), start_(start) {}

  std::int64_t ticks_due(SteadyClock::time_point now) const;
  SteadyClock::time_point deadline(std::int64_t tick) const;

 private:
  std::int64_t rate_;
  SteadyClock::time_point start_;
};

// One connection's protocol state. Every method returns the text messages to
// send, in order.
class LiveSession {
 public:
  explicit LiveSession(const ProjectLibrary& library);

  std::vector<std::string> hello() const;
  std::vector<std::string> handle(std::string_view message, SteadyClock::time_point now);
  // Runs every tick that is due at `now`, back to back, without skipping any.
  std::vector<std::string> advance(SteadyClock::time_point now);

  bool running() const { return recorder_ != nullptr && !recorder_->session().stopped(); }
  // When the next tick becomes due; empty while not running.
  std::optional<SteadyClock::time_point> next_deadline() const;

  const Recorder* recorder() const { return recorder_.get(); }

 private:
  std::vector<std::string> on_load(std::string_view name);
  std::vector<std::string> on_start(std::uint64_t seed, SteadyClock::time_point now);
  void run_tick(std::vector<std::string>& out);

  const ProjectLibrary& library_;
  std::string project_name_;
  std::shared_ptr<const Project> project_;
  std::unique_ptr<Recorder> recorder_;
  std::optional<TickPacer> pacer_;
};

std::string error_message(std::string_view text);

}  // namespace brickstage
