#pragma once

// Play logs and traces. A PlayLog is the complete "play data" of a session:
// seed, tick rate and tick-stamped input events. Replaying it against the same
// project regenerates every tick, and the trace digest pins the result to one
// hash.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "brickstage/project.hpp"
#include "brickstage/runtime.hpp"

namespace brickstage {

inline constexpr int kPlayLogVersion = 1;

struct TimedEvent {
  std::int64_t tick = 0;
  EventIn event;
  friend bool operator==(const TimedEvent&, const TimedEvent&) = default;
};

struct PlayLog {
  int version = kPlayLogVersion;
  std::string project_digest;
  std::uint64_t seed = 0;
  std::int64_t tick_rate = 30;
  std::int64_t end_tick = 0;
  std::vector<TimedEvent> events;
  friend bool operator==(const PlayLog&, const PlayLog&) = default;
};

class PlayLogError : public std::runtime_error {
 public:
  // line is 1-based; 0 when the problem is not tied to a line.
  PlayLogError(std::size_t line, const std::string& message)
      : std::runtime_error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DigestMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws PlayLogError when the log breaks an invariant: version 1, 64-hex
// digest, tick rate in [1, 240], events sorted by tick and within end_tick,
// finite tap coordinates, and nothing after a stop tick.
void check_play_log(const PlayLog& log);

// `.catplay.jsonl`: a header line then one line per event, each LF-terminated.
std::string serialize_play_log(const PlayLog& log);
PlayLog parse_play_log(std::string_view text);

struct TraceRecord {
  Scene scene;
  TickOutputs outputs;
  friend bool operator==(const TraceRecord& a, const TraceRecord& b) {
    return a.scene == b.scene && a.outputs.tick == b.outputs.tick && a.outputs.emitted == b.outputs.emitted;
  }
};

// Records for ticks 0..end_tick, in order.
struct Trace {
  std::vector<TraceRecord> records;
  friend bool operator==(const Trace&, const Trace&) = default;
};

// SHA-256 over each record's canonical scene bytes then canonical outputs
// bytes, in tick order.
std::string trace_digest(const Trace& trace);

// One JSON object per line: {"tick":T,"scene":<canonical scene>,"outputs":<canonical outputs>}.
std::string serialize_trace(const Trace& trace);

// Wraps a live session, copying every injected event with the tick at which
// the session will consume it, and collecting the trace as it goes.
class Recorder {
 public:
  Recorder(std::shared_ptr<const Project> project, std::uint64_t seed,
           std::optional<std::int64_t> tick_rate_override = std::nullopt);

  void inject(const EventIn& event);
  TickOutputs step();

  const Session& session() const { return session_; }
  const Trace& trace() const { return trace_; }

  // The play data up to the last completed tick. Throws std::logic_error
  // before the first step.
  PlayLog play_log() const;

 private:
  Session session_;
  std::string project_digest_;
  std::vector<TimedEvent> events_;
  Trace trace_;
};

// Drives a Recorder through ticks 0..until_tick, injecting the schedule (sorted
// by tick) as it goes. Stops early if the session stops.
PlayLog record(std::shared_ptr<const Project> project, std::uint64_t seed,
               const std::vector<TimedEvent>& schedule, std::int64_t until_tick,
               std::optional<std::int64_t> tick_rate_override = std::nullopt);

// Throws DigestMismatchError before executing anything if the project does not
// match the log, PlayLogError for a malformed log.
Trace replay(const Project& project, const PlayLog& log);

bool verify(const Project& project, const PlayLog& log, std::string_view expected_digest);

}  // namespace brickstage
