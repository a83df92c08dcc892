#pragma once

// The interpreter. A Session advances one logical tick per step(); within a
// tick every runnable script instance runs cooperatively, in instance order,
// until it yields. Nothing here reads wall-clock time or global state, so a
// (project, seed, event schedule) triple fully determines every tick.

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "brickstage/project.hpp"

namespace brickstage {

inline constexpr int kBrickBudgetPerTick = 1000;

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// Input events, queued by inject() and consumed at the start of the next step.
struct Tap {
  double x = 0;
  double y = 0;
  friend bool operator==(const Tap&, const Tap&) = default;
};
struct Stop {
  friend bool operator==(const Stop&, const Stop&) = default;
};
using EventIn = std::variant<Tap, Stop>;

namespace output {
struct Speak {
  std::string sprite;
  std::string text;
  friend bool operator==(const Speak&, const Speak&) = default;
};
struct SoundStart {
  std::string sprite;
  std::string sound;
  friend bool operator==(const SoundStart&, const SoundStart&) = default;
};
struct BroadcastSent {
  std::string message;
  friend bool operator==(const BroadcastSent&, const BroadcastSent&) = default;
};
struct ProgramEnded {
  friend bool operator==(const ProgramEnded&, const ProgramEnded&) = default;
};
}  // namespace output

using OutputEvent =
    std::variant<output::Speak, output::SoundStart, output::BroadcastSent, output::ProgramEnded>;

// Non-observable runtime notes; they are not part of the trace.
struct Diagnostic {
  std::int64_t tick = 0;
  std::string sprite;
  std::size_t script_index = 0;
  std::string message;
  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

struct TickOutputs {
  std::int64_t tick = 0;
  std::vector<OutputEvent> emitted;
  std::vector<Diagnostic> diagnostics;
  friend bool operator==(const TickOutputs&, const TickOutputs&) = default;
};

struct SceneEntry {
  std::string sprite_name;
  double x = 0;
  double y = 0;
  bool visible = true;
  std::int64_t size_percent = 100;
  std::int64_t layer = 0;
  std::string costume_id;  // empty when the sprite has no costumes
  friend bool operator==(const SceneEntry&, const SceneEntry&) = default;
};

// Every sprite, in painter order: ascending (layer, sprite index).
struct Scene {
  std::int64_t tick = 0;
  std::vector<SceneEntry> entries;
  friend bool operator==(const Scene&, const Scene&) = default;
};

struct SpriteState {
  double x = 0;
  double y = 0;
  bool visible = true;
  std::int64_t size_percent = 100;
  std::int64_t layer = 0;
  std::size_t costume_index = 0;
  std::size_t sprite_index = 0;
  friend bool operator==(const SpriteState&, const SpriteState&) = default;
};

namespace status {
struct Runnable {
  friend bool operator==(const Runnable&, const Runnable&) = default;
};
struct Sleeping {
  std::int64_t until_tick = 0;
  friend bool operator==(const Sleeping&, const Sleeping&) = default;
};
struct Gliding {
  double start_x = 0;
  double start_y = 0;
  double target_x = 0;
  double target_y = 0;
  std::int64_t start_tick = 0;
  std::int64_t end_tick = 0;  // last tick of motion, inclusive
  friend bool operator==(const Gliding&, const Gliding&) = default;
};
struct WaitingOnBroadcast {
  std::vector<std::uint64_t> instance_ids;
  friend bool operator==(const WaitingOnBroadcast&, const WaitingOnBroadcast&) = default;
};
struct Done {
  friend bool operator==(const Done&, const Done&) = default;
};
}  // namespace status

using InstanceStatus = std::variant<status::Runnable, status::Sleeping, status::Gliding,
                                    status::WaitingOnBroadcast, status::Done>;

struct Frame {
  const std::vector<Brick>* bricks = nullptr;
  std::size_t position = 0;
  std::int64_t remaining = 0;  // iterations left, including the current one
  bool forever = false;
  friend bool operator==(const Frame&, const Frame&) = default;
};

struct ScriptInstance {
  std::uint64_t id = 0;
  std::size_t sprite_index = 0;
  std::size_t script_index = 0;
  std::vector<Frame> frames;
  InstanceStatus status;
  int bricks_this_tick = 0;
  bool budget_reported = false;
  std::uint64_t generation = 0;  // bumped on every restart

  bool live() const { return !std::holds_alternative<status::Done>(status); }
};

class Session {
 public:
  // Throws std::invalid_argument if the project has violations or the
  // override is outside [1, 240].
  Session(std::shared_ptr<const Project> project, std::uint64_t seed,
          std::optional<std::int64_t> tick_rate_override = std::nullopt);

  // Queues an event for the next step. A no-op once the session is stopped.
  void inject(const EventIn& event);

  // Runs one tick. Throws std::logic_error on a stopped session.
  TickOutputs step();

  // Snapshot of the end of the most recent tick (tick 0 for a fresh session).
  Scene scene() const;

  // lo + (next SplitMix64 output mod (hi - lo + 1)); consumes exactly one output.
  std::int64_t next_random_int(std::int64_t lo, std::int64_t hi);

  const Project& project() const { return *project_; }
  const std::shared_ptr<const Project>& shared_project() const { return project_; }
  std::int64_t tick() const { return tick_; }
  std::int64_t tick_rate() const { return tick_rate_; }
  std::uint64_t seed() const { return seed_; }
  bool stopped() const { return stopped_; }
  const std::vector<SpriteState>& sprite_states() const { return sprites_; }
  const std::deque<ScriptInstance>& instances() const { return instances_; }
  const std::vector<EventIn>& pending_events() const { return pending_; }

  // Ticks a duration occupies: ceil(millis * tick_rate / 1000), at least 1.
  std::int64_t duration_ticks(std::int64_t millis) const;

 private:
  enum class Flow { Continue, Yield };

  void start_script(std::size_t sprite_index, std::size_t script_index);
  std::vector<std::uint64_t> broadcast(const std::string& message);
  ScriptInstance* find_instance(std::uint64_t id);
  void run_instance(ScriptInstance& inst, TickOutputs& out);
  Flow execute(ScriptInstance& inst, const Brick& brick, TickOutputs& out);
  void glide_step(ScriptInstance& inst);

  std::shared_ptr<const Project> project_;
  std::uint64_t seed_;
  std::int64_t tick_rate_;
  std::int64_t tick_ = 0;
  SplitMix64 rng_;
  std::vector<SpriteState> sprites_;
  std::deque<ScriptInstance> instances_;
  std::vector<EventIn> pending_;
  bool stopped_ = false;
  bool idle_reported_ = false;
  std::uint64_t next_instance_id_ = 1;

  // Run order of the tick in progress; instances (re)started mid-tick are appended.
  std::vector<std::uint64_t> run_queue_;
  std::size_t queue_pos_ = 0;
  bool running_ = false;
};

// Topmost visible sprite whose costume box (declared pixel size scaled by
// size_percent, centred on its position, edges inclusive) contains (x, y).
// Sprites without costumes are never hit.
std::optional<std::string> hit_test(const Scene& scene, const Project& project, double x, double y);

}  // namespace brickstage
