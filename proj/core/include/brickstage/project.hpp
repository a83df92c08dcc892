#pragma once

// Static program representation: a project is a stage plus an ordered list of
// sprites, each owning costumes, sounds and scripts made of bricks. Every brick
// parameter is a literal; there are no variables or expressions.

#include <concepts>
#include <cstdint>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace brickstage {

inline constexpr int kFormatVersion = 1;
inline constexpr int kMaxNestingDepth = 64;
inline constexpr int kMaxTickRate = 240;

// Integer literals are confined to the signed 32-bit range so that every
// coordinate sum reachable by a program stays exact in a double.
inline constexpr std::int64_t kLiteralMin = -2147483648LL;
inline constexpr std::int64_t kLiteralMax = 2147483647LL;

struct StageConfig {
  std::int64_t width = 480;
  std::int64_t height = 800;
  std::int64_t tick_rate = 30;

  friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

struct Costume {
  std::string id;
  std::string file;
  // Pixel dimensions of the asset. Declared in the document so hit-testing
  // depends only on the program, never on asset files.
  std::int64_t width = 1;
  std::int64_t height = 1;

  friend bool operator==(const Costume&, const Costume&) = default;
};

struct Sound {
  std::string id;
  std::string file;

  friend bool operator==(const Sound&, const Sound&) = default;
};

struct WhenProgramStarts {
  friend bool operator==(const WhenProgramStarts&, const WhenProgramStarts&) = default;
};
struct WhenTapped {
  friend bool operator==(const WhenTapped&, const WhenTapped&) = default;
};
struct WhenIReceive {
  std::string message;
  friend bool operator==(const WhenIReceive&, const WhenIReceive&) = default;
};

using Trigger = std::variant<WhenProgramStarts, WhenTapped, WhenIReceive>;

struct Brick;

namespace bricks {

struct Wait {
  std::int64_t millis = 0;
  friend bool operator==(const Wait&, const Wait&) = default;
};
struct Broadcast {
  std::string message;
  friend bool operator==(const Broadcast&, const Broadcast&) = default;
};
struct BroadcastAndWait {
  std::string message;
  friend bool operator==(const BroadcastAndWait&, const BroadcastAndWait&) = default;
};
struct PlaceAt {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend bool operator==(const PlaceAt&, const PlaceAt&) = default;
};
struct GlideTo {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t millis = 1;
  friend bool operator==(const GlideTo&, const GlideTo&) = default;
};
struct ChangeXBy {
  std::int64_t dx = 0;
  friend bool operator==(const ChangeXBy&, const ChangeXBy&) = default;
};
struct ChangeYBy {
  std::int64_t dy = 0;
  friend bool operator==(const ChangeYBy&, const ChangeYBy&) = default;
};
struct PlaceAtRandom {
  std::int64_t xmin = 0;
  std::int64_t xmax = 0;
  std::int64_t ymin = 0;
  std::int64_t ymax = 0;
  friend bool operator==(const PlaceAtRandom&, const PlaceAtRandom&) = default;
};
struct SetCostume {
  std::string costume;
  friend bool operator==(const SetCostume&, const SetCostume&) = default;
};
struct NextCostume {
  friend bool operator==(const NextCostume&, const NextCostume&) = default;
};
struct Show {
  friend bool operator==(const Show&, const Show&) = default;
};
struct Hide {
  friend bool operator==(const Hide&, const Hide&) = default;
};
struct SetSize {
  std::int64_t percent = 100;
  friend bool operator==(const SetSize&, const SetSize&) = default;
};
struct ComeToFront {
  friend bool operator==(const ComeToFront&, const ComeToFront&) = default;
};
struct PlaySound {
  std::string sound;
  friend bool operator==(const PlaySound&, const PlaySound&) = default;
};
struct Speak {
  std::string text;
  friend bool operator==(const Speak&, const Speak&) = default;
};
struct Repeat {
  std::int64_t count = 0;
  std::vector<Brick> body;
  friend bool operator==(const Repeat&, const Repeat&);
};
struct Forever {
  std::vector<Brick> body;
  friend bool operator==(const Forever&, const Forever&);
};

}  // namespace bricks

struct Brick {
  using Op = std::variant<bricks::Wait, bricks::Broadcast, bricks::BroadcastAndWait,
                          bricks::PlaceAt, bricks::GlideTo, bricks::ChangeXBy,
                          bricks::ChangeYBy, bricks::PlaceAtRandom, bricks::SetCostume,
                          bricks::NextCostume, bricks::Show, bricks::Hide, bricks::SetSize,
                          bricks::ComeToFront, bricks::PlaySound, bricks::Speak,
                          bricks::Repeat, bricks::Forever>;
  Op op;

  template <typename T>
    requires(!std::same_as<std::remove_cvref_t<T>, Brick> && std::constructible_from<Op, T>)
  Brick(T&& value) : op(std::forward<T>(value)) {}  // NOLINT(google-explicit-constructor)

  friend bool operator==(const Brick&, const Brick&) = default;
};

namespace bricks {
inline bool operator==(const Repeat& a, const Repeat& b) {
  return a.count == b.count && a.body == b.body;
}
inline bool operator==(const Forever& a, const Forever& b) { return a.body == b.body; }
}  // namespace bricks

// The document name of a brick variant ("Wait", "Repeat", ...).
std::string_view brick_type_name(const Brick& brick);

struct Script {
  Trigger trigger;
  std::vector<Brick> bricks;

  friend bool operator==(const Script&, const Script&) = default;
};

struct Sprite {
  std::string name;
  std::vector<Costume> costumes;
  std::vector<Sound> sounds;
  std::vector<Script> scripts;

  friend bool operator==(const Sprite&, const Sprite&) = default;
};

struct Project {
  std::int64_t format_version = kFormatVersion;
  std::string name;
  StageConfig stage;
  std::vector<Sprite> sprites;

  friend bool operator==(const Project&, const Project&) = default;
};

struct Violation {
  std::string path;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

// Every invariant violation in document order. Empty means the project is valid.
std::vector<Violation> validate(const Project& project);

// True for a nonempty relative path with no "..", no empty components and no
// backslashes.
bool is_safe_relative_path(std::string_view path);

}  // namespace brickstage
