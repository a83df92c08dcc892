#include "brickstage/project.hpp"

#include <set>
#include <string>

namespace brickstage {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::string indexed(std::string_view base, std::string_view field, std::size_t index) {
  std::string path(base);
  if (!path.empty()) path += '.';
  path += field;
  path += '[';
  path += std::to_string(index);
  path += ']';
  return path;
}

std::string member(std::string_view base, std::string_view field) {
  std::string path(base);
  if (!path.empty()) path += '.';
  path += field;
  return path;
}

// Well-formed UTF-8: shortest encodings only, no surrogates, nothing past U+10FFFF.
bool is_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    if (b0 < 0x80) {
      ++i;
      continue;
    }
    std::size_t len = 0;
    unsigned char lo = 0x80;
    unsigned char hi = 0xBF;
    if (b0 >= 0xC2 && b0 <= 0xDF) {
      len = 2;
    } else if (b0 >= 0xE0 && b0 <= 0xEF) {
      len = 3;
      if (b0 == 0xE0) lo = 0xA0;
      if (b0 == 0xED) hi = 0x9F;
    } else if (b0 >= 0xF0 && b0 <= 0xF4) {
      len = 4;
      if (b0 == 0xF0) lo = 0x90;
      if (b0 == 0xF4) hi = 0x8F;
    } else {
      return false;
    }
    if (i + len > text.size()) return false;
    const auto b1 = static_cast<unsigned char>(text[i + 1]);
    if (b1 < lo || b1 > hi) return false;
    for (std::size_t k = 2; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if (b < 0x80 || b > 0xBF) return false;
    }
    i += len;
  }
  return true;
}

class Validator {
 public:
  explicit Validator(std::vector<Violation>& out) : out_(out) {}

  void check(const Project& project) {
    if (project.format_version != kFormatVersion) {
      add("format_version", "unsupported format_version " + std::to_string(project.format_version));
    }
    check_text("name", project.name);
    check_stage(project.stage);
    if (project.sprites.empty()) add("sprites", "a project needs at least one sprite");

    std::set<std::string, std::less<>> names;
    for (std::size_t i = 0; i < project.sprites.size(); ++i) {
      const Sprite& sprite = project.sprites[i];
      const std::string path = indexed("", "sprites", i);
      check_text(member(path, "name"), sprite.name);
      if (sprite.name.empty()) {
        add(member(path, "name"), "sprite name is empty");
      } else if (!names.insert(sprite.name).second) {
        add(member(path, "name"), "duplicate sprite name \"" + sprite.name + "\"");
      }
      check_sprite(sprite, path);
    }
  }

 private:
  void add(std::string path, std::string message) {
    out_.push_back(Violation{std::move(path), std::move(message)});
  }

  void check_text(const std::string& path, std::string_view text) {
    if (!is_utf8(text)) add(path, "not valid UTF-8");
  }

  void check_literal(const std::string& path, std::int64_t value) {
    if (value < kLiteralMin || value > kLiteralMax) add(path, "literal out of 32-bit range");
  }

  void check_stage(const StageConfig& stage) {
    if (stage.width < 1 || stage.width > kLiteralMax) add("stage.width", "width must be positive");
    if (stage.height < 1 || stage.height > kLiteralMax) add("stage.height", "height must be positive");
    if (stage.tick_rate < 1 || stage.tick_rate > kMaxTickRate) {
      add("stage.tick_rate", "tick_rate must be in [1, 240]");
    }
  }

  void check_sprite(const Sprite& sprite, const std::string& path) {
    sprite_ = &sprite;
    std::set<std::string, std::less<>> ids;
    for (std::size_t i = 0; i < sprite.costumes.size(); ++i) {
      const Costume& costume = sprite.costumes[i];
      const std::string cpath = indexed(path, "costumes", i);
      check_text(member(cpath, "id"), costume.id);
      check_text(member(cpath, "file"), costume.file);
      if (costume.id.empty()) {
        add(member(cpath, "id"), "costume id is empty");
      } else if (!ids.insert(costume.id).second) {
        add(member(cpath, "id"), "duplicate costume id \"" + costume.id + "\"");
      }
      if (!is_safe_relative_path(costume.file)) add(member(cpath, "file"), "unsafe asset path");
      if (costume.width < 1 || costume.width > kLiteralMax) add(member(cpath, "width"), "width must be positive");
      if (costume.height < 1 || costume.height > kLiteralMax) add(member(cpath, "height"), "height must be positive");
    }
    ids.clear();
    for (std::size_t i = 0; i < sprite.sounds.size(); ++i) {
      const Sound& sound = sprite.sounds[i];
      const std::string spath = indexed(path, "sounds", i);
      check_text(member(spath, "id"), sound.id);
      check_text(member(spath, "file"), sound.file);
      if (sound.id.empty()) {
        add(member(spath, "id"), "sound id is empty");
      } else if (!ids.insert(sound.id).second) {
        add(member(spath, "id"), "duplicate sound id \"" + sound.id + "\"");
      }
      if (!is_safe_relative_path(sound.file)) add(member(spath, "file"), "unsafe asset path");
    }
    for (std::size_t i = 0; i < sprite.scripts.size(); ++i) {
      const Script& script = sprite.scripts[i];
      const std::string spath = indexed(path, "scripts", i);
      if (const auto* receive = std::get_if<WhenIReceive>(&script.trigger)) {
        check_text(member(spath, "trigger.message"), receive->message);
        if (receive->message.empty()) add(member(spath, "trigger.message"), "WhenIReceive message is empty");
      }
      check_bricks(script.bricks, member(spath, "bricks"), 1);
    }
  }

  bool has_costume(std::string_view id) const {
    for (const auto& c : sprite_->costumes) {
      if (c.id == id) return true;
    }
    return false;
  }

  bool has_sound(std::string_view id) const {
    for (const auto& s : sprite_->sounds) {
      if (s.id == id) return true;
    }
    return false;
  }

  void check_bricks(const std::vector<Brick>& list, const std::string& base, int depth) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      std::string path = base + '[' + std::to_string(i) + ']';
      if (depth > kMaxNestingDepth) {
        add(path, "brick nesting deeper than 64");
        continue;
      }
      check_brick(list[i], path, depth);
    }
  }

  void check_brick(const Brick& brick, const std::string& path, int depth) {
    std::visit(
        Overloaded{
            [&](const bricks::Wait& b) {
              if (b.millis < 0) add(member(path, "millis"), "millis must be non-negative");
              check_literal(member(path, "millis"), b.millis);
            },
            [&](const bricks::Broadcast& b) { check_text(member(path, "message"), b.message); },
            [&](const bricks::BroadcastAndWait& b) { check_text(member(path, "message"), b.message); },
            [&](const bricks::PlaceAt& b) {
              check_literal(member(path, "x"), b.x);
              check_literal(member(path, "y"), b.y);
            },
            [&](const bricks::GlideTo& b) {
              check_literal(member(path, "x"), b.x);
              check_literal(member(path, "y"), b.y);
              if (b.millis < 1) add(member(path, "millis"), "millis must be positive");
              check_literal(member(path, "millis"), b.millis);
            },
            [&](const bricks::ChangeXBy& b) { check_literal(member(path, "dx"), b.dx); },
            [&](const bricks::ChangeYBy& b) { check_literal(member(path, "dy"), b.dy); },
            [&](const bricks::PlaceAtRandom& b) {
              check_literal(member(path, "xmin"), b.xmin);
              check_literal(member(path, "xmax"), b.xmax);
              check_literal(member(path, "ymin"), b.ymin);
              check_literal(member(path, "ymax"), b.ymax);
              if (b.xmin > b.xmax) add(path, "xmin exceeds xmax");
              if (b.ymin > b.ymax) add(path, "ymin exceeds ymax");
            },
            [&](const bricks::SetCostume& b) {
              check_text(member(path, "costume"), b.costume);
              if (!has_costume(b.costume)) add(path, "unknown costume \"" + b.costume + "\"");
            },
            [&](const bricks::NextCostume&) {},
            [&](const bricks::Show&) {},
            [&](const bricks::Hide&) {},
            [&](const bricks::SetSize& b) {
              if (b.percent < 1) add(member(path, "percent"), "percent must be positive");
              check_literal(member(path, "percent"), b.percent);
            },
            [&](const bricks::ComeToFront&) {},
            [&](const bricks::PlaySound& b) {
              check_text(member(path, "sound"), b.sound);
              if (!has_sound(b.sound)) add(path, "unknown sound \"" + b.sound + "\"");
            },
            [&](const bricks::Speak& b) { check_text(member(path, "text"), b.text); },
            [&](const bricks::Repeat& b) {
              if (b.count < 0) add(member(path, "count"), "count must be non-negative");
              check_literal(member(path, "count"), b.count);
              check_bricks(b.body, member(path, "body"), depth + 1);
            },
            [&](const bricks::Forever& b) { check_bricks(b.body, member(path, "body"), depth + 1); },
        },
        brick.op);
  }

  std::vector<Violation>& out_;
  const Sprite* sprite_ = nullptr;
};

}  // namespace

std::string_view brick_type_name(const Brick& brick) {
  static constexpr std::string_view kNames[] = {
      "Wait",      "Broadcast",     "BroadcastAndWait", "PlaceAt", "GlideTo",     "ChangeXBy",
      "ChangeYBy", "PlaceAtRandom", "SetCostume",       "NextCostume", "Show",    "Hide",
      "SetSize",   "ComeToFront",   "PlaySound",        "Speak",   "Repeat",      "Forever"};
  static_assert(std::size(kNames) == std::variant_size_v<Brick::Op>);
  return kNames[brick.op.index()];
}

bool is_safe_relative_path(std::string_view path) {
  if (path.empty() || path.front() == '/') return false;
  if (path.find('\\') != std::string_view::npos) return false;
  if (path.find('\0') != std::string_view::npos) return false;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    const std::string_view part = path.substr(start, end - start);
    if (part.empty() || part == "..") return false;
    start = end + 1;
  }
  return true;
}

std::vector<Violation> validate(const Project& project) {
  std::vector<Violation> out;
  Validator(out).check(project);
  return out;
}

}  // namespace brickstage
