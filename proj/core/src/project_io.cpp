#include "brickstage/project_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <initializer_list>

#include "brickstage/sha256.hpp"

namespace brickstage {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::string join(std::string_view base, std::string_view field) {
  if (base.empty()) return std::string(field);
  std::string out(base);
  out += '.';
  out += field;
  return out;
}

std::string at_index(std::string_view base, std::size_t i) {
  return std::string(base) + '[' + std::to_string(i) + ']';
}

const char* kind_of(const Json& value) {
  switch (value.type()) {
    case Json::value_t::null: return "null";
    case Json::value_t::object: return "object";
    case Json::value_t::array: return "array";
    case Json::value_t::string: return "string";
    case Json::value_t::boolean: return "boolean";
    case Json::value_t::binary: return "binary";
    case Json::value_t::discarded: return "discarded";
    default: return "number";
  }
}

const Json& expect_object(const Json& node, const std::string& path,
                          std::initializer_list<std::string_view> allowed) {
  if (!node.is_object()) throw ParseError(path, std::string("expected object, found ") + kind_of(node));
  for (const auto& [key, value] : node.items()) {
    bool known = false;
    for (std::string_view name : allowed) known = known || key == name;
    if (!known) throw ParseError(join(path, key), "unknown field");
  }
  return node;
}

const Json& field(const Json& object, const std::string& path, std::string_view name) {
  auto it = object.find(name);
  if (it == object.end()) throw ParseError(join(path, name), "missing field");
  return *it;
}

std::int64_t get_int(const Json& object, const std::string& path, std::string_view name) {
  const Json& value = field(object, path, name);
  if (value.is_number_integer()) {
    if (value.is_number_unsigned() && value.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      throw ParseError(join(path, name), "integer out of range");
    }
    return value.get<std::int64_t>();
  }
  throw ParseError(join(path, name), std::string("expected integer, found ") + kind_of(value));
}

std::string get_string(const Json& object, const std::string& path, std::string_view name) {
  const Json& value = field(object, path, name);
  if (!value.is_string()) {
    throw ParseError(join(path, name), std::string("expected string, found ") + kind_of(value));
  }
  return value.get<std::string>();
}

const Json& get_array(const Json& object, const std::string& path, std::string_view name) {
  const Json& value = field(object, path, name);
  if (!value.is_array()) {
    throw ParseError(join(path, name), std::string("expected array, found ") + kind_of(value));
  }
  return value;
}

// \u escapes must use lowercase hex, as the serializer writes them. Otherwise
// "\u001f" and "\u001F" would be two spellings of one document.
void reject_uppercase_escapes(std::string_view text) {
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (!in_string) {
      in_string = c == '"';
      continue;
    }
    if (c == '"') {
      in_string = false;
    } else if (c == '\\' && i + 1 < text.size()) {
      if (text[i + 1] == 'u') {
        for (std::size_t k = i + 2; k < std::min(i + 6, text.size()); ++k) {
          if (text[k] >= 'A' && text[k] <= 'F') {
            throw ParseError("", "\\u escapes must use lowercase hex digits (offset " + std::to_string(i) + ")");
          }
        }
      }
      ++i;
    }
  }
}

std::vector<Brick> parse_bricks(const Json& list, const std::string& path, int depth);

Brick parse_brick(const Json& node, const std::string& path, int depth) {
  if (!node.is_object()) throw ParseError(path, std::string("expected object, found ") + kind_of(node));
  auto type_it = node.find("type");
  if (type_it == node.end()) throw ParseError(join(path, "type"), "missing field");
  if (!type_it->is_string()) throw ParseError(join(path, "type"), "expected string");
  const std::string type = type_it->get<std::string>();

  auto fields = [&](std::initializer_list<std::string_view> names) {
    for (const auto& [key, value] : node.items()) {
      if (key == "type" || key == "comment") continue;
      bool known = false;
      for (std::string_view name : names) known = known || key == name;
      if (!known) throw ParseError(join(path, key), "unknown field for " + type);
    }
    if (auto c = node.find("comment"); c != node.end() && !c->is_string()) {
      throw ParseError(join(path, "comment"), "expected string");
    }
  };
  auto integer = [&](std::string_view name) { return get_int(node, path, name); };
  auto text = [&](std::string_view name) { return get_string(node, path, name); };

  if (type == "Wait") {
    fields({"millis"});
    return bricks::Wait{integer("millis")};
  }
  if (type == "Broadcast") {
    fields({"message"});
    return bricks::Broadcast{text("message")};
  }
  if (type == "BroadcastAndWait") {
    fields({"message"});
    return bricks::BroadcastAndWait{text("message")};
  }
  if (type == "PlaceAt") {
    fields({"x", "y"});
    return bricks::PlaceAt{integer("x"), integer("y")};
  }
  if (type == "GlideTo") {
    fields({"x", "y", "millis"});
    return bricks::GlideTo{integer("x"), integer("y"), integer("millis")};
  }
  if (type == "ChangeXBy") {
    fields({"dx"});
    return bricks::ChangeXBy{integer("dx")};
  }
  if (type == "ChangeYBy") {
    fields({"dy"});
    return bricks::ChangeYBy{integer("dy")};
  }
  if (type == "PlaceAtRandom") {
    fields({"xmin", "xmax", "ymin", "ymax"});
    return bricks::PlaceAtRandom{integer("xmin"), integer("xmax"), integer("ymin"), integer("ymax")};
  }
  if (type == "SetCostume") {
    fields({"costume"});
    return bricks::SetCostume{text("costume")};
  }
  if (type == "NextCostume") {
    fields({});
    return bricks::NextCostume{};
  }
  if (type == "Show") {
    fields({});
    return bricks::Show{};
  }
  if (type == "Hide") {
    fields({});
    return bricks::Hide{};
  }
  if (type == "SetSize") {
    fields({"percent"});
    return bricks::SetSize{integer("percent")};
  }
  if (type == "ComeToFront") {
    fields({});
    return bricks::ComeToFront{};
  }
  if (type == "PlaySound") {
    fields({"sound"});
    return bricks::PlaySound{text("sound")};
  }
  if (type == "Speak") {
    fields({"text"});
    return bricks::Speak{text("text")};
  }
  if (type == "Repeat") {
    fields({"count", "body"});
    const std::int64_t count = integer("count");
    return bricks::Repeat{count, parse_bricks(get_array(node, path, "body"), join(path, "body"), depth + 1)};
  }
  if (type == "Forever") {
    fields({"body"});
    return bricks::Forever{parse_bricks(get_array(node, path, "body"), join(path, "body"), depth + 1)};
  }
  throw ParseError(join(path, "type"), "unknown brick type \"" + type + "\"");
}

std::vector<Brick> parse_bricks(const Json& list, const std::string& path, int depth) {
  std::vector<Brick> out;
  out.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string bpath = at_index(path, i);
    if (depth > kMaxNestingDepth) throw ParseError(bpath, "brick nesting deeper than 64");
    out.push_back(parse_brick(list[i], bpath, depth));
  }
  return out;
}

Trigger parse_trigger(const Json& node, const std::string& path) {
  expect_object(node, path, {"type", "message"});
  const std::string type = get_string(node, path, "type");
  const bool has_message = node.contains("message");
  if (type == "WhenIReceive") return WhenIReceive{get_string(node, path, "message")};
  if (has_message) throw ParseError(join(path, "message"), "unknown field for " + type);
  if (type == "WhenProgramStarts") return WhenProgramStarts{};
  if (type == "WhenTapped") return WhenTapped{};
  throw ParseError(join(path, "type"), "unknown trigger type \"" + type + "\"");
}

Sprite parse_sprite(const Json& node, const std::string& path) {
  expect_object(node, path, {"name", "costumes", "sounds", "scripts"});
  Sprite sprite;
  sprite.name = get_string(node, path, "name");

  const std::string cbase = join(path, "costumes");
  const Json& costumes = get_array(node, path, "costumes");
  for (std::size_t i = 0; i < costumes.size(); ++i) {
    const std::string cpath = at_index(cbase, i);
    expect_object(costumes[i], cpath, {"id", "file", "width", "height"});
    sprite.costumes.push_back(Costume{get_string(costumes[i], cpath, "id"),
                                      get_string(costumes[i], cpath, "file"),
                                      get_int(costumes[i], cpath, "width"),
                                      get_int(costumes[i], cpath, "height")});
  }

  const std::string sbase = join(path, "sounds");
  const Json& sounds = get_array(node, path, "sounds");
  for (std::size_t i = 0; i < sounds.size(); ++i) {
    const std::string spath = at_index(sbase, i);
    expect_object(sounds[i], spath, {"id", "file"});
    sprite.sounds.push_back(Sound{get_string(sounds[i], spath, "id"), get_string(sounds[i], spath, "file")});
  }

  const std::string scbase = join(path, "scripts");
  const Json& scripts = get_array(node, path, "scripts");
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    const std::string spath = at_index(scbase, i);
    expect_object(scripts[i], spath, {"trigger", "bricks"});
    Script script{parse_trigger(field(scripts[i], spath, "trigger"), join(spath, "trigger")), {}};
    script.bricks = parse_bricks(get_array(scripts[i], spath, "bricks"), join(spath, "bricks"), 1);
    sprite.scripts.push_back(std::move(script));
  }
  return sprite;
}

OrderedJson brick_to_json(const Brick& brick);

OrderedJson bricks_to_json(const std::vector<Brick>& list) {
  OrderedJson out = OrderedJson::array();
  for (const Brick& b : list) out.push_back(brick_to_json(b));
  return out;
}

OrderedJson brick_to_json(const Brick& brick) {
  OrderedJson out;
  out["type"] = brick_type_name(brick);
  std::visit(Overloaded{
                 [&](const bricks::Wait& b) { out["millis"] = b.millis; },
                 [&](const bricks::Broadcast& b) { out["message"] = b.message; },
                 [&](const bricks::BroadcastAndWait& b) { out["message"] = b.message; },
                 [&](const bricks::PlaceAt& b) {
                   out["x"] = b.x;
                   out["y"] = b.y;
                 },
                 [&](const bricks::GlideTo& b) {
                   out["x"] = b.x;
                   out["y"] = b.y;
                   out["millis"] = b.millis;
                 },
                 [&](const bricks::ChangeXBy& b) { out["dx"] = b.dx; },
                 [&](const bricks::ChangeYBy& b) { out["dy"] = b.dy; },
                 [&](const bricks::PlaceAtRandom& b) {
                   out["xmin"] = b.xmin;
                   out["xmax"] = b.xmax;
                   out["ymin"] = b.ymin;
                   out["ymax"] = b.ymax;
                 },
                 [&](const bricks::SetCostume& b) { out["costume"] = b.costume; },
                 [&](const bricks::NextCostume&) {},
                 [&](const bricks::Show&) {},
                 [&](const bricks::Hide&) {},
                 [&](const bricks::SetSize& b) { out["percent"] = b.percent; },
                 [&](const bricks::ComeToFront&) {},
                 [&](const bricks::PlaySound& b) { out["sound"] = b.sound; },
                 [&](const bricks::Speak& b) { out["text"] = b.text; },
                 [&](const bricks::Repeat& b) {
                   out["count"] = b.count;
                   out["body"] = bricks_to_json(b.body);
                 },
                 [&](const bricks::Forever& b) { out["body"] = bricks_to_json(b.body); },
             },
             brick.op);
  return out;
}

OrderedJson trigger_to_json(const Trigger& trigger) {
  OrderedJson out;
  std::visit(Overloaded{
                 [&](const WhenProgramStarts&) { out["type"] = "WhenProgramStarts"; },
                 [&](const WhenTapped&) { out["type"] = "WhenTapped"; },
                 [&](const WhenIReceive& t) {
                   out["type"] = "WhenIReceive";
                   out["message"] = t.message;
                 },
             },
             trigger);
  return out;
}

}  // namespace

Project parse_project_document(std::string_view text) {
  if (text.starts_with("\xef\xbb\xbf")) throw ParseError("", "byte order mark is not allowed");
  Json root;
  try {
    root = Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    // Includes numbers too large for a double, not only syntax errors.
    throw ParseError("", std::string("malformed JSON: ") + e.what());
  }
  reject_uppercase_escapes(text);
  expect_object(root, "", {"format_version", "name", "stage", "sprites"});

  Project project;
  project.format_version = get_int(root, "", "format_version");
  if (project.format_version != kFormatVersion) {
    throw ParseError("format_version", "unsupported format_version " + std::to_string(project.format_version));
  }
  project.name = get_string(root, "", "name");

  const Json& stage = expect_object(field(root, "", "stage"), "stage", {"width", "height", "tick_rate"});
  project.stage = StageConfig{get_int(stage, "stage", "width"), get_int(stage, "stage", "height"),
                              get_int(stage, "stage", "tick_rate")};

  const Json& sprites = get_array(root, "", "sprites");
  for (std::size_t i = 0; i < sprites.size(); ++i) {
    project.sprites.push_back(parse_sprite(sprites[i], at_index("sprites", i)));
  }
  return project;
}

Project parse_project(std::string_view text) {
  Project project = parse_project_document(text);
  const auto violations = validate(project);
  if (!violations.empty()) throw ParseError(violations.front().path, violations.front().message);
  return project;
}

std::string serialize_project(const Project& project) {
  if (const auto violations = validate(project); !violations.empty()) {
    throw std::invalid_argument("cannot serialize invalid project: " + violations.front().path + ": " +
                                violations.front().message);
  }
  OrderedJson root;
  root["format_version"] = project.format_version;
  root["name"] = project.name;
  root["stage"]["width"] = project.stage.width;
  root["stage"]["height"] = project.stage.height;
  root["stage"]["tick_rate"] = project.stage.tick_rate;
  OrderedJson sprites = OrderedJson::array();
  for (const Sprite& sprite : project.sprites) {
    OrderedJson s;
    s["name"] = sprite.name;
    s["costumes"] = OrderedJson::array();
    for (const Costume& c : sprite.costumes) {
      OrderedJson cj;
      cj["id"] = c.id;
      cj["file"] = c.file;
      cj["width"] = c.width;
      cj["height"] = c.height;
      s["costumes"].push_back(std::move(cj));
    }
    s["sounds"] = OrderedJson::array();
    for (const Sound& snd : sprite.sounds) {
      OrderedJson sj;
      sj["id"] = snd.id;
      sj["file"] = snd.file;
      s["sounds"].push_back(std::move(sj));
    }
    s["scripts"] = OrderedJson::array();
    for (const Script& script : sprite.scripts) {
      OrderedJson sc;
      sc["trigger"] = trigger_to_json(script.trigger);
      sc["bricks"] = bricks_to_json(script.bricks);
      s["scripts"].push_back(std::move(sc));
    }
    sprites.push_back(std::move(s));
  }
  root["sprites"] = std::move(sprites);
  return root.dump();
}

std::string project_digest(const Project& project) { return sha256_hex(serialize_project(project)); }

}  // namespace brickstage
