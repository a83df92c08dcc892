#include "brickstage/live_session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "brickstage/project_io.hpp"
#include "json.hpp"

namespace brickstage {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;
namespace fs = std::filesystem;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

OrderedJson scene_entries_json(const Scene& scene) {
  OrderedJson entries = OrderedJson::array();
  for (const SceneEntry& e : scene.entries) {
    OrderedJson j;
    j["sprite"] = e.sprite_name;
    j["x"] = e.x;
    j["y"] = e.y;
    j["visible"] = e.visible;
    j["size"] = e.size_percent;
    j["layer"] = e.layer;
    j["costume"] = e.costume_id;
    entries.push_back(std::move(j));
  }
  return entries;
}

std::string event_message(std::int64_t tick, const OutputEvent& event) {
  OrderedJson j;
  j["type"] = "event";
  j["tick"] = tick;
  std::visit(Overloaded{
                 [&](const output::Speak& e) {
                   j["kind"] = "speak";
                   j["payload"] = OrderedJson{{"sprite", e.sprite}, {"text", e.text}};
                 },
                 [&](const output::SoundStart& e) {
                   j["kind"] = "sound";
                   j["payload"] = OrderedJson{{"sprite", e.sprite}, {"sound", e.sound}};
                 },
                 [&](const output::BroadcastSent& e) {
                   j["kind"] = "broadcast";
                   j["payload"] = OrderedJson{{"message", e.message}};
                 },
                 [&](const output::ProgramEnded&) {
                   j["kind"] = "ended";
                   j["payload"] = OrderedJson::object();
                 },
             },
             event);
  return j.dump();
}

}  // namespace

std::string error_message(std::string_view text) {
  OrderedJson j;
  j["type"] = "error";
  j["message"] = std::string(text);
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

ProjectLibrary::ProjectLibrary(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  if (!fs::is_directory(dir_, ec)) throw std::invalid_argument("not a directory: " + dir_.string());
}

std::vector<std::string> ProjectLibrary::names() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    const std::string file = entry.path().filename().string();
    if (file.size() > kProjectSuffix.size() && file.ends_with(kProjectSuffix) && entry.is_regular_file()) {
      out.push_back(file.substr(0, file.size() - kProjectSuffix.size()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::shared_ptr<const Project> ProjectLibrary::load(std::string_view name) const {
  const auto known = names();
  if (std::find(known.begin(), known.end(), name) == known.end()) {
    throw std::out_of_range("unknown project \"" + std::string(name) + "\"");
  }
  return std::make_shared<const Project>(parse_project(read_file(dir_ / (std::string(name) + std::string(kProjectSuffix)))));
}

std::optional<fs::path> ProjectLibrary::costume_file(std::string_view sprite, std::string_view costume_id,
                                                     std::optional<std::string_view> project) const {
  std::optional<fs::path> found;
  int matches = 0;
  for (const std::string& name : names()) {
    if (project && name != *project) continue;
    std::shared_ptr<const Project> loaded;
    try {
      loaded = load(name);
    } catch (const std::exception&) {
      continue;
    }
    for (const Sprite& s : loaded->sprites) {
      if (s.name != sprite) continue;
      for (const Costume& c : s.costumes) {
        if (c.id == costume_id) {
          found = dir_ / c.file;
          ++matches;
        }
      }
    }
  }
  if (matches != 1) return std::nullopt;
  return found;
}

std::int64_t TickPacer::ticks_due(SteadyClock::time_point now) const {
  if (now <= start_) return 0;
  const auto elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(now - start_).count();
  return static_cast<std::int64_t>((static_cast<__int128>(elapsed) * rate_) / 1'000'000'000);
}

SteadyClock::time_point TickPacer::deadline(std::int64_t tick) const {
  const __int128 numerator = static_cast<__int128>(tick + 1) * 1'000'000'000;
  const auto nanos = static_cast<std::int64_t>((numerator + rate_ - 1) / rate_);
  return start_ + std::chrono::duration_cast<SteadyClock::duration>(std::chrono::nanoseconds(nanos));
}

LiveSession::LiveSession(const ProjectLibrary& library) : library_(library) {}

std::vector<std::string> LiveSession::hello() const {
  OrderedJson j;
  j["type"] = "hello";
  j["protocol_version"] = kProtocolVersion;
  j["projects"] = library_.names();
  return {j.dump()};
}

std::vector<std::string> LiveSession::handle(std::string_view message, SteadyClock::time_point now) {
  Json msg;
  try {
    msg = Json::parse(message.begin(), message.end());
  } catch (const Json::exception&) {
    return {error_message("malformed message")};
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    return {error_message("message needs a string \"type\"")};
  }
  const std::string type = msg["type"].get<std::string>();

  if (type == "load") {
    if (!msg.contains("project_name") || !msg["project_name"].is_string()) {
      return {error_message("load needs a string \"project_name\"")};
    }
    if (running()) return {error_message("cannot load while a session is running")};
    return on_load(msg["project_name"].get<std::string>());
  }
  if (type == "start") {
    if (!msg.contains("seed") || !msg["seed"].is_number_unsigned()) {
      return {error_message("start needs an unsigned integer \"seed\"")};
    }
    if (!project_) return {error_message("start before load")};
    if (running()) return {error_message("session already running")};
    return on_start(msg["seed"].get<std::uint64_t>(), now);
  }
  if (type == "tap") {
    if (!msg.contains("x") || !msg.contains("y") || !msg["x"].is_number() || !msg["y"].is_number()) {
      return {error_message("tap needs numeric \"x\" and \"y\"")};
    }
    if (!running()) return {error_message("tap while no session is running")};
    const double x = msg["x"].get<double>();
    const double y = msg["y"].get<double>();
    if (!std::isfinite(x) || !std::isfinite(y)) return {error_message("tap coordinates must be finite")};
    // Catch up first so the tap lands on the tick after the last one due.
    auto out = advance(now);
    if (running()) recorder_->inject(Tap{x, y});
    return out;
  }
  if (type == "stop") {
    if (!running()) return {error_message("stop while no session is running")};
    auto out = advance(now);
    if (running()) recorder_->inject(Stop{});
    return out;
  }
  if (type == "save_log") {
    if (!recorder_) return {error_message("save_log before start")};
    if (recorder_->session().tick() == 0) return {error_message("save_log before the first tick")};
    OrderedJson j;
    j["type"] = "log";
    j["playlog"] = serialize_play_log(recorder_->play_log());
    return {j.dump()};
  }
  return {error_message("unknown message type \"" + type + "\"")};
}

std::vector<std::string> LiveSession::on_load(std::string_view name) {
  std::shared_ptr<const Project> project;
  try {
    project = library_.load(name);
  } catch (const std::out_of_range& e) {
    return {error_message(e.what())};
  } catch (const std::exception& e) {
    return {error_message(std::string("cannot load project: ") + e.what())};
  }
  project_name_ = std::string(name);
  project_ = std::move(project);
  recorder_.reset();
  pacer_.reset();

  OrderedJson j;
  j["type"] = "loaded";
  j["project_digest"] = project_digest(*project_);
  j["stage"] = OrderedJson{{"width", project_->stage.width},
                           {"height", project_->stage.height},
                           {"tick_rate", project_->stage.tick_rate}};
  OrderedJson costumes = OrderedJson::array();
  for (const Sprite& sprite : project_->sprites) {
    for (const Costume& costume : sprite.costumes) {
      costumes.push_back(OrderedJson{{"sprite", sprite.name}, {"costume_id", costume.id}, {"file", costume.file}});
    }
  }
  j["costumes"] = std::move(costumes);
  return {j.dump()};
}

std::vector<std::string> LiveSession::on_start(std::uint64_t seed, SteadyClock::time_point now) {
  recorder_ = std::make_unique<Recorder>(project_, seed);
  pacer_.emplace(recorder_->session().tick_rate(), now);
  return {};
}

void LiveSession::run_tick(std::vector<std::string>& out) {
  const TickOutputs outputs = recorder_->step();
  const Scene scene = recorder_->session().scene();

  OrderedJson frame;
  frame["type"] = "frame";
  frame["tick"] = outputs.tick;
  frame["scene"] = scene_entries_json(scene);
  out.push_back(frame.dump());
  for (const OutputEvent& event : outputs.emitted) out.push_back(event_message(outputs.tick, event));

  if (recorder_->session().stopped()) {
    OrderedJson ended;
    ended["type"] = "ended";
    ended["tick"] = outputs.tick;
    out.push_back(ended.dump());
  }
}

std::vector<std::string> LiveSession::advance(SteadyClock::time_point now) {
  std::vector<std::string> out;
  if (!running() || !pacer_) return out;
  const std::int64_t due = pacer_->ticks_due(now);
  while (running() && recorder_->session().tick() < due) run_tick(out);
  return out;
}

std::optional<SteadyClock::time_point> LiveSession::next_deadline() const {
  if (!running() || !pacer_) return std::nullopt;
  return pacer_->deadline(recorder_->session().tick());
}

}  // namespace brickstage
