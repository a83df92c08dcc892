#include "brickstage/replay.hpp"

#include <cmath>

#include "brickstage/frame_export.hpp"
#include "brickstage/project_io.hpp"
#include "brickstage/sha256.hpp"
#include "json.hpp"

namespace brickstage {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

void require_fields(const Json& object, std::size_t line, std::initializer_list<std::string_view> names) {
  if (!object.is_object()) throw PlayLogError(line, "expected a JSON object");
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (std::string_view name : names) known = known || key == name;
    if (!known) throw PlayLogError(line, "unknown field \"" + key + "\"");
  }
  for (std::string_view name : names) {
    if (!object.contains(name)) throw PlayLogError(line, "missing field \"" + std::string(name) + "\"");
  }
}

std::int64_t int_field(const Json& object, std::size_t line, const char* name) {
  const Json& value = object.at(name);
  if (!value.is_number_integer()) throw PlayLogError(line, std::string("\"") + name + "\" must be an integer");
  if (value.is_number_unsigned() && value.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    throw PlayLogError(line, std::string("\"") + name + "\" out of range");
  }
  return value.get<std::int64_t>();
}

double number_field(const Json& object, std::size_t line, const char* name) {
  const Json& value = object.at(name);
  if (!value.is_number()) throw PlayLogError(line, std::string("\"") + name + "\" must be a number");
  return value.get<double>();
}

}  // namespace

void check_play_log(const PlayLog& log) {
  if (log.version != kPlayLogVersion) throw PlayLogError(0, "unsupported play log version");
  if (!is_hex_digest(log.project_digest)) throw PlayLogError(0, "project_digest must be 64 lowercase hex digits");
  if (log.tick_rate < 1 || log.tick_rate > kMaxTickRate) throw PlayLogError(0, "tick_rate must be in [1, 240]");
  if (log.end_tick < 0) throw PlayLogError(0, "end_tick must be non-negative");
  std::int64_t previous = 0;
  std::optional<std::int64_t> stop_tick;
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const TimedEvent& e = log.events[i];
    const std::size_t line = i + 2;
    if (e.tick < 0 || e.tick > log.end_tick) throw PlayLogError(line, "event tick outside [0, end_tick]");
    if (e.tick < previous) throw PlayLogError(line, "events not sorted by tick");
    if (stop_tick && e.tick > *stop_tick) throw PlayLogError(line, "event after stop");
    if (const auto* tap = std::get_if<Tap>(&e.event); tap && (!std::isfinite(tap->x) || !std::isfinite(tap->y))) {
      throw PlayLogError(line, "tap coordinates must be finite");
    }
    if (std::holds_alternative<Stop>(e.event) && !stop_tick) stop_tick = e.tick;
    previous = e.tick;
  }
  if (stop_tick && log.end_tick != *stop_tick) throw PlayLogError(0, "end_tick runs past the stop event");
}

std::string serialize_play_log(const PlayLog& log) {
  check_play_log(log);
  OrderedJson header;
  header["version"] = log.version;
  header["project_digest"] = log.project_digest;
  header["seed"] = log.seed;
  header["tick_rate"] = log.tick_rate;
  header["end_tick"] = log.end_tick;
  std::string out = header.dump() + "\n";
  for (const TimedEvent& e : log.events) {
    OrderedJson line;
    line["tick"] = e.tick;
    if (const auto* tap = std::get_if<Tap>(&e.event)) {
      line["type"] = "tap";
      line["x"] = tap->x;
      line["y"] = tap->y;
    } else {
      line["type"] = "stop";
    }
    out += line.dump();
    out += '\n';
  }
  return out;
}

PlayLog parse_play_log(std::string_view text) {
  if (text.find('\r') != std::string_view::npos) throw PlayLogError(0, "CR characters are not allowed");
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty()) throw PlayLogError(0, "empty play log");

  auto parse_line = [](std::string_view line, std::size_t number) {
    if (line.empty()) throw PlayLogError(number, "blank line");
    try {
      return Json::parse(line.begin(), line.end());
    } catch (const Json::exception& e) {
      throw PlayLogError(number, std::string("malformed JSON: ") + e.what());
    }
  };

  PlayLog log;
  const Json header = parse_line(lines[0], 1);
  require_fields(header, 1, {"version", "project_digest", "seed", "tick_rate", "end_tick"});
  if (int_field(header, 1, "version") != kPlayLogVersion) throw PlayLogError(1, "unsupported play log version");
  if (!header.at("project_digest").is_string()) throw PlayLogError(1, "\"project_digest\" must be a string");
  log.project_digest = header.at("project_digest").get<std::string>();
  if (!header.at("seed").is_number_unsigned()) throw PlayLogError(1, "\"seed\" must be an unsigned integer");
  log.seed = header.at("seed").get<std::uint64_t>();
  log.tick_rate = int_field(header, 1, "tick_rate");
  log.end_tick = int_field(header, 1, "end_tick");

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t number = i + 1;
    const Json line = parse_line(lines[i], number);
    if (!line.is_object() || !line.contains("type") || !line.at("type").is_string()) {
      throw PlayLogError(number, "event needs a string \"type\"");
    }
    const std::string type = line.at("type").get<std::string>();
    TimedEvent event;
    if (type == "tap") {
      require_fields(line, number, {"tick", "type", "x", "y"});
      event.event = Tap{number_field(line, number, "x"), number_field(line, number, "y")};
    } else if (type == "stop") {
      require_fields(line, number, {"tick", "type"});
      event.event = Stop{};
    } else {
      throw PlayLogError(number, "unknown event type \"" + type + "\"");
    }
    event.tick = int_field(line, number, "tick");
    log.events.push_back(std::move(event));
  }
  check_play_log(log);
  return log;
}

std::string trace_digest(const Trace& trace) {
  Sha256 hash;
  for (const TraceRecord& record : trace.records) {
    hash.update(canonical_scene_bytes(record.scene));
    hash.update(canonical_outputs_bytes(record.outputs));
  }
  return hash.hex_digest();
}

std::string serialize_trace(const Trace& trace) {
  std::string out;
  for (const TraceRecord& record : trace.records) {
    out += "{\"tick\":";
    out += std::to_string(record.outputs.tick);
    out += ",\"scene\":";
    out += canonical_scene_bytes(record.scene);
    out += ",\"outputs\":";
    out += canonical_outputs_bytes(record.outputs);
    out += "}\n";
  }
  return out;
}

Recorder::Recorder(std::shared_ptr<const Project> project, std::uint64_t seed,
                   std::optional<std::int64_t> tick_rate_override)
    : session_(std::move(project), seed, tick_rate_override),
      project_digest_(project_digest(session_.project())) {}

void Recorder::inject(const EventIn& event) {
  if (session_.stopped()) return;
  session_.inject(event);
  events_.push_back(TimedEvent{session_.tick(), event});
}

TickOutputs Recorder::step() {
  TickOutputs outputs = session_.step();
  trace_.records.push_back(TraceRecord{session_.scene(), outputs});
  return outputs;
}

PlayLog Recorder::play_log() const {
  if (session_.tick() == 0) throw std::logic_error("play_log before the first step");
  PlayLog log;
  log.project_digest = project_digest_;
  log.seed = session_.seed();
  log.tick_rate = session_.tick_rate();
  log.end_tick = session_.tick() - 1;
  for (const TimedEvent& e : events_) {
    if (e.tick <= log.end_tick) log.events.push_back(e);
  }
  return log;
}

PlayLog record(std::shared_ptr<const Project> project, std::uint64_t seed,
               const std::vector<TimedEvent>& schedule, std::int64_t until_tick,
               std::optional<std::int64_t> tick_rate_override) {
  Recorder recorder(std::move(project), seed, tick_rate_override);
  std::size_t next = 0;
  for (std::int64_t t = 0; t <= until_tick && !recorder.session().stopped(); ++t) {
    while (next < schedule.size() && schedule[next].tick <= t) {
      if (schedule[next].tick == t) recorder.inject(schedule[next].event);
      ++next;
    }
    recorder.step();
  }
  return recorder.play_log();
}

Trace replay(const Project& project, const PlayLog& log) {
  check_play_log(log);
  if (project_digest(project) != log.project_digest) {
    throw DigestMismatchError("play log was recorded for a different project (digest " + log.project_digest + ")");
  }
  Session session(std::make_shared<const Project>(project), log.seed, log.tick_rate);
  Trace trace;
  trace.records.reserve(static_cast<std::size_t>(log.end_tick + 1));
  std::size_t next = 0;
  for (std::int64_t t = 0; t <= log.end_tick; ++t) {
    while (next < log.events.size() && log.events[next].tick == t) session.inject(log.events[next++].event);
    TickOutputs outputs = session.step();
    trace.records.push_back(TraceRecord{session.scene(), std::move(outputs)});
  }
  return trace;
}

bool verify(const Project& project, const PlayLog& log, std::string_view expected_digest) {
  return trace_digest(replay(project, log)) == expected_digest;
}

}  // namespace brickstage
