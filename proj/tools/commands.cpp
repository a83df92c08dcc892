#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "brickstage/frame_export.hpp"
#include "brickstage/project_io.hpp"
#include "brickstage/replay.hpp"
#include "brickstage/session_server.hpp"

namespace brickstage::cli {
namespace {

namespace fs = std::filesystem;

// Thrown for conditions that map directly onto an exit code.
struct Failure {
  int code;
  std::string message;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kUsageError, "cannot read " + path.string()};
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Failure{kUsageError, "cannot write " + path.string()};
}

Project load_project(const fs::path& path) {
  try {
    return parse_project(read_file(path));
  } catch (const ParseError& e) {
    throw Failure{kUsageError, path.string() + ": " + e.what()};
  }
}

PlayLog load_play_log(const fs::path& path) {
  try {
    return parse_play_log(read_file(path));
  } catch (const PlayLogError& e) {
    throw Failure{kUsageError, path.string() + ": " + e.what()};
  }
}

Trace replay_checked(const Project& project, const PlayLog& log) {
  try {
    return replay(project, log);
  } catch (const DigestMismatchError& e) {
    throw Failure{kVerificationFailed, std::string("digest mismatch: ") + e.what()};
  } catch (const PlayLogError& e) {
    throw Failure{kUsageError, std::string("malformed play log: ") + e.what()};
  }
}

int cmd_validate(const fs::path& project_path, std::ostream& out) {
  Project project;
  try {
    project = parse_project_document(read_file(project_path));
  } catch (const ParseError& e) {
    throw Failure{kUsageError, project_path.string() + ": " + e.what()};
  }
  const auto violations = validate(project);
  for (const Violation& v : violations) out << v.path << ": " << v.message << '\n';
  return violations.empty() ? kSuccess : kVerificationFailed;
}

struct RunOptions {
  fs::path project;
  std::optional<std::int64_t> ticks;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::optional<fs::path> events;
  std::optional<fs::path> trace;
};

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  const Project project = load_project(options.project);
  PlayLog log;
  if (options.events) {
    log = load_play_log(*options.events);
    if (log.project_digest != project_digest(project)) {
      throw Failure{kVerificationFailed, "digest mismatch: " + options.events->string() +
                                             " was recorded for a different project"};
    }
    if (options.seed_given && options.seed != log.seed) {
      err << "note: using seed " << log.seed << " from the play log\n";
    }
    const std::int64_t end = options.ticks.value_or(log.end_tick);
    std::erase_if(log.events, [end](const TimedEvent& e) { return e.tick > end; });
    log.end_tick = end;
    for (const TimedEvent& e : log.events) {
      if (std::holds_alternative<Stop>(e.event)) {
        log.end_tick = e.tick;
        break;
      }
    }
  } else {
    if (!options.ticks) throw Failure{kUsageError, "--ticks is required without --events"};
    log.project_digest = project_digest(project);
    log.seed = options.seed;
    log.tick_rate = project.stage.tick_rate;
    log.end_tick = *options.ticks;
  }
  if (log.end_tick < 0) throw Failure{kUsageError, "--ticks must be non-negative"};

  const Trace trace = replay_checked(project, log);
  if (options.trace) write_file(*options.trace, serialize_trace(trace));
  out << trace_digest(trace) << '\n';
  return kSuccess;
}

int cmd_replay(const fs::path& project_path, const fs::path& log_path, const std::optional<std::string>& expect,
               std::ostream& out, std::ostream& err) {
  const Project project = load_project(project_path);
  const PlayLog log = load_play_log(log_path);
  const std::string digest = trace_digest(replay_checked(project, log));
  if (!expect) {
    out << digest << '\n';
    return kSuccess;
  }
  if (digest == *expect) return kSuccess;
  err << "trace digest " << digest << " does not match expected " << *expect << '\n';
  return kVerificationFailed;
}

std::string frame_name(std::int64_t tick, std::string_view suffix) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "frame_%06lld", static_cast<long long>(tick));
  return std::string(buffer) + std::string(suffix);
}

int cmd_export(const fs::path& project_path, const fs::path& log_path, const fs::path& out_dir,
               const std::string& format, std::ostream& out) {
  const Project project = load_project(project_path);
  const PlayLog log = load_play_log(log_path);
  const Trace trace = replay_checked(project, log);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Failure{kUsageError, "cannot create " + out_dir.string() + ": " + ec.message()};

  if (format == "scene") {
    for (const TraceRecord& record : trace.records) {
      write_file(out_dir / frame_name(record.outputs.tick, ".scene.json"), canonical_scene_bytes(record.scene));
    }
  } else {
    const AssetLoadResult assets = load_costume_images(project, project_path.parent_path());
    for (const TraceRecord& record : trace.records) {
      Image image;
      try {
        image = rasterize(record.scene, project.stage.width, project.stage.height, assets.images);
      } catch (const MissingAssetError& e) {
        const auto it = assets.missing.find({e.sprite(), e.costume()});
        const std::string where = it != assets.missing.end() ? it->second.string() : e.costume();
        throw Failure{kUsageError, "missing or unreadable costume asset " + where + " (sprite \"" + e.sprite() + "\")"};
      }
      write_file(out_dir / frame_name(record.outputs.tick, ".ppm"), write_ppm(image));
    }
  }
  out << trace_digest(trace) << '\n';
  return kSuccess;
}

int cmd_serve(const fs::path& dir, std::uint16_t port, const std::string& address, std::ostream& err) {
  std::unique_ptr<SessionServer> server;
  try {
    server = std::make_unique<SessionServer>(ServerOptions{dir, address, port, 2});
  } catch (const std::invalid_argument& e) {
    throw Failure{kUsageError, e.what()};
  } catch (const std::system_error& e) {
    throw Failure{kUsageError, "cannot listen on " + address + ":" + std::to_string(port) + ": " + e.what()};
  }
  err << "serving " << dir.string() << " on ws://" << address << ':' << server->port() << "/\n";
  err.flush();
  server->run(/*handle_signals=*/true);
  err << "shut down\n";
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic block-program runtime with record/replay", "brickstage"};
  app.require_subcommand(1);

  fs::path validate_project;
  auto* validate_cmd = app.add_subcommand("validate", "Check a project document for violations");
  validate_cmd->add_option("project", validate_project, "Project document (.catproj.json)")->required();

  RunOptions run_options;
  auto* run_cmd = app.add_subcommand("run", "Run a project headless and print the trace digest");
  run_cmd->add_option("project", run_options.project, "Project document")->required();
  run_cmd->add_option("--ticks", run_options.ticks, "Last tick to run (records 0..N)");
  auto* seed_opt = run_cmd->add_option("--seed", run_options.seed, "RNG seed");
  run_cmd->add_option("--events", run_options.events, "Play log whose events are injected");
  run_cmd->add_option("--trace", run_options.trace, "Write the trace as JSON lines");

  fs::path replay_project;
  fs::path replay_log;
  std::optional<std::string> expect;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a play log and print or check its digest");
  replay_cmd->add_option("project", replay_project, "Project document")->required();
  replay_cmd->add_option("playlog", replay_log, "Play log (.catplay.jsonl)")->required();
  replay_cmd->add_option("--expect", expect, "Expected trace digest");

  fs::path export_project;
  fs::path export_log;
  fs::path export_out;
  std::string export_format = "ppm";
  auto* export_cmd = app.add_subcommand("export", "Replay a play log and write one file per tick");
  export_cmd->add_option("project", export_project, "Project document")->required();
  export_cmd->add_option("playlog", export_log, "Play log")->required();
  export_cmd->add_option("--out", export_out, "Output directory")->required();
  export_cmd->add_option("--format", export_format, "ppm or scene")
      ->check(CLI::IsMember({"ppm", "scene"}));

  fs::path serve_dir;
  std::uint16_t serve_port = 8080;
  std::string serve_address = "127.0.0.1";
  auto* serve_cmd = app.add_subcommand("serve", "Serve live sessions over WebSocket");
  serve_cmd->add_option("project_dir", serve_dir, "Directory of project documents")->required();
  serve_cmd->add_option("--port", serve_port, "TCP port");
  serve_cmd->add_option("--address", serve_address, "Listen address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kUsageError;
  }
  run_options.seed_given = seed_opt->count() > 0;

  try {
    if (validate_cmd->parsed()) return cmd_validate(validate_project, out);
    if (run_cmd->parsed()) return cmd_run(run_options, out, err);
    if (replay_cmd->parsed()) return cmd_replay(replay_project, replay_log, expect, out, err);
    if (export_cmd->parsed()) return cmd_export(export_project, export_log, export_out, export_format, out);
    if (serve_cmd->parsed()) return cmd_serve(serve_dir, serve_port, serve_address, err);
  } catch (const Failure& f) {
    err << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace brickstage::cli
