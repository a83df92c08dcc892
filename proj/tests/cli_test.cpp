#include <gtest/gtest.h>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "brickstage/frame_export.hpp"
#include "brickstage/project_io.hpp"
#include "brickstage/replay.hpp"
#include "brickstage/session_server.hpp"
#include "commands.hpp"
#include "generators.hpp"

namespace brickstage {
namespace {

namespace fs = std::filesystem;
using test::fixture;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "brickstage");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fx(const std::string& name) { return fixture(name).string(); }

std::string golden_digest() {
  std::string d = test::read_file(fixture("golden.digest"));
  d.resize(64);
  return d;
}

void write(const fs::path& path, const std::string& bytes) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << bytes;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("brickstage_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, HelpAndUsage) {
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"dance"}).code, 2);
  EXPECT_EQ(cli({"run", fx("golden.catproj.json"), "--bogus"}).code, 2);
  EXPECT_EQ(cli({"export", fx("red_square.catproj.json"), fx("red_square.catplay.jsonl"), "--out", path("o"),
                 "--format", "gif"})
                .code,
            2);
}

TEST_F(CliTest, ValidateExitCodes) {
  for (const char* name : {"golden", "hello_world", "flipnote", "red_square"}) {
    const Result ok = cli({"validate", fx(std::string(name) + ".catproj.json")});
    EXPECT_EQ(ok.code, 0) << name << ok.out << ok.err;
    EXPECT_EQ(ok.out, "");
  }

  Project bad = test::make_project({test::make_sprite("S", {test::on_start({bricks::SetCostume{"nope"}})})});
  std::string doc = serialize_project(test::make_project({test::make_sprite("S", {test::on_start({bricks::Show{}})})}));
  const std::string show = R"({"type":"Show"})";
  doc.replace(doc.find(show), show.size(), R"({"type":"SetCostume","costume":"nope"})");
  write(dir_ / "bad.catproj.json", doc);
  const Result invalid = cli({"validate", path("bad.catproj.json")});
  EXPECT_EQ(invalid.code, 1);
  const auto violations = validate(bad);
  ASSERT_FALSE(violations.empty());
  EXPECT_EQ(invalid.out, violations[0].path + ": " + violations[0].message + "\n");

  write(dir_ / "broken.catproj.json", "{\"format_version\":");
  EXPECT_EQ(cli({"validate", path("broken.catproj.json")}).code, 2);
  EXPECT_EQ(cli({"validate", path("absent.catproj.json")}).code, 2);
}

TEST_F(CliTest, RunIsDeterministic) {
  const Result a = cli({"run", fx("golden.catproj.json"), "--ticks", "90", "--seed", "5"});
  const Result b = cli({"run", fx("golden.catproj.json"), "--ticks", "90", "--seed", "5"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.size(), 65u);
  const Result other_seed = cli({"run", fx("golden.catproj.json"), "--ticks", "90", "--seed", "6"});
  EXPECT_EQ(other_seed.code, 0);

  const Project hello = parse_project(test::read_file(fixture("hello_world.catproj.json")));
  const Result h = cli({"run", fx("hello_world.catproj.json"), "--ticks", "2"});
  EXPECT_EQ(h.out, trace_digest(replay(hello, record(test::share(hello), 0, {}, 2))) + "\n");
}

TEST_F(CliTest, RunWithEvents) {
  const Result r = cli({"run", fx("golden.catproj.json"), "--events", fx("golden.catplay.jsonl"), "--trace", path("t.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, golden_digest() + "\n");
  const std::string trace = test::read_file(dir_ / "t.jsonl");
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 151);

  // The stop at tick 150 caps a longer request.
  EXPECT_EQ(cli({"run", fx("golden.catproj.json"), "--events", fx("golden.catplay.jsonl"), "--ticks", "400"}).out,
            golden_digest() + "\n");

  const Project golden = parse_project(test::read_file(fixture("golden.catproj.json")));
  PlayLog prefix = parse_play_log(test::read_file(fixture("golden.catplay.jsonl")));
  prefix.end_tick = 20;
  std::erase_if(prefix.events, [](const TimedEvent& e) { return e.tick > 20; });
  EXPECT_EQ(cli({"run", fx("golden.catproj.json"), "--events", fx("golden.catplay.jsonl"), "--ticks", "20"}).out,
            trace_digest(replay(golden, prefix)) + "\n");

  const Result seeded = cli({"run", fx("golden.catproj.json"), "--events", fx("golden.catplay.jsonl"), "--seed", "1"});
  EXPECT_EQ(seeded.out, golden_digest() + "\n");
  EXPECT_NE(seeded.err.find("424242"), std::string::npos);

  EXPECT_EQ(cli({"run", fx("flipnote.catproj.json"), "--events", fx("golden.catplay.jsonl")}).code, 1);
  EXPECT_EQ(cli({"run", fx("golden.catproj.json")}).code, 2);
  EXPECT_EQ(cli({"run", fx("golden.catproj.json"), "--ticks", "-1"}).code, 2);
}

TEST_F(CliTest, ReplayExitCodes) {
  const Result plain = cli({"replay", fx("golden.catproj.json"), fx("golden.catplay.jsonl")});
  EXPECT_EQ(plain.code, 0);
  EXPECT_EQ(plain.out, golden_digest() + "\n");

  const Result match = cli({"replay", fx("golden.catproj.json"), fx("golden.catplay.jsonl"), "--expect", golden_digest()});
  EXPECT_EQ(match.code, 0);
  EXPECT_EQ(match.out, "");

  const Result mismatch = cli({"replay", fx("golden.catproj.json"), fx("golden.catplay.jsonl"), "--expect", std::string(64, '0')});
  EXPECT_EQ(mismatch.code, 1);
  EXPECT_NE(mismatch.err.find(golden_digest()), std::string::npos);

  EXPECT_EQ(cli({"replay", fx("hello_world.catproj.json"), fx("golden.catplay.jsonl")}).code, 1);

  std::string log = test::read_file(fixture("golden.catplay.jsonl"));
  write(dir_ / "corrupt.catplay.jsonl", log.substr(0, log.size() / 2));
  EXPECT_EQ(cli({"replay", fx("golden.catproj.json"), path("corrupt.catplay.jsonl")}).code, 2);
  write(dir_ / "crlf.catplay.jsonl", log.insert(log.find('\n'), "\r"));
  EXPECT_EQ(cli({"replay", fx("golden.catproj.json"), path("crlf.catplay.jsonl")}).code, 2);
  EXPECT_EQ(cli({"replay", fx("golden.catproj.json"), path("absent.catplay.jsonl")}).code, 2);
}

TEST_F(CliTest, ExportScenes) {
  const Result r = cli({"export", fx("red_square.catproj.json"), fx("red_square.catplay.jsonl"), "--out", path("scenes"),
                        "--format", "scene"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Trace trace = replay(parse_project(test::read_file(fixture("red_square.catproj.json"))),
                             parse_play_log(test::read_file(fixture("red_square.catplay.jsonl"))));
  ASSERT_EQ(trace.records.size(), 11u);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_ / "scenes")) ++files;
  EXPECT_EQ(files, 11u);
  for (std::size_t t = 0; t < 11; ++t) {
    char name[64];
    std::snprintf(name, sizeof name, "frame_%06zu.scene.json", t);
    EXPECT_EQ(test::read_file(dir_ / "scenes" / name), canonical_scene_bytes(trace.records[t].scene)) << name;
  }
}

TEST_F(CliTest, ExportPpmFrames) {
  const Result r = cli({"export", fx("red_square.catproj.json"), fx("red_square.catplay.jsonl"), "--out", path("ppm")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string header = "P6\n4 4\n255\n";
  for (int t = 0; t <= 10; ++t) {
    char name[64];
    std::snprintf(name, sizeof name, "frame_%06d.ppm", t);
    const std::string bytes = test::read_file(dir_ / "ppm" / name);
    ASSERT_EQ(bytes.size(), header.size() + 48) << name;
    ASSERT_EQ(bytes.substr(0, header.size()), header);
    const int first_col = t < 3 ? 1 : 2;
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + header.size() + (y * 4 + x) * 3);
        const bool red = y >= 1 && y <= 2 && x >= first_col && x <= first_col + 1;
        EXPECT_EQ(px[0], 255) << name << " " << x << "," << y;
        EXPECT_EQ(px[1], red ? 0 : 255) << name << " " << x << "," << y;
        EXPECT_EQ(px[2], red ? 0 : 255) << name << " " << x << "," << y;
      }
    }
  }
  EXPECT_FALSE(fs::exists(dir_ / "ppm" / "frame_000011.ppm"));
}

TEST_F(CliTest, ExportWithMissingVisibleAssetFails) {
  const Project p = test::make_project(
      {test::make_sprite("Lost", {test::on_start({bricks::Show{}})}, {Costume{"c", "assets/lost.png", 2, 2}})});
  write(dir_ / "lost.catproj.json", serialize_project(p));
  write(dir_ / "lost.catplay.jsonl", serialize_play_log(record(test::share(p), 0, {}, 3)));
  const Result r = cli({"export", path("lost.catproj.json"), path("lost.catplay.jsonl"), "--out", path("out")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("lost.png"), std::string::npos) << r.err;
  // The scene format never touches assets.
  EXPECT_EQ(cli({"export", path("lost.catproj.json"), path("lost.catplay.jsonl"), "--out", path("out"), "--format",
                 "scene"})
                .code,
            0);
}

TEST_F(CliTest, ServeStartupFailures) {
  EXPECT_EQ(cli({"serve", path("missing_dir")}).code, 2);
  SessionServer occupying(ServerOptions{dir_, "127.0.0.1", 0, 1});
  const Result busy = cli({"serve", dir_.string(), "--port", std::to_string(occupying.port())});
  EXPECT_EQ(busy.code, 2);
  EXPECT_NE(busy.err.find("cannot listen"), std::string::npos);
  EXPECT_EQ(cli({"serve", dir_.string(), "--port", "0", "--address", "not-an-address"}).code, 2);
  EXPECT_EQ(cli({"serve", dir_.string(), "--port", "70000"}).code, 2);
}

TEST(CliProcess, ServeShutsDownCleanlyOnSigint) {
  int pipefd[2];
  ASSERT_EQ(::pipe(pipefd), 0);
  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    ::dup2(pipefd[1], STDERR_FILENO);
    ::close(pipefd[0]);
    ::close(pipefd[1]);
    const std::string dir = test::fixture_dir().string();
    ::execl(BRICKSTAGE_CLI_PATH, "brickstage", "serve", dir.c_str(), "--port", "0", static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(pipefd[1]);
  std::string banner;
  char c;
  while (banner.find('\n') == std::string::npos && ::read(pipefd[0], &c, 1) == 1) banner += c;
  EXPECT_NE(banner.find("serving"), std::string::npos) << banner;
  ASSERT_EQ(::kill(pid, SIGINT), 0);
  int status = 0;
  ASSERT_EQ(::waitpid(pid, &status, 0), pid);
  ::close(pipefd[0]);
  ASSERT_TRUE(WIFEXITED(status)) << "status " << status;
  EXPECT_EQ(WEXITSTATUS(status), 0);
}

}  // namespace
}  // namespace brickstage
