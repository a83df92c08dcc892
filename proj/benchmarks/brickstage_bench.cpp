#include <benchmark/benchmark.h>

#include "brickstage/frame_export.hpp"
#include "brickstage/project_io.hpp"
#include "brickstage/replay.hpp"
#include "generators.hpp"

namespace {

using namespace brickstage;

Project load(const std::string& stem) { return parse_project(test::read_file(test::fixture(stem + ".catproj.json"))); }
PlayLog load_log(const std::string& stem) {
  return parse_play_log(test::read_file(test::fixture(stem + ".catplay.jsonl")));
}

// Sprites each running a forever loop of movement plus a broadcast echo.
Project busy_project(int sprites) {
  std::vector<Sprite> list;
  for (int i = 0; i < sprites; ++i) {
    list.push_back(test::make_sprite(
        "S" + std::to_string(i),
        {test::on_start({bricks::Forever{{bricks::ChangeXBy{1}, bricks::ChangeYBy{-1}, bricks::Broadcast{"tick"}}}}),
         test::on_receive("tick", {bricks::NextCostume{}, bricks::Wait{50}})},
        {Costume{"a", "a.png", 8, 8}, Costume{"b", "b.png", 8, 8}}));
  }
  return test::make_project(std::move(list));
}

void BM_SessionStep(benchmark::State& state) {
  Session session(test::share(busy_project(static_cast<int>(state.range(0)))), 1);
  for (auto _ : state) benchmark::DoNotOptimize(session.step());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SessionStep)->Arg(1)->Arg(8)->Arg(64);

void BM_ReplayGolden(benchmark::State& state) {
  const Project project = load("golden");
  const PlayLog log = load_log("golden");
  for (auto _ : state) benchmark::DoNotOptimize(replay(project, log));
  state.SetItemsProcessed(state.iterations() * (log.end_tick + 1));
}
BENCHMARK(BM_ReplayGolden);

void BM_TraceDigest(benchmark::State& state) {
  const Trace trace = replay(load("golden"), load_log("golden"));
  for (auto _ : state) benchmark::DoNotOptimize(trace_digest(trace));
}
BENCHMARK(BM_TraceDigest);

void BM_ParseProject(benchmark::State& state) {
  test::Rng rng(3);
  std::vector<std::string> docs;
  for (int i = 0; i < 64; ++i) docs.push_back(serialize_project(test::random_project(rng)));
  std::size_t i = 0;
  std::int64_t bytes = 0;
  for (auto _ : state) {
    const std::string& doc = docs[i++ % docs.size()];
    benchmark::DoNotOptimize(parse_project(doc));
    bytes += static_cast<std::int64_t>(doc.size());
  }
  state.SetBytesProcessed(bytes);
}
BENCHMARK(BM_ParseProject);

void BM_SerializeProject(benchmark::State& state) {
  const Project project = load("golden");
  for (auto _ : state) benchmark::DoNotOptimize(serialize_project(project));
}
BENCHMARK(BM_SerializeProject);

void BM_Rasterize(benchmark::State& state) {
  const Project project = load("golden");
  const AssetLoadResult assets = load_costume_images(project, test::fixture_dir());
  const Trace trace = replay(project, load_log("golden"));
  std::size_t i = 0;
  for (auto _ : state) {
    const Scene& scene = trace.records[i++ % trace.records.size()].scene;
    benchmark::DoNotOptimize(rasterize(scene, project.stage.width, project.stage.height, assets.images));
  }
}
BENCHMARK(BM_Rasterize);

}  // namespace

BENCHMARK_MAIN();
