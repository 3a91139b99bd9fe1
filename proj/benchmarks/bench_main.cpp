#include <benchmark/benchmark.h>

#include "degen/degen_teacher.hpp"
#include "degen/features.hpp"
#include "degen/gridworld.hpp"
#include "degen/levelgen.hpp"
#include "degen/network.hpp"
#include "degen/scoring.hpp"
#include "degen/solvability.hpp"

using namespace degen;

namespace {

Level bench_level(Family family, int size) {
  GenConfig gc;
  gc.family = family;
  gc.size = size;
  return random_level(gc, 7);
}

void BM_EnvStep(benchmark::State& state) {
  const Level level = bench_level(Family::KeyMinigrid, 13);
  const auto acts = student_actions(level.family);
  Rng rng(1);
  EnvState env = reset(level);
  for (auto _ : state) {
    if (env.done) env = reset(level);
    benchmark::DoNotOptimize(step(env, acts[rng.below(acts.size())]));
  }
}
BENCHMARK(BM_EnvStep);

void BM_Observe(benchmark::State& state) {
  const EnvState env = reset(bench_level(Family::Minigrid, 13));
  for (auto _ : state) benchmark::DoNotOptimize(observe(env));
}
BENCHMARK(BM_Observe);

void BM_RandomLevel(benchmark::State& state) {
  GenConfig gc;
  gc.family = Family::KeyMinigrid;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(random_level(gc, seed++));
}
BENCHMARK(BM_RandomLevel);

void BM_BfsSolvable(benchmark::State& state) {
  const Level level = bench_level(Family::KeyMinigrid, 13);
  for (auto _ : state) benchmark::DoNotOptimize(bfs_solvable(level));
}
BENCHMARK(BM_BfsSolvable);

Trajectory bench_trajectory(int T) {
  Rng rng(3);
  Trajectory tr;
  for (int t = 0; t < T; ++t) tr.rewards.push_back(t + 1 == T ? 0.7 : 0.0);
  for (int t = 0; t <= T; ++t) tr.values.push_back(rng.uniform());
  tr.values.back() = 0.0;
  tr.solved = true;
  return tr;
}

void BM_LambdaRegrets(benchmark::State& state) {
  const Trajectory tr = bench_trajectory(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lambda_regrets(tr, 0.995, 0.95));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LambdaRegrets)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_Pvl(benchmark::State& state) {
  const Trajectory tr = bench_trajectory(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pvl(tr, 0.995, 0.95));
}
BENCHMARK(BM_Pvl)->Range(16, 1024);

void BM_ForwardStep(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  const PolicyParams params = PolicyParams::init(student_shape(Family::KeyMinigrid, hidden, hidden), 1);
  const EnvState env = reset(bench_level(Family::KeyMinigrid, 13));
  std::vector<double> feats;
  encode_student(observe(env), feats);
  Memory mem = Memory::zeros(hidden);
  for (auto _ : state) benchmark::DoNotOptimize(forward_step(params, feats, mem));
}
BENCHMARK(BM_ForwardStep)->Arg(32)->Arg(64)->Arg(256);

void BM_DegenEpisode(benchmark::State& state) {
  Rng rng(5);
  const TeacherPolicy teacher = [&](const TeacherObservation&, const TeacherMask& m) {
    TeacherAction a;
    do {
      a = {static_cast<int>(rng.below(kViewCells)), static_cast<int>(rng.below(kTeacherObjects))};
    } while (!m.allows(a));
    return a;
  };
  const StudentPolicy student = [&](const Observation&) {
    return student_actions(Family::Minigrid)[rng.below(3)];
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_degen_episode(GenerationState::fresh(Family::Minigrid, 13, 0, rng), teacher, student, 1 << 20));
  }
}
BENCHMARK(BM_DegenEpisode);

}  // namespace

BENCHMARK_MAIN();
