#include <filesystem>

#include <benchmark/benchmark.h>

#include "tsmor/experiment.hpp"

namespace {

using namespace tsmor;

struct Building {
  ExperimentConfig cfg;
  StateSpaceModel model;
  GeneratorPair g;
  MomentMatrices mm;

  static const Building& get() {
    static const Building b = [] {
      auto cfg = load_config_file(std::filesystem::path(TSMOR_BUILDING_DIR) / "experiment.cfg");
      auto m = load_model(cfg.model_path);
      auto g = build_generator_pair(cfg.set_S, cfg.set_Q);
      auto mm = exact_moment_matrices(m, g);
      return Building{std::move(cfg), std::move(m), std::move(g), std::move(mm)};
    }();
    return b;
  }
};

void BM_MatrixExponential(benchmark::State& state) {
  const auto& b = Building::get();
  for (auto _ : state) benchmark::DoNotOptimize(matrix_exponential(b.model.A(), 0.1));
}
BENCHMARK(BM_MatrixExponential)->Unit(benchmark::kMicrosecond);

void BM_SylvesterSchur(benchmark::State& state) {
  const auto& b = Building::get();
  for (auto _ : state) benchmark::DoNotOptimize(solve_sylvester_pi(b.model, b.g));
}
BENCHMARK(BM_SylvesterSchur)->Unit(benchmark::kMicrosecond);

void BM_SylvesterKronecker(benchmark::State& state) {
  const auto& b = Building::get();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_sylvester_pi(b.model, b.g, SylvesterMethod::kronecker));
  }
}
BENCHMARK(BM_SylvesterKronecker)->Unit(benchmark::kMillisecond);

void BM_TwoSidedSimulation(benchmark::State& state) {
  const auto& b = Building::get();
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_two_sided(b.model, b.g, b.g.omega0, 0.1, 40.0));
  }
}
BENCHMARK(BM_TwoSidedSimulation)->Unit(benchmark::kMillisecond);

// One regression at t_k = 40 s over a window of `range(0)` samples.
void BM_UpiEstimate(benchmark::State& state) {
  const auto& b = Building::get();
  auto tr = simulate_two_sided(b.model, b.g, b.g.omega0, 0.1, 40.0);
  attach_exact_d(tr, b.mm.Upsilon);
  const auto method = state.range(1) ? LsMethod::kronecker : LsMethod::structured;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        estimate_upi(tr, tr.samples() - 1, state.range(0), DChannel::exact, kDefaultRankTol, method));
  }
}
BENCHMARK(BM_UpiEstimate)
    ->ArgsProduct({{20, 100}, {0, 1}})
    ->ArgNames({"p", "kron"})
    ->Unit(benchmark::kMicrosecond);

void BM_Algorithm1(benchmark::State& state) {
  const auto& b = Building::get();
  const auto tr = simulate_two_sided(b.model, b.g, b.g.omega0, 0.1, 40.0);
  Algorithm1Options opt;
  opt.continue_after_stop = true;
  for (auto _ : state) benchmark::DoNotOptimize(run_algorithm1(tr, b.g, b.mm.UB, Tolerances{}, opt));
  state.SetItemsProcessed(state.iterations() * tr.samples());
}
BENCHMARK(BM_Algorithm1)->Unit(benchmark::kMillisecond);

void BM_BuildingExperiment(benchmark::State& state) {
  const auto& b = Building::get();
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(b.cfg, b.model));
}
BENCHMARK(BM_BuildingExperiment)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
