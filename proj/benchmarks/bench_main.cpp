#include <benchmark/benchmark.h>

#include "quartet/estimate.hpp"
#include "quartet/lineshape.hpp"
#include "quartet/presets.hpp"
#include "quartet/sequences.hpp"
#include "quartet/superop.hpp"

namespace {

using namespace quartet;

dynamics::DriveState probe_a1() {
  dynamics::DriveState d;
  d.resonant_rabi_a1 = sequences::rabi_mhz_at_20nw;
  return d;
}

void bm_generator_build(benchmark::State& state) {
  const auto config = presets::model("table2_no_strain");
  const auto drive = probe_a1();
  for (auto _ : state) {
    superop::SegmentGenerator gen(config, drive);
    benchmark::DoNotOptimize(gen.matrix());
  }
}
BENCHMARK(bm_generator_build);

void bm_propagator_exp(benchmark::State& state) {
  const auto config = presets::model("table2_no_strain");
  superop::SegmentGenerator gen(config, probe_a1());
  double dt = 0.01;
  for (auto _ : state) {
    // Slightly different step each iteration defeats the propagator cache.
    dt += 1e-9;
    benchmark::DoNotOptimize(gen.propagator(dt));
  }
}
BENCHMARK(bm_propagator_exp);

void bm_steady_state(benchmark::State& state) {
  const auto config = presets::model("table2_no_strain");
  const auto pump = presets::pump("pump730_50uw_no_strain");
  for (auto _ : state) {
    superop::SegmentGenerator gen(config, pump);
    benchmark::DoNotOptimize(gen.steady_state());
  }
}
BENCHMARK(bm_steady_state);

void bm_rk4_window(benchmark::State& state) {
  auto config = presets::model("table2_no_strain");
  config.solver.method = dynamics::SolverOptions::Method::rk4;
  const auto rho0 = dynamics::DensityMatrix::mixed_ground();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dynamics::propagate(rho0, config, probe_a1(), 0.3));
  }
}
BENCHMARK(bm_rk4_window);

void bm_visibility(benchmark::State& state) {
  const auto config = presets::model("table2_no_strain");
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sequences::visibility_experiment(config, Transition::A1));
  }
}
BENCHMARK(bm_visibility);

void bm_fit_objective(benchmark::State& state) {
  const auto config = presets::model("table2_no_strain");
  estimate::FitProblem problem;
  problem.baseline = config;
  problem.sigma.rule = estimate::SigmaModel::Rule::relative;
  estimate::Dataset ds;
  ds.experiment.kind = estimate::ExperimentSpec::Kind::lifetime;
  ds.experiment.transition = Transition::A1;
  ds.data = estimate::simulate_experiment(config, ds.experiment);
  problem.datasets.push_back(ds);
  problem.free_params.push_back({"gamma_r", 56.39, 1.0, 200.0});
  Eigen::VectorXd x(1);
  x << 56.39;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate::fit_objective(problem, x));
  }
}
BENCHMARK(bm_fit_objective);

void bm_overlap_fft(benchmark::State& state) {
  const auto modes = lineshape::synthetic_modes();
  for (auto _ : state) {
    benchmark::DoNotOptimize(lineshape::overlap_function(modes, 1.0));
  }
}
BENCHMARK(bm_overlap_fft);

}  // namespace

BENCHMARK_MAIN();
