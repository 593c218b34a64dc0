// Serial reference path versus the OpenMP path for the three parallel kernels.
// Run with --benchmark_filter=... ; thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "pumpcause/features.hpp"
#include "pumpcause/hazard_model.hpp"
#include "pumpcause/lingam.hpp"
#include "pumpcause/nuts.hpp"
#include "pumpcause/synth.hpp"

namespace {

using namespace pumpcause;

Parallelism mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Parallelism::serial() : Parallelism{};
}

void BM_Chains(benchmark::State& state) {
  SynthConfig synth;
  synth.seed = 7;
  const auto data = generate_hazard_data(synth).dataset;
  const HazardModel model(data);
  SamplerConfig config;
  config.n_draws = 200;
  config.n_tune = 200;
  config.seed = 7;
  config.parallelism = mode(state);
  for (auto _ : state) {
    auto samples = sample([&](const Eigen::VectorXd& q, Eigen::VectorXd& g) { return model.log_posterior_grad(q, g); },
                          model.dim(), config);
    benchmark::DoNotOptimize(samples.draws.data());
  }
}
BENCHMARK(BM_Chains)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_Bootstrap(benchmark::State& state) {
  const auto sem = generate_random_sem(6, 2000, 11);
  const auto point = fit_lingam(sem.data).adjacency;
  for (auto _ : state) {
    auto result = bootstrap_cis(sem.data, point, 100, 11, {}, mode(state));
    benchmark::DoNotOptimize(result.ci_low.data());
  }
}
BENCHMARK(BM_Bootstrap)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_Features(benchmark::State& state) {
  SynthConfig synth;
  synth.n_pumps = 500;
  synth.seed = 3;
  const auto series = generate_hazard_data(synth).series;
  FeatureSettings settings;
  settings.parallelism = mode(state);
  const long end = common_last_day(series);
  for (auto _ : state) {
    auto features = extract_features(series, end, settings);
    benchmark::DoNotOptimize(features.values.data());
  }
}
BENCHMARK(BM_Features)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
