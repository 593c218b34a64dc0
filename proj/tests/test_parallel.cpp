#include <doctest.h>

#include "pumpcause/features.hpp"
#include "pumpcause/hazard_model.hpp"
#include "pumpcause/nuts.hpp"
#include "pumpcause/synth.hpp"

using namespace pumpcause;

TEST_CASE("chains: serial and parallel paths are bit-identical") {
  SynthConfig sc;
  sc.n_pumps = 8;
  const auto data = generate_hazard_data(sc).dataset;
  HazardModel model(data);
  const LogDensityFn logp = [&](const Eigen::VectorXd& q, Eigen::VectorXd& g) { return model.log_posterior_grad(q, g); };
  SamplerConfig cfg;
  cfg.n_draws = 60;
  cfg.n_tune = 60;
  cfg.n_chains = 4;
  cfg.seed = 3;
  cfg.parallelism = Parallelism::serial();
  const auto a = sample(logp, model.dim(), cfg);
  cfg.parallelism = Parallelism::with_threads(4);
  const auto b = sample(logp, model.dim(), cfg);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(a.draws[c] == b.draws[c]);
    CHECK(a.chains[c].step_size == b.chains[c].step_size);
    CHECK(a.chains[c].divergences == b.chains[c].divergences);
  }
}

TEST_CASE("features: serial and parallel paths are bit-identical") {
  SynthConfig sc;
  sc.n_pumps = 12;
  const auto series = generate_hazard_data(sc).series;
  FeatureSettings fs;
  fs.parallelism = Parallelism::serial();
  const auto a = extract_features(series, common_last_day(series), fs);
  fs.parallelism = Parallelism::with_threads(3);
  const auto b = extract_features(series, common_last_day(series), fs);
  CHECK(a.values == b.values);
}

TEST_CASE("worker errors propagate") {
  CHECK_THROWS_AS(for_each_index(8, Parallelism::with_threads(2),
                                 [](std::size_t i) {
                                   if (i == 5) throw std::runtime_error("boom");
                                 }),
                  std::runtime_error);
  CHECK(Parallelism::with_threads(1).mode == Execution::serial);
  CHECK(Parallelism::serial().resolved_threads() == 1);
}
