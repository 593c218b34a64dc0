#ifndef PUMPCAUSE_NUTS_HPP
#define PUMPCAUSE_NUTS_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "pumpcause/parallel.hpp"

namespace pumpcause {

/// Returns log density at q and writes its gradient into grad. Must be safe
/// to call concurrently from several chains.
using LogDensityFn = std::function<double(const Eigen::VectorXd& q, Eigen::VectorXd& grad)>;

struct SamplerConfig {
  int n_draws = 2000;
  int n_tune = 1000;
  int n_chains = 8;
  double target_accept = 0.95;
  int max_tree_depth = 10;
  std::uint64_t seed = 0;
  Parallelism parallelism{};

  void validate() const;
};

/// Energy error above which a trajectory is declared divergent.
inline constexpr double kDivergenceThreshold = 1000.0;

struct ChainSummary {
  int divergences = 0;         // post-warmup
  int warmup_divergences = 0;
  double step_size = 0.0;
  double mean_accept_stat = 0.0;  // post-warmup
  double mean_tree_depth = 0.0;
  long leapfrog_steps = 0;
  Eigen::VectorXd inv_metric;
};

struct ParameterDiagnostics {
  double rhat = 1.0;
  double ess = 0.0;
};

struct PosteriorSamples {
  int n_chains = 0;
  int n_draws = 0;
  int dim = 0;
  std::vector<Eigen::MatrixXd> draws;  // one (n_draws x dim) matrix per chain
  std::vector<ChainSummary> chains;
  std::vector<ParameterDiagnostics> diagnostics;  // one per parameter

  /// (n_chains x n_draws) matrix of one parameter.
  Eigen::MatrixXd parameter(int d) const;
  int total_divergences() const;
  double max_rhat() const;
  double min_ess() const;
};

/**
 * Multinomial No-U-Turn sampler with a diagonal metric.
 *
 * Each chain starts from a uniform draw on [-1, 1]^dim, runs n_tune warmup
 * iterations (dual-averaging step size toward target_accept; metric
 * variances estimated in windows of 75 / 25, 50, 100, ... / 50 iterations)
 * and then keeps n_draws draws at the final step size. Chains run through
 * for_each_index, each on its own Rng stream (seed, chain).
 */
PosteriorSamples sample(const LogDensityFn& log_density, int dim, const SamplerConfig& config);

/// Fills in samples.diagnostics from the stored draws.
void compute_diagnostics(PosteriorSamples& samples);

}  // namespace pumpcause

#endif  // PUMPCAUSE_NUTS_HPP
