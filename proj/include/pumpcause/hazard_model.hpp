#ifndef PUMPCAUSE_HAZARD_MODEL_HPP
#define PUMPCAUSE_HAZARD_MODEL_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pumpcause/data.hpp"

namespace pumpcause {

/// Below this value of lambda * dt the transition probability is clamped.
inline constexpr double kProbabilityFloor = 1e-15;

/**
 * Position of each parameter block inside the flat sampler vector:
 * [log_lambda0 (K) | beta (p) | u_raw (n_pumps) | zeta = log sigma_u].
 */
struct ParamLayout {
  int n_states = kDefaultStates;
  int n_covariates = 0;
  int n_pumps = 0;

  static ParamLayout for_data(const Dataset& data) { return {data.n_states, data.n_covariates, data.n_pumps}; }

  int dim() const { return n_states + n_covariates + n_pumps + 1; }
  int log_lambda0(int k) const { return k - 1; }  // k is 1-based
  int beta(int j) const { return n_states + j; }
  int u_raw(int i) const { return n_states + n_covariates + i; }
  int log_sigma() const { return n_states + n_covariates + n_pumps; }

  /// Column names used by the draws export.
  std::vector<std::string> names() const;
};

struct ModelParams {
  Eigen::VectorXd log_lambda0;  // length K
  Eigen::VectorXd beta;         // length p
  Eigen::VectorXd u_raw;        // length n_pumps
  double sigma_u = 1.0;

  double u(int i) const { return u_raw[i] * sigma_u; }
};

/// Flat parameter vector in sampler space (sigma_u stored as its log).
using UnconstrainedParams = Eigen::VectorXd;

ModelParams to_constrained(const ParamLayout& layout, const UnconstrainedParams& theta);
UnconstrainedParams to_unconstrained(const ParamLayout& layout, const ModelParams& params);

struct PriorSpec {
  double mu_log_lambda0 = -5.0;
  double sd_log_lambda0 = 2.0;
  double sd_beta = 1.0;
  double sigma_u_scale = 1.0;  // Half-Normal scale

  void validate() const;
};

/// exp(log_lambda0[k] + beta'x + u_raw[i] * sigma_u).
double hazard_rate(const ModelParams& params, int k, std::span<const double> x, int i);

/// 1 - exp(-lambda dt), without clamping.
double transition_prob(double lambda, double delta_t);

/// Log-likelihood of one interval as a function of eta = log lambda.
inline double interval_log_lik(double eta, double delta_t, int y);
/// d interval_log_lik / d eta.
inline double interval_log_lik_deta(double eta, double delta_t, int y);

double log_likelihood(const ModelParams& params, const Dataset& data);
double log_prior(const ModelParams& params, const PriorSpec& prior = {});

/**
 * Hierarchical hazard posterior in unconstrained space. Holds a packed copy
 * of the observations; const member functions are safe to call from several
 * chains at once.
 */
class HazardModel {
public:
  explicit HazardModel(const Dataset& data, PriorSpec prior = {});

  const ParamLayout& layout() const { return layout_; }
  int dim() const { return layout_.dim(); }

  double log_likelihood(const UnconstrainedParams& theta) const;
  double log_prior(const UnconstrainedParams& theta) const;
  /// log_likelihood + log_prior + zeta (log-Jacobian of sigma_u = exp(zeta)).
  double log_posterior(const UnconstrainedParams& theta) const;
  /// Returns the log posterior and writes its gradient into grad (resized).
  double log_posterior_grad(const UnconstrainedParams& theta, Eigen::VectorXd& grad) const;

private:
  ParamLayout layout_;
  PriorSpec prior_;
  std::vector<int> pump_;
  std::vector<int> state_;
  std::vector<double> delta_t_;
  std::vector<int> y_;
  std::vector<double> x_;  // row-major, n_obs x p
};

double log_posterior_unconstrained(const UnconstrainedParams& theta, const Dataset& data,
                                   const PriorSpec& prior = {});
Eigen::VectorXd grad_log_posterior(const UnconstrainedParams& theta, const Dataset& data,
                                   const PriorSpec& prior = {});

// --- inline definitions ---

inline double interval_log_lik(double eta, double delta_t, int y) {
  const double a = std::exp(eta) * delta_t;
  if (y == 0) return -a;  // log(1 - p) = -lambda dt
  if (a < kProbabilityFloor) return std::log(kProbabilityFloor);
  return std::log(-std::expm1(-a));
}

inline double interval_log_lik_deta(double eta, double delta_t, int y) {
  const double a = std::exp(eta) * delta_t;
  if (y == 0) return -a;
  if (a < kProbabilityFloor) return 0.0;  // clamped region is flat
  if (!std::isfinite(a)) return 0.0;       // a exp(-a) / (1 - exp(-a)) -> 0
  // a * exp(-a) / (1 - exp(-a))
  return a / std::expm1(a);
}

}  // namespace pumpcause

#endif  // PUMPCAUSE_HAZARD_MODEL_HPP
