#include "pumpcause/hazard_model.hpp"

#include <cmath>
#include <numbers>

#include "pumpcause/errors.hpp"

namespace pumpcause {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double normal_log_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kHalfLog2Pi;
}

double half_normal_log_density(double x, double scale) {
  const double z = x / scale;
  return 0.5 * std::log(2.0 / std::numbers::pi) - std::log(scale) - 0.5 * z * z;
}

}  // namespace

std::vector<std::string> ParamLayout::names() const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(dim()));
  for (int k = 1; k <= n_states; ++k) out.push_back("log_lambda0[" + std::to_string(k) + "]");
  for (int j = 0; j < n_covariates; ++j) out.push_back("beta[" + std::to_string(j) + "]");
  for (int i = 0; i < n_pumps; ++i) out.push_back("u_raw[" + std::to_string(i) + "]");
  out.push_back("log_sigma_u");
  return out;
}

ModelParams to_constrained(const ParamLayout& layout, const UnconstrainedParams& theta) {
  if (theta.size() != layout.dim()) throw ValidationError("parameter vector has wrong dimension");
  ModelParams p;
  p.log_lambda0 = theta.segment(layout.log_lambda0(1), layout.n_states);
  p.beta = theta.segment(layout.beta(0), layout.n_covariates);
  p.u_raw = theta.segment(layout.u_raw(0), layout.n_pumps);
  p.sigma_u = std::exp(theta[layout.log_sigma()]);
  return p;
}

UnconstrainedParams to_unconstrained(const ParamLayout& layout, const ModelParams& params) {
  if (!(params.sigma_u > 0.0)) throw ValidationError("sigma_u must be positive");
  UnconstrainedParams theta(layout.dim());
  theta.segment(layout.log_lambda0(1), layout.n_states) = params.log_lambda0;
  theta.segment(layout.beta(0), layout.n_covariates) = params.beta;
  theta.segment(layout.u_raw(0), layout.n_pumps) = params.u_raw;
  theta[layout.log_sigma()] = std::log(params.sigma_u);
  return theta;
}

void PriorSpec::validate() const {
  if (!(sd_log_lambda0 > 0.0) || !(sd_beta > 0.0) || !(sigma_u_scale > 0.0))
    throw ValidationError("prior scales must be positive");
}

double hazard_rate(const ModelParams& params, int k, std::span<const double> x, int i) {
  double eta = params.log_lambda0[k - 1] + params.u(i);
  for (std::size_t j = 0; j < x.size(); ++j) eta += params.beta[static_cast<Eigen::Index>(j)] * x[j];
  return std::exp(eta);
}

double transition_prob(double lambda, double delta_t) { return -std::expm1(-lambda * delta_t); }

double log_likelihood(const ModelParams& params, const Dataset& data) {
  double total = 0.0;
  for (const auto& obs : data.observations) {
    double eta = params.log_lambda0[obs.state_index - 1] + params.u(obs.pump_index);
    for (std::size_t j = 0; j < obs.x.size(); ++j) eta += params.beta[static_cast<Eigen::Index>(j)] * obs.x[j];
    total += interval_log_lik(eta, obs.delta_t, obs.y);
  }
  return total;
}

double log_prior(const ModelParams& params, const PriorSpec& prior) {
  double lp = 0.0;
  for (double v : params.log_lambda0) lp += normal_log_density(v, prior.mu_log_lambda0, prior.sd_log_lambda0);
  for (double v : params.beta) lp += normal_log_density(v, 0.0, prior.sd_beta);
  for (double v : params.u_raw) lp += normal_log_density(v, 0.0, 1.0);
  lp += half_normal_log_density(params.sigma_u, prior.sigma_u_scale);
  return lp;
}

HazardModel::HazardModel(const Dataset& data, PriorSpec prior) : layout_(ParamLayout::for_data(data)), prior_(prior) {
  data.validate();
  prior_.validate();
  const auto n = data.observations.size();
  pump_.reserve(n);
  state_.reserve(n);
  delta_t_.reserve(n);
  y_.reserve(n);
  x_.reserve(n * static_cast<std::size_t>(layout_.n_covariates));
  for (const auto& obs : data.observations) {
    pump_.push_back(obs.pump_index);
    state_.push_back(obs.state_index);
    delta_t_.push_back(obs.delta_t);
    y_.push_back(obs.y);
    x_.insert(x_.end(), obs.x.begin(), obs.x.end());
  }
}

double HazardModel::log_likelihood(const UnconstrainedParams& theta) const {
  const int p = layout_.n_covariates;
  const double sigma = std::exp(theta[layout_.log_sigma()]);
  double total = 0.0;
  for (std::size_t n = 0; n < pump_.size(); ++n) {
    double eta = theta[layout_.log_lambda0(state_[n])] + theta[layout_.u_raw(pump_[n])] * sigma;
    const double* x = x_.data() + n * static_cast<std::size_t>(p);
    for (int j = 0; j < p; ++j) eta += theta[layout_.beta(j)] * x[j];
    total += interval_log_lik(eta, delta_t_[n], y_[n]);
  }
  return total;
}

double HazardModel::log_prior(const UnconstrainedParams& theta) const {
  return pumpcause::log_prior(to_constrained(layout_, theta), prior_);
}

double HazardModel::log_posterior(const UnconstrainedParams& theta) const {
  return log_likelihood(theta) + log_prior(theta) + theta[layout_.log_sigma()];
}

double HazardModel::log_posterior_grad(const UnconstrainedParams& theta, Eigen::VectorXd& grad) const {
  const int K = layout_.n_states;
  const int p = layout_.n_covariates;
  const int N = layout_.n_pumps;
  const int zeta_index = layout_.log_sigma();
  const double zeta = theta[zeta_index];
  const double sigma = std::exp(zeta);

  grad.setZero(layout_.dim());
  double lp = 0.0;

  for (std::size_t n = 0; n < pump_.size(); ++n) {
    const int ll_index = layout_.log_lambda0(state_[n]);
    const int u_index = layout_.u_raw(pump_[n]);
    const double* x = x_.data() + n * static_cast<std::size_t>(p);
    double eta = theta[ll_index] + theta[u_index] * sigma;
    for (int j = 0; j < p; ++j) eta += theta[layout_.beta(j)] * x[j];

    const double a = std::exp(eta) * delta_t_[n];
    double dl_deta;
    if (y_[n] == 0) {
      lp -= a;
      dl_deta = -a;
    } else if (a < kProbabilityFloor) {
      lp += std::log(kProbabilityFloor);
      dl_deta = 0.0;
    } else {
      lp += std::log(-std::expm1(-a));
      dl_deta = a / std::expm1(a);
    }
    grad[ll_index] += dl_deta;
    for (int j = 0; j < p; ++j) grad[layout_.beta(j)] += dl_deta * x[j];
    grad[u_index] += dl_deta * sigma;
    grad[zeta_index] += dl_deta * theta[u_index] * sigma;
  }

  const double var_ll = prior_.sd_log_lambda0 * prior_.sd_log_lambda0;
  for (int k = 1; k <= K; ++k) {
    const int idx = layout_.log_lambda0(k);
    lp += normal_log_density(theta[idx], prior_.mu_log_lambda0, prior_.sd_log_lambda0);
    grad[idx] -= (theta[idx] - prior_.mu_log_lambda0) / var_ll;
  }
  const double var_beta = prior_.sd_beta * prior_.sd_beta;
  for (int j = 0; j < p; ++j) {
    const int idx = layout_.beta(j);
    lp += normal_log_density(theta[idx], 0.0, prior_.sd_beta);
    grad[idx] -= theta[idx] / var_beta;
  }
  for (int i = 0; i < N; ++i) {
    const int idx = layout_.u_raw(i);
    lp += normal_log_density(theta[idx], 0.0, 1.0);
    grad[idx] -= theta[idx];
  }
  // Half-Normal on sigma = exp(zeta) plus the log-Jacobian zeta.
  const double s = sigma / prior_.sigma_u_scale;
  lp += half_normal_log_density(sigma, prior_.sigma_u_scale) + zeta;
  grad[zeta_index] += 1.0 - s * s;
  return lp;
}

double log_posterior_unconstrained(const UnconstrainedParams& theta, const Dataset& data, const PriorSpec& prior) {
  return HazardModel(data, prior).log_posterior(theta);
}

Eigen::VectorXd grad_log_posterior(const UnconstrainedParams& theta, const Dataset& data, const PriorSpec& prior) {
  Eigen::VectorXd grad;
  HazardModel(data, prior).log_posterior_grad(theta, grad);
  return grad;
}

}  // namespace pumpcause
