#include "pumpcause/nuts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pumpcause/diagnostics.hpp"
#include "pumpcause/errors.hpp"
#include "pumpcause/rng.hpp"

namespace pumpcause {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;  // gradient of the log density at q
  double log_density = 0.0;
};

// Step-size dual averaging (Nesterov / Hoffman & Gelman) with the usual
// constants gamma = 0.05, t0 = 10, kappa = 0.75.
class DualAveraging {
public:
  explicit DualAveraging(double delta) : delta_(delta) {}

  void restart(double step_size) {
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
    mu_ = std::log(10.0 * step_size);
  }

  double learn(double accept_stat) {
    ++counter_;
    accept_stat = std::min(1.0, accept_stat);
    const double eta = 1.0 / (counter_ + t0_);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / gamma_;
    const double x_eta = std::pow(counter_, -kappa_);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  double final_step_size() const { return std::exp(x_bar_); }

private:
  double delta_;
  double gamma_ = 0.05;
  double t0_ = 10.0;
  double kappa_ = 0.75;
  double counter_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  double mu_ = 0.0;
};

// Windowed diagonal-metric estimation: an initial fast buffer, a series of
// doubling slow windows, and a terminal fast buffer.
class MetricWindows {
public:
  MetricWindows(int n_warmup, int dim) : n_warmup_(n_warmup), mean_(Eigen::VectorXd::Zero(dim)), m2_(mean_) {
    if (n_warmup < 20) {
      enabled_ = false;
      return;
    }
    if (init_buffer_ + term_buffer_ + window_size_ > n_warmup) {
      init_buffer_ = static_cast<int>(0.15 * n_warmup);
      term_buffer_ = static_cast<int>(0.1 * n_warmup);
      window_size_ = n_warmup - (init_buffer_ + term_buffer_);
    }
    next_window_ = init_buffer_ + window_size_ - 1;
  }

  /// Records q; returns true and writes the new inverse metric when a window closes.
  bool learn(const Eigen::VectorXd& q, Eigen::VectorXd& inv_metric) {
    if (!enabled_) return false;
    if (in_window()) {
      ++count_;
      const Eigen::VectorXd delta = q - mean_;
      mean_ += delta / static_cast<double>(count_);
      m2_ += delta.cwiseProduct(q - mean_);
    }
    if (counter_ == next_window_ && counter_ != n_warmup_) {
      compute_next_window();
      const double n = static_cast<double>(count_);
      const Eigen::VectorXd var = m2_ / (n - 1.0);
      // Shrink toward unit variance with weight 5 / (n + 5).
      inv_metric = (n / (n + 5.0)) * var.array() + (5.0 / (n + 5.0));
      count_ = 0;
      mean_.setZero();
      m2_.setZero();
      ++counter_;
      return true;
    }
    ++counter_;
    return false;
  }

private:
  bool in_window() const {
    return counter_ >= init_buffer_ && counter_ < n_warmup_ - term_buffer_ && counter_ != n_warmup_;
  }

  void compute_next_window() {
    if (next_window_ == n_warmup_ - term_buffer_ - 1) return;
    window_size_ *= 2;
    next_window_ = counter_ + window_size_;
    if (next_window_ != n_warmup_ - term_buffer_ - 1) {
      const int boundary = next_window_ + 2 * window_size_;
      if (boundary >= n_warmup_ - term_buffer_) next_window_ = n_warmup_ - term_buffer_ - 1;
    }
  }

  int n_warmup_;
  bool enabled_ = true;
  int init_buffer_ = 75;
  int term_buffer_ = 50;
  int window_size_ = 25;
  int next_window_ = 0;
  int counter_ = 0;
  long count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

class NutsChain {
public:
  NutsChain(const LogDensityFn& log_density, int dim, int max_depth, Rng rng)
      : log_density_(log_density), dim_(dim), max_depth_(max_depth), rng_(rng),
        inv_metric_(Eigen::VectorXd::Ones(dim)) {}

  void initialize() {
    z_.p = Eigen::VectorXd::Zero(dim_);
    for (int attempt = 0; attempt < 100; ++attempt) {
      z_.q.resize(dim_);
      for (int d = 0; d < dim_; ++d) z_.q[d] = rng_.uniform(-1.0, 1.0);
      evaluate(z_);
      if (std::isfinite(z_.log_density) && z_.grad.allFinite()) return;
    }
    throw NumericalError("non-finite log density at initialization after 100 attempts");
  }

  void find_reasonable_step_size() {
    const PhasePoint start = z_;
    sample_momentum();
    double h0 = hamiltonian(z_);
    leapfrog(z_, step_size_);
    double delta_h = h0 - hamiltonian(z_);
    const int direction = delta_h > std::log(0.8) ? 1 : -1;
    while (true) {
      z_ = start;
      sample_momentum();
      h0 = hamiltonian(z_);
      leapfrog(z_, step_size_);
      delta_h = h0 - hamiltonian(z_);
      if (direction == 1 && !(delta_h > std::log(0.8))) break;
      if (direction == -1 && !(delta_h < std::log(0.8))) break;
      step_size_ = direction == 1 ? 2.0 * step_size_ : 0.5 * step_size_;
      if (step_size_ > 1e7) throw NumericalError("posterior appears improper: step size diverged");
      if (step_size_ == 0.0) throw NumericalError("no acceptable step size: posterior is not smooth at the start");
    }
    z_ = start;
  }

  struct Transition {
    double accept_stat = 0.0;
    int depth = 0;
    int n_leapfrog = 0;
    bool divergent = false;
  };

  Transition transition() {
    sample_momentum();
    PhasePoint z_fwd = z_;
    PhasePoint z_bck = z_;
    PhasePoint z_sample = z_;
    PhasePoint z_propose = z_;

    Eigen::VectorXd p_sharp = sharp(z_.p);
    Eigen::VectorXd p_fwd_fwd = z_.p, p_sharp_fwd_fwd = p_sharp;
    Eigen::VectorXd p_fwd_bck = z_.p, p_sharp_fwd_bck = p_sharp;
    Eigen::VectorXd p_bck_fwd = z_.p, p_sharp_bck_fwd = p_sharp;
    Eigen::VectorXd p_bck_bck = z_.p, p_sharp_bck_bck = p_sharp;
    Eigen::VectorXd rho = z_.p;

    double log_sum_weight = 0.0;
    const double h0 = hamiltonian(z_);
    n_leapfrog_ = 0;
    sum_metro_prob_ = 0.0;
    divergent_ = false;

    int depth = 0;
    while (depth < max_depth_) {
      Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(dim_);
      Eigen::VectorXd rho_bck = Eigen::VectorXd::Zero(dim_);
      bool valid_subtree = false;
      double log_sum_weight_subtree = -kInf;

      if (rng_.uniform() > 0.5) {
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        valid_subtree = build_tree(depth, z_fwd, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck,
                                   p_fwd_fwd, h0, 1.0, log_sum_weight_subtree);
      } else {
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        valid_subtree = build_tree(depth, z_bck, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd,
                                   p_bck_bck, h0, -1.0, log_sum_weight_subtree);
      }
      if (!valid_subtree) break;
      ++depth;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else {
        const double accept_prob = std::exp(log_sum_weight_subtree - log_sum_weight);
        if (rng_.uniform() < accept_prob) z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = no_u_turn(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      persist = persist && no_u_turn(p_sharp_bck_bck, p_sharp_fwd_bck, rho_bck + p_fwd_bck);
      persist = persist && no_u_turn(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_fwd + p_bck_fwd);
      if (!persist) break;
    }

    z_ = z_sample;
    Transition t;
    t.accept_stat = n_leapfrog_ > 0 ? sum_metro_prob_ / n_leapfrog_ : 0.0;
    t.depth = depth;
    t.n_leapfrog = n_leapfrog_;
    t.divergent = divergent_;
    return t;
  }

  const Eigen::VectorXd& position() const { return z_.q; }
  double step_size() const { return step_size_; }
  void set_step_size(double eps) { step_size_ = eps; }
  Eigen::VectorXd& inv_metric() { return inv_metric_; }

private:
  void evaluate(PhasePoint& z) {
    z.grad.resize(dim_);
    z.log_density = log_density_(z.q, z.grad);
    if (z.grad.size() != dim_) throw ValidationError("log density gradient has dimension " +
                                                     std::to_string(z.grad.size()) + ", expected " +
                                                     std::to_string(dim_));
    if (!std::isfinite(z.log_density) || !z.grad.allFinite()) z.log_density = -kInf;
  }

  void sample_momentum() {
    for (int d = 0; d < dim_; ++d) z_.p[d] = rng_.normal() / std::sqrt(inv_metric_[d]);
  }

  Eigen::VectorXd sharp(const Eigen::VectorXd& p) const { return inv_metric_.cwiseProduct(p); }

  double hamiltonian(const PhasePoint& z) const {
    return -z.log_density + 0.5 * z.p.dot(inv_metric_.cwiseProduct(z.p));
  }

  void leapfrog(PhasePoint& z, double eps) {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * inv_metric_.cwiseProduct(z.p);
    evaluate(z);
    if (z.log_density == -kInf) return;
    z.p += 0.5 * eps * z.grad;
  }

  static bool no_u_turn(const Eigen::VectorXd& p_sharp_minus, const Eigen::VectorXd& p_sharp_plus,
                        const Eigen::VectorXd& rho) {
    return p_sharp_plus.dot(rho) > 0 && p_sharp_minus.dot(rho) > 0;
  }

  bool build_tree(int depth, PhasePoint& z, PhasePoint& z_propose, Eigen::VectorXd& p_sharp_beg,
                  Eigen::VectorXd& p_sharp_end, Eigen::VectorXd& rho, Eigen::VectorXd& p_beg, Eigen::VectorXd& p_end,
                  double h0, double sign, double& log_sum_weight) {
    if (depth == 0) {
      leapfrog(z, sign * step_size_);
      ++n_leapfrog_;
      double h = hamiltonian(z);
      if (std::isnan(h)) h = kInf;
      if (h - h0 > kDivergenceThreshold) divergent_ = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro_prob_ += h0 - h > 0 ? 1.0 : std::exp(h0 - h);
      z_propose = z;
      p_sharp_beg = sharp(z.p);
      p_sharp_end = p_sharp_beg;
      rho += z.p;
      p_beg = z.p;
      p_end = p_beg;
      return !divergent_;
    }

    Eigen::VectorXd p_sharp_left_end(dim_), p_left_end(dim_);
    Eigen::VectorXd rho_left = Eigen::VectorXd::Zero(dim_);
    double log_sum_weight_left = -kInf;
    if (!build_tree(depth - 1, z, z_propose, p_sharp_beg, p_sharp_left_end, rho_left, p_beg, p_left_end, h0, sign,
                    log_sum_weight_left))
      return false;

    PhasePoint z_propose_right = z;
    Eigen::VectorXd p_sharp_right_beg(dim_), p_right_beg(dim_);
    Eigen::VectorXd rho_right = Eigen::VectorXd::Zero(dim_);
    double log_sum_weight_right = -kInf;
    if (!build_tree(depth - 1, z, z_propose_right, p_sharp_right_beg, p_sharp_end, rho_right, p_right_beg, p_end, h0,
                    sign, log_sum_weight_right))
      return false;

    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_left, log_sum_weight_right);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_right > log_sum_weight_subtree) {
      z_propose = z_propose_right;
    } else {
      const double accept_prob = std::exp(log_sum_weight_right - log_sum_weight_subtree);
      if (rng_.uniform() < accept_prob) z_propose = z_propose_right;
    }

    const Eigen::VectorXd rho_subtree = rho_left + rho_right;
    rho += rho_subtree;
    bool persist = no_u_turn(p_sharp_beg, p_sharp_end, rho_subtree);
    persist = persist && no_u_turn(p_sharp_beg, p_sharp_right_beg, rho_left + p_right_beg);
    persist = persist && no_u_turn(p_sharp_left_end, p_sharp_end, rho_right + p_left_end);
    return persist;
  }

  const LogDensityFn& log_density_;
  int dim_;
  int max_depth_;
  Rng rng_;
  Eigen::VectorXd inv_metric_;
  double step_size_ = 1.0;
  PhasePoint z_;
  int n_leapfrog_ = 0;
  double sum_metro_prob_ = 0.0;
  bool divergent_ = false;
};

void run_chain(const LogDensityFn& log_density, int dim, const SamplerConfig& config, int chain,
               Eigen::MatrixXd& draws, ChainSummary& summary) {
  NutsChain nuts(log_density, dim, config.max_tree_depth, Rng(config.seed, static_cast<std::uint64_t>(chain)));
  nuts.initialize();
  nuts.find_reasonable_step_size();

  DualAveraging step_adapt(config.target_accept);
  step_adapt.restart(nuts.step_size());
  MetricWindows metric(config.n_tune, dim);

  for (int it = 0; it < config.n_tune; ++it) {
    const auto t = nuts.transition();
    if (t.divergent) ++summary.warmup_divergences;
    nuts.set_step_size(step_adapt.learn(t.accept_stat));
    if (metric.learn(nuts.position(), nuts.inv_metric())) {
      nuts.find_reasonable_step_size();
      step_adapt.restart(nuts.step_size());
    }
  }
  if (config.n_tune > 0) nuts.set_step_size(step_adapt.final_step_size());

  draws.resize(config.n_draws, dim);
  double accept_sum = 0.0;
  double depth_sum = 0.0;
  for (int it = 0; it < config.n_draws; ++it) {
    const auto t = nuts.transition();
    if (t.divergent) ++summary.divergences;
    accept_sum += t.accept_stat;
    depth_sum += t.depth;
    summary.leapfrog_steps += t.n_leapfrog;
    draws.row(it) = nuts.position().transpose();
  }
  summary.step_size = nuts.step_size();
  summary.mean_accept_stat = accept_sum / config.n_draws;
  summary.mean_tree_depth = depth_sum / config.n_draws;
  summary.inv_metric = nuts.inv_metric();
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_draws < 1) throw ValidationError("n_draws must be >= 1");
  if (n_tune < 1) throw ValidationError("n_tune must be >= 1");
  if (n_chains < 1) throw ValidationError("n_chains must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw ValidationError("target_accept must be in (0, 1)");
  if (max_tree_depth < 1) throw ValidationError("max_tree_depth must be >= 1");
}

Eigen::MatrixXd PosteriorSamples::parameter(int d) const {
  Eigen::MatrixXd out(n_chains, n_draws);
  for (int c = 0; c < n_chains; ++c) out.row(c) = draws[static_cast<std::size_t>(c)].col(d).transpose();
  return out;
}

int PosteriorSamples::total_divergences() const {
  int total = 0;
  for (const auto& c : chains) total += c.divergences;
  return total;
}

double PosteriorSamples::max_rhat() const {
  double m = 1.0;
  for (const auto& d : diagnostics) m = std::max(m, d.rhat);
  return m;
}

double PosteriorSamples::min_ess() const {
  double m = kInf;
  for (const auto& d : diagnostics) m = std::min(m, d.ess);
  return m;
}

PosteriorSamples sample(const LogDensityFn& log_density, int dim, const SamplerConfig& config) {
  config.validate();
  if (dim < 1) throw ValidationError("sampler dimension must be >= 1");

  PosteriorSamples out;
  out.n_chains = config.n_chains;
  out.n_draws = config.n_draws;
  out.dim = dim;
  out.draws.resize(static_cast<std::size_t>(config.n_chains));
  out.chains.resize(static_cast<std::size_t>(config.n_chains));

  for_each_index(static_cast<std::size_t>(config.n_chains), config.parallelism, [&](std::size_t c) {
    run_chain(log_density, dim, config, static_cast<int>(c), out.draws[c], out.chains[c]);
  });

  compute_diagnostics(out);
  return out;
}

void compute_diagnostics(PosteriorSamples& samples) {
  samples.diagnostics.assign(static_cast<std::size_t>(samples.dim), {});
  for (int d = 0; d < samples.dim; ++d) {
    const Eigen::MatrixXd chains = samples.parameter(d);
    auto& diag = samples.diagnostics[static_cast<std::size_t>(d)];
    diag.rhat = samples.n_draws >= 4 ? split_rhat(chains) : std::numeric_limits<double>::quiet_NaN();
    diag.ess = samples.n_draws >= 8 ? ess(chains) : std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace pumpcause
