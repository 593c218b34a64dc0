#include "pumpcause/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pumpcause/errors.hpp"

namespace pumpcause {

namespace {

double sample_variance(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

double split_rhat(const Eigen::MatrixXd& draws) {
  const Eigen::Index chains = draws.rows();
  const Eigen::Index n_draws = draws.cols();
  if (chains < 1 || n_draws < 4) throw ValidationError("split_rhat needs at least 4 draws per chain");
  const Eigen::Index half = n_draws / 2;

  Eigen::VectorXd means(2 * chains);
  Eigen::VectorXd vars(2 * chains);
  for (Eigen::Index c = 0; c < chains; ++c) {
    const Eigen::VectorXd first = draws.row(c).head(half).transpose();
    const Eigen::VectorXd second = draws.row(c).tail(half).transpose();
    means[2 * c] = first.mean();
    means[2 * c + 1] = second.mean();
    vars[2 * c] = sample_variance(first);
    vars[2 * c + 1] = sample_variance(second);
  }
  const double n = static_cast<double>(half);
  const double within = vars.mean();
  const double between = n * sample_variance(means);
  if (within == 0.0) return between == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * within + between / n;
  return std::sqrt(var_plus / within);
}

double ess(const Eigen::MatrixXd& draws) {
  const Eigen::Index chains = draws.rows();
  const Eigen::Index n = draws.cols();
  if (chains < 1 || n < 8) throw ValidationError("ess needs at least 8 draws per chain");
  const double total = static_cast<double>(chains * n);

  std::vector<Eigen::VectorXd> centered;
  Eigen::VectorXd chain_means(chains);
  Eigen::VectorXd chain_vars(chains);
  for (Eigen::Index c = 0; c < chains; ++c) {
    const Eigen::VectorXd x = draws.row(c).transpose();
    chain_means[c] = x.mean();
    centered.push_back(x.array() - chain_means[c]);
    chain_vars[c] = centered.back().squaredNorm() / static_cast<double>(n - 1);
  }

  const double mean_var = chain_vars.mean();
  double var_plus = mean_var * static_cast<double>(n - 1) / static_cast<double>(n);
  if (chains > 1) var_plus += sample_variance(chain_means);
  if (var_plus <= 0.0 || mean_var <= 0.0) return total;

  // Mean (biased, 1/n) autocovariance across chains at lag t.
  auto acov = [&](Eigen::Index t) {
    double sum = 0.0;
    for (const auto& x : centered) sum += x.head(n - t).dot(x.tail(n - t));
    return sum / static_cast<double>(n) / static_cast<double>(chains);
  };
  auto rho_at = [&](Eigen::Index t) { return 1.0 - (mean_var - acov(t)) / var_plus; };

  std::vector<double> rho(static_cast<std::size_t>(n) + 1, 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = rho_at(1);
  rho[1] = rho_odd;

  Eigen::Index s = 1;
  while (s < n - 4 && rho_even + rho_odd > 0.0) {
    rho_even = rho_at(s + 1);
    rho_odd = rho_at(s + 2);
    if (rho_even + rho_odd >= 0.0) {
      rho[static_cast<std::size_t>(s + 1)] = rho_even;
      rho[static_cast<std::size_t>(s + 2)] = rho_odd;
    }
    s += 2;
  }
  const Eigen::Index max_s = s;
  if (rho_even > 0.0) rho[static_cast<std::size_t>(max_s + 1)] = rho_even;

  // Initial positive sequence -> initial monotone sequence.
  for (Eigen::Index t = 1; t <= max_s - 3; t += 2) {
    const auto i = static_cast<std::size_t>(t);
    if (rho[i + 1] + rho[i + 2] > rho[i - 1] + rho[i]) {
      rho[i + 1] = (rho[i - 1] + rho[i]) / 2.0;
      rho[i + 2] = rho[i + 1];
    }
  }

  double tau = -1.0;
  for (Eigen::Index t = 0; t <= max_s; ++t) tau += 2.0 * rho[static_cast<std::size_t>(t)];
  tau += rho[static_cast<std::size_t>(max_s + 1)];
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

std::pair<double, double> hdi(std::span<const double> values, double mass) {
  if (values.empty()) throw ValidationError("hdi of an empty sample");
  if (!(mass > 0.0 && mass <= 1.0)) throw ValidationError("hdi mass must be in (0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9)),
                                         1, n);
  std::size_t best = 0;
  double best_width = sorted[k - 1] - sorted[0];
  for (std::size_t i = 1; i + k - 1 < n; ++i) {
    const double width = sorted[i + k - 1] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {sorted[best], sorted[best + k - 1]};
}

}  // namespace pumpcause
