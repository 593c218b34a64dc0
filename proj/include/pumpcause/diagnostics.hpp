#ifndef PUMPCAUSE_DIAGNOSTICS_HPP
#define PUMPCAUSE_DIAGNOSTICS_HPP

#include <span>
#include <utility>

#include <Eigen/Dense>

namespace pumpcause {

/**
 * Split R-hat without rank normalization. Rows are chains, columns draws.
 * Each chain is cut into two halves (the middle draw is dropped when the
 * length is odd) and the classic potential scale reduction
 * sqrt(((n-1)/n W + B/n) / W) is computed over the 2 * n_chains halves.
 * Returns exactly 1.0 when every half is constant at the same value and
 * +inf when halves are constant at different values.
 */
double split_rhat(const Eigen::MatrixXd& draws);

/**
 * Multi-chain effective sample size from autocovariances with Geyer's
 * initial monotone positive sequence truncation. A constant parameter
 * reports the total draw count.
 */
double ess(const Eigen::MatrixXd& draws);

/// Shortest interval containing ceil(mass * n) of the values.
std::pair<double, double> hdi(std::span<const double> values, double mass = 0.95);

}  // namespace pumpcause

#endif  // PUMPCAUSE_DIAGNOSTICS_HPP
