#ifndef PUMPCAUSE_ICA_HPP
#define PUMPCAUSE_ICA_HPP

#include <cstdint>

#include <Eigen/Dense>

#include "pumpcause/errors.hpp"

namespace pumpcause {

struct IcaSettings {
  double tol = 1e-4;
  int max_iter = 200;
  std::uint64_t seed = 0;
};

struct IcaResult {
  Eigen::MatrixXd mixing;    // A: x = A s
  Eigen::MatrixXd demixing;  // W = A^-1: s = W x
  int iterations = 0;
  bool converged = false;
};

/// Two columns are (numerically) collinear, so the covariance is singular.
class CollinearColumnsError : public NumericalError {
public:
  CollinearColumnsError(int a, int b, double corr);
  int first() const { return first_; }
  int second() const { return second_; }

private:
  int first_;
  int second_;
};

/**
 * Symmetric FastICA with the log-cosh contrast (g = tanh).
 *
 * X holds one sample per row and should be centred and scaled. The data are
 * whitened through the eigendecomposition of their covariance, the
 * orthogonal unmixing matrix is iterated from a seeded Gaussian start with
 * symmetric decorrelation after each step, and iteration stops once
 * max |1 - |<w_new, w_old>|| < tol or after max_iter steps. The returned
 * demixing matrix acts on the original (unwhitened) variables.
 */
IcaResult fast_ica(const Eigen::MatrixXd& X, const IcaSettings& settings = {});

}  // namespace pumpcause

#endif  // PUMPCAUSE_ICA_HPP
