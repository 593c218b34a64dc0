#include "pumpcause/ica.hpp"

#include <cmath>
#include <string>

#include "pumpcause/rng.hpp"

namespace pumpcause {

namespace {

constexpr double kCollinearThreshold = 1.0 - 1e-8;

// (W W^T)^{-1/2} W
Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& W) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(W * W.transpose());
  const Eigen::VectorXd inv_sqrt = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose() * W;
}

}  // namespace

CollinearColumnsError::CollinearColumnsError(int a, int b, double corr)
    : NumericalError("singular covariance: columns " + std::to_string(a) + " and " + std::to_string(b) +
                     " are collinear (|corr| = " + std::to_string(std::abs(corr)) + ")"),
      first_(a),
      second_(b) {}

IcaResult fast_ica(const Eigen::MatrixXd& X, const IcaSettings& settings) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  if (m < 1) throw ValidationError("ICA needs at least one variable");
  if (n <= m) throw ValidationError("ICA needs more samples than variables");

  const Eigen::RowVectorXd mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);

  for (Eigen::Index a = 0; a < m; ++a) {
    if (!(cov(a, a) > 0.0)) throw NumericalError("column " + std::to_string(a) + " has zero variance");
    for (Eigen::Index b = a + 1; b < m; ++b) {
      const double corr = cov(a, b) / std::sqrt(cov(a, a) * cov(b, b));
      if (std::abs(corr) > kCollinearThreshold)
        throw CollinearColumnsError(static_cast<int>(a), static_cast<int>(b), corr);
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd evals = eig.eigenvalues();
  if (!(evals.minCoeff() > 1e-12 * evals.maxCoeff()))
    throw NumericalError("singular covariance: smallest eigenvalue " + std::to_string(evals.minCoeff()));
  const Eigen::MatrixXd whitening =
      evals.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();  // K
  const Eigen::MatrixXd Z = whitening * centered.transpose();                          // m x n

  Rng rng(settings.seed, 0x1CA);
  Eigen::MatrixXd W(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) W(i, j) = rng.normal();
  W = symmetric_decorrelation(W);

  IcaResult result;
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd G(m, n);
  for (int iter = 1; iter <= settings.max_iter; ++iter) {
    G.noalias() = W * Z;
    G = G.array().tanh();
    const Eigen::VectorXd g_prime_mean = (1.0 - G.array().square()).rowwise().mean();
    Eigen::MatrixXd W_new = G * Z.transpose() * inv_n;
    W_new -= g_prime_mean.asDiagonal() * W;
    W_new = symmetric_decorrelation(W_new);

    const double lim = ((W_new * W.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    W = W_new;
    result.iterations = iter;
    if (lim < settings.tol) {
      result.converged = true;
      break;
    }
  }

  result.demixing = W * whitening;
  result.mixing = result.demixing.inverse();
  return result;
}

}  // namespace pumpcause
