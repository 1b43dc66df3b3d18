#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <string>

namespace lrmbayes::detail {

/// Cholesky factorisation that retries with diagonal jitter 1e-12, 1e-10, 1e-8, 1e-6
/// (scaled by the mean diagonal) before raising NumericalError with a condition estimate.
Eigen::LLT<Eigen::MatrixXd> robust_cholesky(const Eigen::MatrixXd& a, const std::string& what);

/// Ratio of extreme eigenvalues of a symmetric matrix; infinity when singular.
double condition_estimate(const Eigen::MatrixXd& a);

/// Inverse of an SPD matrix through its Cholesky factor.
Eigen::MatrixXd spd_inverse(const Eigen::LLT<Eigen::MatrixXd>& llt);

} // namespace lrmbayes::detail
