#pragma once

#include <span>

namespace lrmbayes {

/// Regularised lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Regularised upper incomplete gamma Q(a, x) = 1 - P(a, x), computed without cancellation.
double regularized_gamma_q(double a, double x);

double chi2_cdf(unsigned dof, double x);
/// Inverse of chi2_cdf by bracketed Newton iteration.
double chi2_quantile(unsigned dof, double level);

double normal_cdf(double z);
/// log Phi(z), accurate far into the lower tail.
double normal_log_cdf(double z);
double normal_quantile(double p);

double log_sum_exp(std::span<const double> v);

} // namespace lrmbayes
