#pragma once

namespace probekit {

/// Regularized lower incomplete gamma P(a, x). a > 0, x >= 0.
double regularized_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// directly in the tail so small values keep full relative precision.
double regularized_gamma_q(double a, double x);

/// Upper tail of the chi-square distribution: Q(df / 2, x / 2).
double chi_square_sf(double x, double df);
/// Upper tail of the standard normal distribution.
double normal_sf(double z);

}  // namespace probekit
