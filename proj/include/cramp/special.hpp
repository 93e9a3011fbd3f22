#pragma once

namespace cramp {

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double gamma_q(double a, double x);

/// Regularized lower incomplete gamma P(a, x) = 1 - Q(a, x).
double gamma_p(double a, double x);

/// P[chi^2_df > x]. Throws on x < 0 or df < 1.
double chi2_sf(double x, int df);

/// P[Z > z] for standard normal Z.
double normal_sf(double z);

}  // namespace cramp
