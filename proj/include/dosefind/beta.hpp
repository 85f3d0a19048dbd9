#pragma once

namespace dosefind {

/// Regularized incomplete beta function I_x(a, b), i.e. the Beta(a, b) CDF
/// at x. Continued fraction evaluated with the modified Lentz method, using
/// the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) to stay in the fast-converging
/// region. Requires a > 0, b > 0; x is clamped to [0, 1].
double incomplete_beta(double x, double a, double b);

/// Pr(lo < p <= hi) for p ~ Beta(a, b).
double beta_interval_mass(double lo, double hi, double a, double b);

}  // namespace dosefind
