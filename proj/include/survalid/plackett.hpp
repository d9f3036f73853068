#pragma once

#include <utility>

namespace survalid::plackett {

// Bivariate Plackett copula with global odds ratio parameter theta > 0.
// theta = 1 is independence; theta -> infinity approaches comonotonicity.
// All functions throw DomainError on arguments outside their domain.

// C_theta(u, v) = P(U <= u, V <= v).
double cdf(double u, double v, double theta);

// P(V <= v | U = u) = dC/du. Requires u in (0,1), v in [0,1].
double conditional_cdf_given_u(double u, double v, double theta);

// Inverse of the above in v: returns v with P(V <= v | U = u) = p.
// Closed-form quadratic root validated by round trip; falls back to
// bisection when the algebraic root is not accurate enough.
// Throws NumericError (carrying the residual) if the fallback fails.
double conditional_quantile_given_u(double u, double p, double theta);

// Conditional-inversion sampler: maps independent uniforms (v1, v2) to a
// copula-distributed pair (u1, u2). Deterministic in its arguments.
std::pair<double, double> sample_pair(double v1, double v2, double theta);

// Odds cross-ratio of the 2x2 table obtained by dichotomising at (u, v);
// identically equal to theta for the Plackett family. u, v in (0,1).
double cross_ratio(double u, double v, double theta);

// Copula density d2C/du dv.
double density(double u, double v, double theta);

// dC/dtheta, computed from the implicit constant-cross-ratio identity;
// exact and stable at theta = 1.
double cdf_dtheta(double u, double v, double theta);

// P(U <= u | V = v) = dC/dv (the conditional in the second argument).
double conditional_cdf_given_v(double u, double v, double theta);

// d/dv of conditional_cdf_given_v: d2C/dv2.
double conditional_given_v_dv(double u, double v, double theta);

// d/dtheta of conditional_cdf_given_v.
double conditional_given_v_dtheta(double u, double v, double theta);

}  // namespace survalid::plackett
