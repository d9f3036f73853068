#include "survalid/plackett.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "survalid/errors.hpp"

namespace survalid::plackett {

namespace {

constexpr double kIndepTol = 1e-8;  // |theta-1| below this uses the independence limit

void check_theta(double theta) {
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw DomainError("plackett: theta must be positive and finite");
}

void check_unit(double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError(std::string("plackett: ") + name + " must lie in [0,1]");
}

void check_open(double x, const char* name) {
    if (!(x > 0.0 && x < 1.0))
        throw DomainError(std::string("plackett: ") + name + " must lie in (0,1)");
}

// S_theta = sqrt(A^2 - 4 theta (theta-1) u v) with A = 1 + (theta-1)(u+v).
// For theta > 1 the two terms nearly cancel at large theta, so the difference
// is evaluated in product form (A - g)(A + g) with g = 2 sqrt(theta(theta-1)uv).
double s_theta(double A, double u, double v, double theta) {
    if (theta > 1.0) {
        const double g = 2.0 * std::sqrt(theta * (theta - 1.0) * u * v);
        return std::sqrt(std::max(0.0, (A - g) * (A + g)));
    }
    return std::sqrt(A * A + 4.0 * theta * (1.0 - theta) * u * v);
}

}  // namespace

double cdf(double u, double v, double theta) {
    check_unit(u, "u");
    check_unit(v, "v");
    check_theta(theta);
    if (std::abs(theta - 1.0) < kIndepTol) return u * v;
    const double A = 1.0 + (theta - 1.0) * (u + v);
    const double S = s_theta(A, u, v, theta);
    // (A - S)/(2(theta-1)) rationalised to avoid the theta -> 1 singularity
    // and the cancellation A - S at small u v.
    return 2.0 * theta * u * v / (A + S);
}

double conditional_cdf_given_u(double u, double v, double theta) {
    check_open(u, "u");
    check_unit(v, "v");
    check_theta(theta);
    if (std::abs(theta - 1.0) < kIndepTol) return v;
    const double A = 1.0 + (theta - 1.0) * (u + v);
    const double S = s_theta(A, u, v, theta);
    const double r = 0.5 * (1.0 - (A - 2.0 * theta * v) / S);
    return std::clamp(r, 0.0, 1.0);
}

double conditional_quantile_given_u(double u, double p, double theta) {
    check_open(u, "u");
    check_open(p, "p");
    check_theta(theta);
    if (std::abs(theta - 1.0) < kIndepTol) return p;

    // closed-form root of the conditional cdf (quadratic after squaring)
    const double t = p * (1.0 - p);
    const double em = theta - 1.0;
    const double b = theta + t * em * em;
    const double c = 2.0 * t * (u * theta * theta + 1.0 - u) + theta * (1.0 - 2.0 * t);
    const double d =
        std::sqrt(theta) * std::sqrt(theta + 4.0 * t * u * (1.0 - u) * em * em);
    double v = (c - (1.0 - 2.0 * p) * d) / (2.0 * b);

    const double tol = 1e-10;
    if (std::isfinite(v) && v > 0.0 && v < 1.0 &&
        std::abs(conditional_cdf_given_u(u, v, theta) - p) <= tol)
        return v;

    // bisection fallback: the conditional cdf is monotone in v with range (0,1)
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (conditional_cdf_given_u(u, mid, theta) < p)
            lo = mid;
        else
            hi = mid;
    }
    v = 0.5 * (lo + hi);
    const double resid = std::abs(conditional_cdf_given_u(u, v, theta) - p);
    if (!(resid <= 1e-8))
        throw NumericError("plackett conditional quantile did not converge; residual " +
                           std::to_string(resid));
    return v;
}

std::pair<double, double> sample_pair(double v1, double v2, double theta) {
    check_open(v1, "v1");
    check_open(v2, "v2");
    check_theta(theta);
    return {v1, conditional_quantile_given_u(v1, v2, theta)};
}

double cross_ratio(double u, double v, double theta) {
    if (!(u > 0.0 && u < 1.0) || !(v > 0.0 && v < 1.0))
        throw DomainError("plackett cross_ratio: dichotomisation points must be interior");
    check_theta(theta);
    const double C = cdf(u, v, theta);
    return C * (1.0 - u - v + C) / ((u - C) * (v - C));
}

double density(double u, double v, double theta) {
    check_unit(u, "u");
    check_unit(v, "v");
    check_theta(theta);
    if (std::abs(theta - 1.0) < kIndepTol) return 1.0;
    const double A = 1.0 + (theta - 1.0) * (u + v);
    const double S = s_theta(A, u, v, theta);
    return theta * (1.0 + (theta - 1.0) * (u + v - 2.0 * u * v)) / (S * S * S);
}

double cdf_dtheta(double u, double v, double theta) {
    const double C = cdf(u, v, theta);
    // implicit differentiation of theta (u-C)(v-C) = C(1-u-v+C)
    const double den = (1.0 - u - v + C) + C + theta * ((u - C) + (v - C));
    return (u - C) * (v - C) / den;
}

double conditional_cdf_given_v(double u, double v, double theta) {
    return conditional_cdf_given_u(v, u, theta);
}

double conditional_given_v_dv(double u, double v, double theta) {
    check_unit(u, "u");
    check_unit(v, "v");
    check_theta(theta);
    if (std::abs(theta - 1.0) < kIndepTol) return 0.0;
    const double A = 1.0 + (theta - 1.0) * (u + v);
    const double S = s_theta(A, u, v, theta);
    return -2.0 * (theta - 1.0) * theta * u * (1.0 - u) / (S * S * S);
}

double conditional_given_v_dtheta(double u, double v, double theta) {
    check_unit(u, "u");
    check_unit(v, "v");
    check_theta(theta);
    if (std::abs(theta - 1.0) < kIndepTol) return u * (1.0 - u) * (1.0 - 2.0 * v);
    const double A = 1.0 + (theta - 1.0) * (u + v);
    const double S = s_theta(A, u, v, theta);
    const double W = A - 2.0 * theta * u;
    const double dS = (A * (u + v) - 2.0 * u * v * (2.0 * theta - 1.0)) / S;
    return -0.5 * ((u + v - 2.0 * u) / S - W * dS / (S * S));
}

}  // namespace survalid::plackett
