#include "survalid/trial_level.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "survalid/errors.hpp"

namespace survalid {

DispersionMatrix fit_dispersion(const std::vector<double>& alpha,
                                const std::vector<double>& beta) {
    const std::size_t n = alpha.size();
    if (beta.size() != n) throw DomainError("fit_dispersion: unequal lengths");
    if (n < 3) throw DomainError("fit_dispersion: at least 3 trials are required");
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += alpha[i];
        mb += beta[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    DispersionMatrix d;
    for (std::size_t i = 0; i < n; ++i) {
        d.d_aa += (alpha[i] - ma) * (alpha[i] - ma);
        d.d_ab += (alpha[i] - ma) * (beta[i] - mb);
        d.d_bb += (beta[i] - mb) * (beta[i] - mb);
    }
    const double denom = static_cast<double>(n - 1);
    d.d_aa /= denom;
    d.d_ab /= denom;
    d.d_bb /= denom;
    if (d.d_aa == 0.0 || d.d_bb == 0.0)
        throw EstimationError("fit_dispersion: degenerate dispersion (zero variance)");
    return d;
}

double r2_copula(const DispersionMatrix& d) {
    if (!(d.d_aa > 0.0) || !(d.d_bb > 0.0))
        throw DomainError("r2_copula: variances must be positive");
    return d.d_ab * d.d_ab / (d.d_aa * d.d_bb);
}

WlsFit wls_r2(const std::vector<double>& alpha, const std::vector<double>& beta,
              const std::vector<double>& weights) {
    const std::size_t n = alpha.size();
    if (beta.size() != n || weights.size() != n) throw DomainError("wls_r2: unequal lengths");
    if (n < 3) throw DomainError("wls_r2: at least 3 trials are required");
    for (double w : weights)
        if (!(w > 0.0)) throw DomainError("wls_r2: weights must be positive");

    double sw = 0, swx = 0, swy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += weights[i];
        swx += weights[i] * alpha[i];
        swy += weights[i] * beta[i];
    }
    const double xbar = swx / sw, ybar = swy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = alpha[i] - xbar, dy = beta[i] - ybar;
        sxx += weights[i] * dx * dx;
        sxy += weights[i] * dx * dy;
        syy += weights[i] * dy * dy;
    }
    if (sxx == 0.0) throw DomainError("wls_r2: constant predictor");
    if (syy == 0.0) throw EstimationError("wls_r2: response has zero weighted variance");

    WlsFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = beta[i] - fit.intercept - fit.slope * alpha[i];
        rss += weights[i] * r * r;
    }
    fit.r2 = 1.0 - rss / syy;
    return fit;
}

std::vector<double> wls_weights(WeightScheme scheme, const std::vector<double>& se_alpha,
                                const std::vector<std::size_t>& trial_sizes) {
    std::vector<double> w;
    switch (scheme) {
        case WeightScheme::inverse_var_log_or:
            w.reserve(se_alpha.size());
            for (double se : se_alpha) {
                if (!(se > 0.0)) throw DomainError("wls_weights: se_alpha must be positive");
                w.push_back(1.0 / (se * se));
            }
            break;
        case WeightScheme::sample_size:
            w.reserve(trial_sizes.size());
            for (std::size_t n : trial_sizes) w.push_back(static_cast<double>(n));
            break;
        case WeightScheme::inverse_sample_size:
            w.reserve(trial_sizes.size());
            for (std::size_t n : trial_sizes) w.push_back(1.0 / static_cast<double>(n));
            break;
    }
    return w;
}

namespace {

std::pair<double, double> order_and_clip_r_interval(double r_lo, double r_hi) {
    double lo, hi;
    if (r_lo <= 0.0 && r_hi >= 0.0) {
        lo = 0.0;  // the r-interval crosses zero, so the smallest R^2 is 0
        hi = std::max(r_lo * r_lo, r_hi * r_hi);
    } else {
        lo = std::min(r_lo * r_lo, r_hi * r_hi);
        hi = std::max(r_lo * r_lo, r_hi * r_hi);
    }
    return {std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)};
}

}  // namespace

std::pair<double, double> fisher_z_r2_interval(
    double r_signed, std::size_t n_trials, bool* degenerate,
    const std::function<double(std::size_t)>* jackknife_r2) {
    if (n_trials < 4) throw DomainError("fisher_z_r2_interval: need at least 4 trials");
    if (!(r_signed >= -1.0 && r_signed <= 1.0))
        throw DomainError("fisher_z_r2_interval: r must lie in [-1,1]");
    if (degenerate) *degenerate = false;

    if (std::abs(r_signed) >= 1.0) {
        // atanh singularity; fall back to a leave-one-out lower bound
        if (degenerate) *degenerate = true;
        double lo = 1.0;
        if (jackknife_r2) {
            for (std::size_t i = 0; i < n_trials; ++i) {
                const double r2 = (*jackknife_r2)(i);
                if (std::isfinite(r2)) lo = std::min(lo, r2);
            }
        }
        return {std::clamp(lo, 0.0, 1.0), 1.0};
    }

    const double z = std::atanh(r_signed);
    const double half = 1.96 / std::sqrt(static_cast<double>(n_trials) - 3.0);
    return order_and_clip_r_interval(std::tanh(z - half), std::tanh(z + half));
}

std::pair<double, double> bootstrap_r2_interval(
    std::size_t n_trials, int n_resamples,
    const std::function<double(const std::vector<std::size_t>&)>& recompute_r2,
    RngStream& rng) {
    if (n_trials < 5) throw DomainError("bootstrap_r2_interval: need at least 5 trials");
    if (n_resamples < 100) throw DomainError("bootstrap_r2_interval: too few resamples");

    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(n_resamples));
    std::vector<std::size_t> idx(n_trials);
    for (int b = 0; b < n_resamples; ++b) {
        for (std::size_t i = 0; i < n_trials; ++i)
            idx[i] = static_cast<std::size_t>(rng.below(n_trials));
        const double r2 = recompute_r2(idx);
        if (std::isfinite(r2)) stats.push_back(r2);
    }
    if (stats.size() < static_cast<std::size_t>(n_resamples) / 2)
        throw NumericError("bootstrap_r2_interval: too many degenerate resamples");
    std::sort(stats.begin(), stats.end());
    const auto quantile = [&](double q) {
        const double pos = q * (static_cast<double>(stats.size()) - 1.0);
        const std::size_t i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        if (i + 1 >= stats.size()) return stats.back();
        return stats[i] * (1.0 - frac) + stats[i + 1] * frac;
    };
    return {std::clamp(quantile(0.025), 0.0, 1.0), std::clamp(quantile(0.975), 0.0, 1.0)};
}

}  // namespace survalid
