#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "survalid/rng.hpp"

namespace survalid {

// Between-trial covariance of the (alpha_i, beta_i) treatment-effect pairs.
struct DispersionMatrix {
    double d_aa = 0.0;
    double d_ab = 0.0;
    double d_bb = 0.0;
};

// Sample covariance (denominator N-1) of the effect pairs; needs >= 3 trials
// and non-degenerate variation in both coordinates.
DispersionMatrix fit_dispersion(const std::vector<double>& alpha,
                                const std::vector<double>& beta);

// d_ab^2 / (d_aa d_bb).
double r2_copula(const DispersionMatrix& d);

struct WlsFit {
    double r2 = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
};

// Weighted least squares of beta on alpha with weights w:
// R^2 = 1 - sum w r^2 / sum w (beta - weighted mean)^2.
WlsFit wls_r2(const std::vector<double>& alpha, const std::vector<double>& beta,
              const std::vector<double>& weights);

enum class WeightScheme { inverse_var_log_or, sample_size, inverse_sample_size };

std::vector<double> wls_weights(WeightScheme scheme, const std::vector<double>& se_alpha,
                                const std::vector<std::size_t>& trial_sizes);

// Fisher-z interval for R^2 given the signed correlation r. The r-interval
// atanh(r) +- 1.96/sqrt(N-3) maps back through tanh and is squared with order
// preserved; R^2 bounds are clipped to [0,1]. |r| = 1 is degenerate: the
// lower bound falls back to the smallest leave-one-out R^2 when a jackknife
// recompute is supplied (flag set), requires n_trials >= 4.
std::pair<double, double> fisher_z_r2_interval(
    double r_signed, std::size_t n_trials, bool* degenerate = nullptr,
    const std::function<double(std::size_t)>* jackknife_r2 = nullptr);

// Percentile interval from trial-level bootstrap resamples. `recompute_r2`
// receives the resampled trial indices and returns the R^2 of that resample
// (NaN to skip a degenerate resample); requires n_trials >= 5.
std::pair<double, double> bootstrap_r2_interval(
    std::size_t n_trials, int n_resamples,
    const std::function<double(const std::vector<std::size_t>&)>& recompute_r2,
    RngStream& rng);

}  // namespace survalid
