#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "survalid/types.hpp"

namespace survalid {

// Saturated one-covariate logistic fit: closed-form MLE from the 2x2 table
// of responder status (surrogate == 0) by arm.
struct LogisticFit {
    double gamma_hat = 0.0;  // control-arm log-odds of response
    double alpha_hat = 0.0;  // treatment log odds ratio
    double se_gamma = 0.0;
    double se_alpha = 0.0;
    // (control responders, control non-responders, treated responders,
    //  treated non-responders); +0.5 each when a zero cell was corrected
    std::array<double, 4> counts{};
    bool zero_cell_corrected = false;
};

LogisticFit fit_logistic_treatment(const TrialDataset& data);

enum class TieMethod { efron, breslow };

struct CoxFit {
    double beta_hat = 0.0;  // log hazard ratio for the covariate
    double se_beta = 0.0;
    std::size_t n_events = 0;
    int iterations = 0;
};

// Cox proportional hazards partial likelihood for a single covariate,
// Newton-Raphson from beta = 0 with step-halving. Convergence when
// |score| < 1e-10 or |step| < 1e-12; |beta| > 20 raises EstimationError
// (monotone likelihood), non-convergence raises NumericError.
CoxFit fit_cox(const std::vector<double>& time, const std::vector<int>& event,
               const std::vector<double>& covariate, TieMethod ties = TieMethod::efron);

// Treatment-covariate convenience wrapper (requires both arms present).
CoxFit fit_cox_treatment(const TrialDataset& data, TieMethod ties = TieMethod::efron);

// Cox partial log-likelihood at a given beta (exposed for oracle tests).
double cox_partial_loglik(const std::vector<double>& time, const std::vector<int>& event,
                          const std::vector<double>& covariate, double beta,
                          TieMethod ties = TieMethod::efron);

// Exponential proportional-hazards MLE: per-arm rate = events / follow-up.
struct ExponentialFit {
    double lambda0_hat = 0.0;  // control-arm rate
    double beta_hat = 0.0;     // log rate ratio treated vs control
};

ExponentialFit fit_exponential_ph(const TrialDataset& data);

}  // namespace survalid
