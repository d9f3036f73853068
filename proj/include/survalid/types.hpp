#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace survalid {

// One subject's row. Surrogate coding follows the responder-is-zero
// convention: 0 = responder, 1 = non-responder.
struct PatientRecord {
    double time = 0.0;   // observed follow-up
    bool event = false;  // true = failure observed
    int surrogate = 1;   // 0 responder / 1 non-responder
    int treatment = 0;   // 1 = treated arm
};

struct TrialDataset {
    std::string trial_id;
    std::vector<PatientRecord> patients;

    std::size_t n() const { return patients.size(); }
    std::size_t events() const {
        std::size_t k = 0;
        for (const auto& p : patients) k += p.event ? 1 : 0;
        return k;
    }
    bool both_arms() const {
        bool t = false, c = false;
        for (const auto& p : patients) (p.treatment ? t : c) = true;
        return t && c;
    }
};

// Trial-specific parameters: log-odds intercept, log baseline hazard and the
// two treatment effects (log odds ratio on the surrogate, log hazard ratio on
// the event time). Standard errors are filled on the estimation side only.
struct TrialEffects {
    double gamma_i = 0.0;
    double log_lambda0_i = 0.0;
    double alpha_i = 0.0;
    double beta_i = 0.0;
    double se_alpha = std::numeric_limits<double>::quiet_NaN();
    double se_beta = std::numeric_limits<double>::quiet_NaN();
};

// Population-level generator constants. One time unit is one year; the
// default binary-endpoint assessment time is six months.
struct PopulationParams {
    double gamma = std::log(0.40 / 0.60);    // 40% control-arm response
    double log_lambda0 = std::log(0.15);     // median control survival ~4.6y
    double alpha = 0.8;                      // mean treatment log-OR
    double beta = -0.74;                     // mean treatment log-HR
    double r2_true = 0.65;                   // target trial-level R^2
    double theta_true = 3.0;                 // true global odds ratio
    double censor_rate = 0.05;               // one-year censoring probability
    double t_assess = 0.5;                   // landmark assessment time

    void validate() const;  // throws DomainError
};

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace survalid
