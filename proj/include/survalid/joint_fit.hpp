#pragma once

#include <utility>
#include <vector>

#include "survalid/types.hpp"

namespace survalid {

// Per-trial parameter block of the stage-one joint likelihood: logistic
// intercept and treatment log-OR for the surrogate margin, log baseline rate
// and treatment log-HR for the exponential survival margin.
struct TrialParams {
    double gamma = 0.0;
    double alpha = 0.0;
    double log_lambda0 = 0.0;
    double beta = 0.0;
};

struct JointFitConfig {
    double theta_min = 0.05;
    double theta_max = 400.0;
    int scan_points = 13;        // coarse bracket scan of the profile
    double inner_grad_tol = 1e-8;
    int inner_max_iter = 50;
    double outer_tol = 1e-6;     // absolute tolerance in log theta
    double ci_step = 0.05;       // curvature step in log theta
};

struct JointFitResult {
    double theta_hat = 0.0;
    double logtheta_hat = 0.0;
    std::pair<double, double> theta_ci{0.0, 0.0};
    std::vector<TrialEffects> per_trial;     // joint optima with SEs
    std::vector<TrialParams> params_at_opt;  // warm starts for profile re-evaluation
    double loglik = 0.0;
    int profile_evals = 0;
    bool converged = false;
    int underflow_clamps = 0;    // likelihood contributions clamped at 1e-300
    int inner_nonconverged = 0;  // trials whose inner Newton missed tolerance
    bool profile_multimodal = false;
};

// Censored-data copula log-likelihood of one trial: binary surrogate margin
// logistic in treatment, event-time margin exponential proportional hazards,
// dependence through a Plackett copula with parameter theta. The four
// patient-level contributions (event/censored x responder/non-responder) are
// clamped below at 1e-300; clamp events are counted into *clamps.
double loglik_trial(const TrialParams& p, double theta, const TrialDataset& data,
                    int* clamps = nullptr);

// Analytic gradient in (gamma, alpha, log_lambda0, beta); optionally returns
// the log-likelihood value and clamp count from the same pass.
void loglik_trial_grad(const TrialParams& p, double theta, const TrialDataset& data,
                       double grad[4], double* loglik_out = nullptr, int* clamps = nullptr);

// Analytic d/dtheta of the trial log-likelihood.
double loglik_trial_dtheta(const TrialParams& p, double theta, const TrialDataset& data);

// Two-stage ML, stage one: maximise sum_i loglik_trial over all per-trial
// parameter blocks and one shared theta by profiling. Inner Newton per trial
// (initialised at the marginal estimates, warm-started along the profile);
// outer Brent search in log theta over [log theta_min, log theta_max].
// Throws FitError when more than 20% of trials fail to converge, and
// NumericError when the profile maximum sits at the bracket boundary.
JointFitResult fit_joint(const std::vector<TrialDataset>& trials,
                         const JointFitConfig& config = {});

// Wald interval for theta on the log scale from the numerical curvature of
// the profile log-likelihood at the optimum. Throws NumericError when the
// profile is flat (non-positive curvature).
std::pair<double, double> theta_confidence_interval(const std::vector<TrialDataset>& trials,
                                                    const JointFitResult& fit,
                                                    const JointFitConfig& config = {});

}  // namespace survalid
