#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "survalid/joint_fit.hpp"
#include "survalid/marginal.hpp"
#include "survalid/rng.hpp"
#include "survalid/trial_level.hpp"
#include "survalid/types.hpp"
#include "survalid/verdict.hpp"

namespace survalid {

enum class CiMethod { fisher_z, trial_bootstrap };
enum class EffectSource { marginal, joint };
enum class DispersionMode { raw, adjusted };

// Resolved estimator options. Defaults match the harness configuration;
// the fit subcommand swaps the CI method to the trial bootstrap.
struct EstimatorConfig {
    TieMethod ties = TieMethod::efron;
    WeightScheme wls_weights = WeightScheme::sample_size;
    CiMethod ci_method = CiMethod::fisher_z;
    int bootstrap_samples = 2000;
    EffectSource second_stage_effects = EffectSource::marginal;
    DispersionMode dispersion = DispersionMode::raw;
    VerdictConfig verdict;
    JointFitConfig joint;
};

// Per-trial effect estimates surfaced in reports: the stage-two inputs plus
// the forest-table quantities (treatment OR and HR, HR by surrogate status).
struct TrialEffectRow {
    std::string trial_id;
    std::size_t n = 0;
    std::size_t events = 0;
    double log_or = 0, se_log_or = 0;      // treatment effect on the surrogate
    double log_hr = 0, se_log_hr = 0;      // treatment effect on the event time
    double log_hr_surrogate = std::numeric_limits<double>::quiet_NaN();
    double se_log_hr_surrogate = std::numeric_limits<double>::quiet_NaN();
    double weight = 0;                     // stage-two WLS weight (R^2_wls scheme)
    bool zero_cell_corrected = false;
};

struct StudyFit {
    SurrogacyEstimates estimates;
    Verdict verdict;
    std::vector<TrialEffectRow> per_trial;
    JointFitResult joint;
};

// Full two-stage analysis of one multi-trial dataset. `bootstrap_stream`
// seeds the trial bootstrap when that CI method is selected.
StudyFit estimate_study(const std::vector<TrialDataset>& trials, const EstimatorConfig& config,
                        RngStream bootstrap_stream);

}  // namespace survalid
