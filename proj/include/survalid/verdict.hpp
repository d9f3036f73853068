#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace survalid {

struct IntervalEstimate {
    double est = std::numeric_limits<double>::quiet_NaN();
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
};

// Quality markers accumulated along the estimation pipeline.
struct QualityFlags {
    int zero_cell_trials = 0;
    int underflow_clamps = 0;
    int inner_nonconverged = 0;
    bool profile_multimodal = false;
    bool r2_clipped = false;
    bool fisherz_degenerate = false;
};

struct SurrogacyEstimates {
    IntervalEstimate r2_copula;
    IntervalEstimate r2_wls;
    IntervalEstimate r2_adj;
    IntervalEstimate global_or;
    double wls_slope = std::numeric_limits<double>::quiet_NaN();
    double wls_intercept = std::numeric_limits<double>::quiet_NaN();
    QualityFlags flags;
};

enum class SurrogacyClass { fvs, rls, not_established };

std::string to_string(SurrogacyClass c);

// One evaluated decision clause: id, the operand values it compared, outcome.
struct RuleEval {
    std::string rule;
    std::vector<std::pair<std::string, double>> operands;
    bool pass = false;
};

struct Verdict {
    SurrogacyClass cls = SurrogacyClass::not_established;
    std::vector<RuleEval> rationale;
};

// Which R^2's lower confidence limit the CL clauses test: the larger point
// estimate (default), both, or either.
enum class ClAppliesTo { max_estimate, both, either };

struct VerdictConfig {
    ClAppliesTo cl_applies_to = ClAppliesTo::max_estimate;
};

// Tiered decision rules. Fully validated surrogate: one of R^2_wls/R^2_copula
// above 0.8, neither below 0.7, qualifying lower confidence limit above 0.6,
// and global OR above 3 with lower confidence limit above 1. Reasonably
// likely: the same R^2 clauses with the CL threshold relaxed to 0.5 and no OR
// requirement, or the OR clause alone. Every clause is evaluated and recorded
// in the rationale. Missing intervals raise ValidationError.
Verdict classify(const SurrogacyEstimates& est, const VerdictConfig& config = {});

// (FVS rate, RLS-or-better rate) as percentages.
std::pair<double, double> acceptance_rates(const std::vector<Verdict>& verdicts);

}  // namespace survalid
