#include "survalid/verdict.hpp"

#include <algorithm>
#include <cmath>

#include "survalid/errors.hpp"

namespace survalid {

std::string to_string(SurrogacyClass c) {
    switch (c) {
        case SurrogacyClass::fvs: return "FVS";
        case SurrogacyClass::rls: return "RLS";
        case SurrogacyClass::not_established: return "NotEstablished";
    }
    return "NotEstablished";
}

namespace {

void require_finite(double x, const char* what) {
    if (!std::isfinite(x))
        throw ValidationError(std::string("classify: missing or non-finite ") + what);
}

}  // namespace

Verdict classify(const SurrogacyEstimates& est, const VerdictConfig& config) {
    require_finite(est.r2_wls.est, "r2_wls estimate");
    require_finite(est.r2_wls.lo, "r2_wls lower confidence limit");
    require_finite(est.r2_copula.est, "r2_copula estimate");
    require_finite(est.r2_copula.lo, "r2_copula lower confidence limit");
    require_finite(est.global_or.est, "global OR estimate");
    require_finite(est.global_or.lo, "global OR lower confidence limit");

    const double r2_hi = std::max(est.r2_wls.est, est.r2_copula.est);
    const double r2_lo_est = std::min(est.r2_wls.est, est.r2_copula.est);
    const double cl_of_max =
        est.r2_wls.est >= est.r2_copula.est ? est.r2_wls.lo : est.r2_copula.lo;

    const auto cl_clause = [&](double threshold) {
        switch (config.cl_applies_to) {
            case ClAppliesTo::max_estimate: return cl_of_max > threshold;
            case ClAppliesTo::both:
                return est.r2_wls.lo > threshold && est.r2_copula.lo > threshold;
            case ClAppliesTo::either:
                return est.r2_wls.lo > threshold || est.r2_copula.lo > threshold;
        }
        return false;
    };

    Verdict v;
    auto record = [&](std::string rule,
                      std::vector<std::pair<std::string, double>> operands,
                      bool pass) {
        v.rationale.push_back(RuleEval{std::move(rule), std::move(operands), pass});
        return pass;
    };

    const bool r2_max_ok = record(
        "r2_max_gt_0.8",
        {{"r2_wls", est.r2_wls.est}, {"r2_copula", est.r2_copula.est}, {"max", r2_hi}},
        r2_hi > 0.8);
    const bool r2_min_ok =
        record("r2_min_ge_0.7", {{"min", r2_lo_est}}, r2_lo_est >= 0.7);
    const bool cl06_ok = record(
        "r2_cl_gt_0.6", {{"cl_wls", est.r2_wls.lo}, {"cl_copula", est.r2_copula.lo}},
        cl_clause(0.6));
    const bool cl05_ok = record(
        "r2_cl_gt_0.5", {{"cl_wls", est.r2_wls.lo}, {"cl_copula", est.r2_copula.lo}},
        cl_clause(0.5));
    const bool or_ok = record("or_gt_3", {{"global_or", est.global_or.est}},
                              est.global_or.est > 3.0);
    const bool or_cl_ok = record("or_cl_gt_1", {{"or_lower_cl", est.global_or.lo}},
                                 est.global_or.lo > 1.0);

    const bool fvs = r2_max_ok && r2_min_ok && cl06_ok && or_ok && or_cl_ok;
    const bool rls_r2_branch = r2_max_ok && cl05_ok && r2_min_ok;
    const bool rls_or_branch = or_ok && or_cl_ok;

    if (fvs)
        v.cls = SurrogacyClass::fvs;
    else if (rls_r2_branch || rls_or_branch)
        v.cls = SurrogacyClass::rls;
    else
        v.cls = SurrogacyClass::not_established;
    return v;
}

std::pair<double, double> acceptance_rates(const std::vector<Verdict>& verdicts) {
    if (verdicts.empty()) throw DomainError("acceptance_rates: empty input");
    double fvs = 0, rls = 0;
    for (const auto& v : verdicts) {
        if (v.cls == SurrogacyClass::fvs) fvs += 1.0;
        if (v.cls == SurrogacyClass::rls) rls += 1.0;
    }
    const double n = static_cast<double>(verdicts.size());
    return {100.0 * fvs / n, 100.0 * (fvs + rls) / n};
}

}  // namespace survalid
