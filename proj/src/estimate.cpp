#include "survalid/estimate.hpp"

#include <algorithm>
#include <cmath>

#include "survalid/errors.hpp"

namespace survalid {

namespace {

struct StageTwoInputs {
    std::vector<double> alpha, beta, se_alpha;
    std::vector<std::size_t> sizes;
};

double signed_sqrt_r2(const DispersionMatrix& d) {
    return d.d_ab / std::sqrt(d.d_aa * d.d_bb);
}

DispersionMatrix adjust_dispersion(DispersionMatrix d, const std::vector<double>& se_alpha,
                                   const std::vector<TrialEffectRow>& rows) {
    // measurement-error correction: subtract the mean squared standard errors
    // from the diagonal, floored at 10% of the raw variance
    double msa = 0, msb = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        msa += se_alpha[i] * se_alpha[i];
        msb += rows[i].se_log_hr * rows[i].se_log_hr;
    }
    msa /= static_cast<double>(rows.size());
    msb /= static_cast<double>(rows.size());
    d.d_aa = std::max(d.d_aa - msa, 0.1 * d.d_aa);
    d.d_bb = std::max(d.d_bb - msb, 0.1 * d.d_bb);
    return d;
}

// R^2_copula of a trial subset, NaN when the subset is degenerate.
double subset_r2_copula(const StageTwoInputs& in, const std::vector<std::size_t>& idx) {
    std::vector<double> a, b;
    a.reserve(idx.size());
    b.reserve(idx.size());
    for (std::size_t i : idx) {
        a.push_back(in.alpha[i]);
        b.push_back(in.beta[i]);
    }
    try {
        return r2_copula(fit_dispersion(a, b));
    } catch (const std::exception&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

double subset_r2_wls(const StageTwoInputs& in, const std::vector<std::size_t>& idx,
                     WeightScheme scheme) {
    std::vector<double> a, b, se;
    std::vector<std::size_t> ns;
    for (std::size_t i : idx) {
        a.push_back(in.alpha[i]);
        b.push_back(in.beta[i]);
        se.push_back(in.se_alpha[i]);
        ns.push_back(in.sizes[i]);
    }
    try {
        return wls_r2(a, b, wls_weights(scheme, se, ns)).r2;
    } catch (const std::exception&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

std::vector<std::size_t> drop_index(std::size_t n, std::size_t skip) {
    std::vector<std::size_t> idx;
    idx.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        if (i != skip) idx.push_back(i);
    return idx;
}

IntervalEstimate clip_interval(IntervalEstimate iv, bool* clipped) {
    const auto clip01 = [&](double x) {
        const double c = std::clamp(x, 0.0, 1.0);
        if (c != x && clipped) *clipped = true;
        return c;
    };
    iv.est = clip01(iv.est);
    iv.lo = clip01(iv.lo);
    iv.hi = clip01(iv.hi);
    return iv;
}

}  // namespace

StudyFit estimate_study(const std::vector<TrialDataset>& trials, const EstimatorConfig& config,
                        RngStream bootstrap_stream) {
    if (trials.size() < 3)
        throw EstimationError("estimate_study: the second stage needs at least 3 trials");

    StudyFit out;

    // stage one, marginal models per trial
    std::vector<LogisticFit> logistic;
    std::vector<CoxFit> cox;
    logistic.reserve(trials.size());
    cox.reserve(trials.size());
    for (const auto& t : trials) {
        LogisticFit lf = fit_logistic_treatment(t);
        CoxFit cf = fit_cox_treatment(t, config.ties);
        TrialEffectRow row;
        row.trial_id = t.trial_id;
        row.n = t.n();
        row.events = t.events();
        row.log_or = lf.alpha_hat;
        row.se_log_or = lf.se_alpha;
        row.log_hr = cf.beta_hat;
        row.se_log_hr = cf.se_beta;
        row.zero_cell_corrected = lf.zero_cell_corrected;
        if (lf.zero_cell_corrected) ++out.estimates.flags.zero_cell_trials;
        // event-time hazard ratio by surrogate status (forest-table column);
        // degenerate strata are reported as NaN rather than failing the study
        try {
            std::vector<double> time, x;
            std::vector<int> ev;
            for (const auto& pr : t.patients) {
                time.push_back(pr.time);
                ev.push_back(pr.event ? 1 : 0);
                x.push_back(static_cast<double>(pr.surrogate));
            }
            CoxFit sf = fit_cox(time, ev, x, config.ties);
            row.log_hr_surrogate = sf.beta_hat;
            row.se_log_hr_surrogate = sf.se_beta;
        } catch (const std::exception&) {
        }
        out.per_trial.push_back(std::move(row));
        logistic.push_back(lf);
        cox.push_back(cf);
    }

    // stage one, joint copula likelihood for the global odds ratio
    out.joint = fit_joint(trials, config.joint);
    out.estimates.global_or =
        IntervalEstimate{out.joint.theta_hat, out.joint.theta_ci.first, out.joint.theta_ci.second};
    out.estimates.flags.underflow_clamps = out.joint.underflow_clamps;
    out.estimates.flags.inner_nonconverged = out.joint.inner_nonconverged;
    out.estimates.flags.profile_multimodal = out.joint.profile_multimodal;

    // stage-two inputs: marginal effects by default, joint optima on request
    StageTwoInputs in;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (config.second_stage_effects == EffectSource::marginal) {
            in.alpha.push_back(logistic[i].alpha_hat);
            in.beta.push_back(cox[i].beta_hat);
            in.se_alpha.push_back(logistic[i].se_alpha);
        } else {
            in.alpha.push_back(out.joint.per_trial[i].alpha_i);
            in.beta.push_back(out.joint.per_trial[i].beta_i);
            const double se = out.joint.per_trial[i].se_alpha;
            in.se_alpha.push_back(std::isfinite(se) ? se : logistic[i].se_alpha);
        }
        in.sizes.push_back(trials[i].n());
    }

    DispersionMatrix disp = fit_dispersion(in.alpha, in.beta);
    if (config.dispersion == DispersionMode::adjusted)
        disp = adjust_dispersion(disp, in.se_alpha, out.per_trial);
    const double r2c = r2_copula(disp);
    const double r_signed = signed_sqrt_r2(disp);

    const auto wls_w = wls_weights(config.wls_weights, in.se_alpha, in.sizes);
    const WlsFit wls = wls_r2(in.alpha, in.beta, wls_w);
    const auto adj_w = wls_weights(WeightScheme::inverse_var_log_or, in.se_alpha, in.sizes);
    const WlsFit adj = wls_r2(in.alpha, in.beta, adj_w);
    for (std::size_t i = 0; i < out.per_trial.size(); ++i) out.per_trial[i].weight = wls_w[i];

    out.estimates.wls_slope = wls.slope;
    out.estimates.wls_intercept = wls.intercept;

    const std::size_t n_trials = trials.size();
    const auto interval_for = [&](double point, double r_for_fisher, RngStream bs,
                                  auto&& recompute_subset) -> IntervalEstimate {
        IntervalEstimate iv;
        iv.est = point;
        if (config.ci_method == CiMethod::fisher_z) {
            bool degen = false;
            std::function<double(std::size_t)> jack = [&](std::size_t skip) {
                return recompute_subset(drop_index(n_trials, skip));
            };
            const auto ci = fisher_z_r2_interval(r_for_fisher, n_trials, &degen, &jack);
            if (degen) out.estimates.flags.fisherz_degenerate = true;
            iv.lo = ci.first;
            iv.hi = ci.second;
        } else {
            const auto ci = bootstrap_r2_interval(
                n_trials, config.bootstrap_samples,
                [&](const std::vector<std::size_t>& idx) { return recompute_subset(idx); }, bs);
            iv.lo = ci.first;
            iv.hi = ci.second;
        }
        return clip_interval(iv, &out.estimates.flags.r2_clipped);
    };

    out.estimates.r2_copula = interval_for(
        r2c, r_signed, bootstrap_stream.child(1),
        [&](const std::vector<std::size_t>& idx) { return subset_r2_copula(in, idx); });
    const double r_wls = std::copysign(std::sqrt(std::clamp(wls.r2, 0.0, 1.0)), wls.slope);
    out.estimates.r2_wls = interval_for(
        wls.r2, r_wls, bootstrap_stream.child(2), [&](const std::vector<std::size_t>& idx) {
            return subset_r2_wls(in, idx, config.wls_weights);
        });
    const double r_adj = std::copysign(std::sqrt(std::clamp(adj.r2, 0.0, 1.0)), adj.slope);
    out.estimates.r2_adj = interval_for(
        adj.r2, r_adj, bootstrap_stream.child(3), [&](const std::vector<std::size_t>& idx) {
            return subset_r2_wls(in, idx, WeightScheme::inverse_var_log_or);
        });

    out.verdict = classify(out.estimates, config.verdict);
    return out;
}

}  // namespace survalid
