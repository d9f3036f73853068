#include "survalid/synthesize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survalid/errors.hpp"
#include "survalid/plackett.hpp"

namespace survalid {

void PopulationParams::validate() const {
    if (!(r2_true >= 0.0 && r2_true <= 1.0))
        throw DomainError("PopulationParams: r2_true must lie in [0,1]");
    if (!(theta_true > 0.0)) throw DomainError("PopulationParams: theta_true must be positive");
    if (!(censor_rate >= 0.0 && censor_rate < 1.0))
        throw DomainError("PopulationParams: censor_rate must lie in [0,1)");
    if (!(t_assess >= 0.0)) throw DomainError("PopulationParams: t_assess must be >= 0");
    if (!std::isfinite(gamma) || !std::isfinite(log_lambda0) || !std::isfinite(alpha) ||
        !std::isfinite(beta))
        throw DomainError("PopulationParams: means must be finite");
}

TrialEffects draw_trial_effects(const PopulationParams& pop, RngStream& rng) {
    pop.validate();
    const double rho = -std::sqrt(pop.r2_true);
    const std::vector<double> mean{pop.gamma, pop.log_lambda0, pop.alpha, pop.beta};
    const std::vector<double> cov{
        1.0, rho, 0.0, 0.0,
        rho, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, rho,
        0.0, 0.0, rho, 1.0,
    };
    const auto x = mvn_sample(mean, cov, rng);
    TrialEffects e;
    e.gamma_i = x[0];
    e.log_lambda0_i = x[1];
    e.alpha_i = x[2];
    e.beta_i = x[3];
    return e;
}

TrialDataset synthesize_trial(const TrialEffects& effects, std::size_t n,
                              const PopulationParams& pop, RngStream trial_stream) {
    pop.validate();
    if (n < 2) throw DomainError("synthesize_trial: need at least 2 patients");

    // exact 1:1 allocation: shuffle indices, first ceil(n/2) are treated
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream assign = trial_stream.child(stream_tag::assignment);
    assign.shuffle(order);
    std::vector<int> z(n, 0);
    const std::size_t n_treated = (n + 1) / 2;
    for (std::size_t k = 0; k < n_treated; ++k) z[order[k]] = 1;

    const double lambda_c = -std::log1p(-pop.censor_rate);
    RngStream patients = trial_stream.child(stream_tag::patients);

    TrialDataset data;
    data.patients.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        RngStream pj = patients.child(j);
        const double v1 = pj.uniform01();
        const double v2 = pj.uniform01();
        const double vc = pj.uniform01();  // always drawn to keep streams aligned

        const auto [u1, u2] = plackett::sample_pair(v1, v2, pop.theta_true);
        const double p_z = expit(effects.gamma_i + effects.alpha_i * z[j]);
        int s = u1 < p_z ? 0 : 1;

        const double rate = std::exp(effects.log_lambda0_i + effects.beta_i * z[j]);
        const double t_event = -std::log(u2) / rate;
        const double t_censor =
            lambda_c > 0.0 ? -std::log(vc) / lambda_c
                           : std::numeric_limits<double>::infinity();

        PatientRecord& rec = data.patients[j];
        rec.treatment = z[j];
        rec.time = std::min(t_event, t_censor);
        rec.event = t_event <= t_censor;
        if (rec.time < pop.t_assess) s = 1;  // landmark override
        rec.surrogate = s;
    }
    return data;
}

std::vector<TrialDataset> synthesize_study(const PopulationParams& pop,
                                           const std::vector<std::size_t>& trial_sizes,
                                           RngStream study_stream) {
    if (trial_sizes.empty()) throw DomainError("synthesize_study: trial_sizes is empty");
    std::vector<TrialDataset> out;
    out.reserve(trial_sizes.size());
    for (std::size_t i = 0; i < trial_sizes.size(); ++i) {
        RngStream trial_stream = study_stream.child(i);
        RngStream eff_stream = trial_stream.child(stream_tag::effects);
        const TrialEffects effects = draw_trial_effects(pop, eff_stream);
        TrialDataset data = synthesize_trial(effects, trial_sizes[i], pop, trial_stream);
        data.trial_id = std::to_string(i + 1);
        out.push_back(std::move(data));
    }
    return out;
}

std::vector<TrialDataset> synthesize_study(const PopulationParams& pop,
                                           const std::vector<std::size_t>& trial_sizes,
                                           std::uint64_t master_seed) {
    return synthesize_study(pop, trial_sizes, RngStream::keyed({master_seed}));
}

}  // namespace survalid
