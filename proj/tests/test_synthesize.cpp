#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "survalid/errors.hpp"
#include "survalid/synthesize.hpp"

using namespace survalid;

namespace {

PopulationParams base_pop() {
    PopulationParams pop;
    pop.r2_true = 0.65;
    pop.theta_true = 3.0;
    pop.censor_rate = 0.05;
    pop.t_assess = 0.5;
    return pop;
}

}  // namespace

TEST_CASE("draw_trial_effects: r2 = 0 gives independent coordinates") {
    PopulationParams pop = base_pop();
    pop.r2_true = 0.0;
    RngStream rng = RngStream::keyed({11});
    const std::size_t n = 100000;
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    double sg = 0, sl = 0, sgl = 0, sgg = 0, sll = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const TrialEffects e = draw_trial_effects(pop, rng);
        sa += e.alpha_i;
        sb += e.beta_i;
        sab += e.alpha_i * e.beta_i;
        saa += e.alpha_i * e.alpha_i;
        sbb += e.beta_i * e.beta_i;
        sg += e.gamma_i;
        sl += e.log_lambda0_i;
        sgl += e.gamma_i * e.log_lambda0_i;
        sgg += e.gamma_i * e.gamma_i;
        sll += e.log_lambda0_i * e.log_lambda0_i;
    }
    const double na = static_cast<double>(n);
    const double corr_ab = (sab / na - sa / na * sb / na) /
                           std::sqrt((saa / na - sa / na * sa / na) * (sbb / na - sb / na * sb / na));
    const double corr_gl = (sgl / na - sg / na * sl / na) /
                           std::sqrt((sgg / na - sg / na * sg / na) * (sll / na - sl / na * sl / na));
    CHECK(std::abs(corr_ab) < 0.01);
    CHECK(std::abs(corr_gl) < 0.01);
}

TEST_CASE("draw_trial_effects: r2 = 1 is exactly anti-correlated") {
    PopulationParams pop = base_pop();
    pop.r2_true = 1.0;
    RngStream rng = RngStream::keyed({12});
    for (int i = 0; i < 2000; ++i) {
        const TrialEffects e = draw_trial_effects(pop, rng);
        CHECK(e.beta_i - pop.beta ==
              doctest::Approx(-(e.alpha_i - pop.alpha)).epsilon(1e-10).scale(1e-10));
    }
}

TEST_CASE("draw_trial_effects: r2 = 0.65 hits corr -sqrt(0.65)") {
    PopulationParams pop = base_pop();
    pop.r2_true = 0.65;
    RngStream rng = RngStream::keyed({13});
    const std::size_t n = 100000;
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const TrialEffects e = draw_trial_effects(pop, rng);
        sa += e.alpha_i;
        sb += e.beta_i;
        sab += e.alpha_i * e.beta_i;
        saa += e.alpha_i * e.alpha_i;
        sbb += e.beta_i * e.beta_i;
    }
    const double na = static_cast<double>(n);
    const double corr = (sab / na - sa / na * sb / na) /
                        std::sqrt((saa / na - sa / na * sa / na) * (sbb / na - sb / na * sb / na));
    CHECK(corr == doctest::Approx(-std::sqrt(0.65)).epsilon(0.01 / 0.806));
}

TEST_CASE("draw_trial_effects: invalid r2 rejected") {
    PopulationParams pop = base_pop();
    pop.r2_true = 1.2;
    RngStream rng = RngStream::keyed({14});
    CHECK_THROWS_AS(draw_trial_effects(pop, rng), DomainError);
}

TEST_CASE("synthesize_trial: censor_rate = 0 means every record is an event") {
    PopulationParams pop = base_pop();
    pop.censor_rate = 0.0;
    TrialEffects eff{pop.gamma, pop.log_lambda0, pop.alpha, pop.beta, 0, 0};
    const TrialDataset t = synthesize_trial(eff, 5000, pop, RngStream::keyed({21}));
    for (const auto& p : t.patients) CHECK(p.event);
}

TEST_CASE("synthesize_trial: saturated response with no landmark makes everyone a responder") {
    PopulationParams pop = base_pop();
    pop.t_assess = 0.0;
    TrialEffects eff{50.0, pop.log_lambda0, 0.0, pop.beta, 0, 0};  // p_z = 1 both arms
    const TrialDataset t = synthesize_trial(eff, 2000, pop, RngStream::keyed({22}));
    for (const auto& p : t.patients) CHECK(p.surrogate == 0);
}

TEST_CASE("synthesize_trial: 1:1 allocation is exact") {
    PopulationParams pop = base_pop();
    const TrialEffects eff{pop.gamma, pop.log_lambda0, pop.alpha, pop.beta, 0, 0};
    for (std::size_t n : {std::size_t{2}, std::size_t{17}, std::size_t{300}}) {
        const TrialDataset t = synthesize_trial(eff, n, pop, RngStream::keyed({23, n}));
        std::size_t treated = 0;
        for (const auto& p : t.patients) treated += static_cast<std::size_t>(p.treatment);
        CHECK(treated == (n + 1) / 2);
    }
    CHECK_THROWS_AS(synthesize_trial(eff, 1, pop, RngStream::keyed({24})), DomainError);
}

TEST_CASE("synthesize_trial: marginal P(S=0|z) is correct pre-landmark") {
    PopulationParams pop = base_pop();
    pop.theta_true = 1.0;
    pop.t_assess = 0.0;  // no landmark contamination
    pop.censor_rate = 0.0;
    pop.gamma = std::log(0.4 / 0.6);
    TrialEffects eff{pop.gamma, pop.log_lambda0, 0.7, pop.beta, 0, 0};
    const std::size_t n = 100000;
    const TrialDataset t = synthesize_trial(eff, n, pop, RngStream::keyed({25}));
    double resp0 = 0, n0 = 0, resp1 = 0, n1 = 0;
    for (const auto& p : t.patients) {
        if (p.treatment == 0) {
            n0 += 1;
            resp0 += p.surrogate == 0 ? 1 : 0;
        } else {
            n1 += 1;
            resp1 += p.surrogate == 0 ? 1 : 0;
        }
    }
    CHECK(resp0 / n0 == doctest::Approx(0.4).epsilon(0.005 / 0.4));
    const double p1 = expit(eff.gamma_i + eff.alpha_i);
    CHECK(std::abs(resp1 / n1 - p1) < 3.0 * std::sqrt(p1 * (1 - p1) / n1));
}

TEST_CASE("synthesize_trial: survival margin is exponential with the right rates") {
    PopulationParams pop = base_pop();
    pop.censor_rate = 0.0;
    pop.t_assess = 0.0;
    pop.theta_true = 1.0;
    TrialEffects eff{pop.gamma, std::log(0.25), 0.8, -0.6, 0, 0};
    const std::size_t n = 100000;
    const TrialDataset t = synthesize_trial(eff, n, pop, RngStream::keyed({26}));
    double sum0 = 0, n0 = 0, sum1 = 0, n1 = 0;
    for (const auto& p : t.patients) {
        if (p.treatment == 0) {
            sum0 += p.time;
            n0 += 1;
        } else {
            sum1 += p.time;
            n1 += 1;
        }
    }
    const double mean0 = 1.0 / 0.25;
    const double mean1 = 1.0 / (0.25 * std::exp(-0.6));
    // exponential: sd = mean, so 3 SE = 3 mean / sqrt(n)
    CHECK(std::abs(sum0 / n0 - mean0) < 3.0 * mean0 / std::sqrt(n0));
    CHECK(std::abs(sum1 / n1 - mean1) < 3.0 * mean1 / std::sqrt(n1));
}

TEST_CASE("synthesize_trial: joint dependence matches theta via the cross ratio") {
    for (double theta : {3.0, 7.0}) {
        PopulationParams pop = base_pop();
        pop.theta_true = theta;
        pop.censor_rate = 0.0;
        pop.t_assess = 0.0;  // S stays pre-landmark
        TrialEffects eff{pop.gamma, pop.log_lambda0, 0.0, 0.0, 0, 0};
        const std::size_t n = 1000000;
        const TrialDataset t =
            synthesize_trial(eff, n, pop, RngStream::keyed({27, static_cast<std::uint64_t>(theta)}));
        std::vector<double> times;
        times.reserve(n);
        for (const auto& p : t.patients) times.push_back(p.time);
        std::nth_element(times.begin(), times.begin() + n / 2, times.end());
        const double median = times[n / 2];
        double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
        for (const auto& p : t.patients) {
            const bool resp = p.surrogate == 0;
            const bool longer = p.time > median;
            (resp ? (longer ? n00 : n01) : (longer ? n10 : n11)) += 1.0;
        }
        const double ratio = (n00 * n11) / (n01 * n10);
        CHECK(ratio == doctest::Approx(theta).epsilon(0.10));
    }
}

TEST_CASE("synthesize_trial: landmark override is monotone in t_assess") {
    PopulationParams pop = base_pop();
    std::size_t prev = 0;
    for (double t_assess : {0.0, 0.25, 0.5, 1.0, 2.0}) {
        pop.t_assess = t_assess;
        TrialEffects eff{pop.gamma, pop.log_lambda0, pop.alpha, pop.beta, 0, 0};
        const TrialDataset t = synthesize_trial(eff, 20000, pop, RngStream::keyed({28}));
        std::size_t nonresp = 0;
        for (const auto& p : t.patients) nonresp += p.surrogate == 1 ? 1 : 0;
        CHECK(nonresp >= prev);
        prev = nonresp;
    }
}

TEST_CASE("synthesize_trial: censoring fraction monotone in censor rate and event rate") {
    PopulationParams pop = base_pop();
    const auto censored_count = [&](double rc, double loglam) {
        pop.censor_rate = rc;
        TrialEffects eff{pop.gamma, loglam, pop.alpha, pop.beta, 0, 0};
        const TrialDataset t = synthesize_trial(eff, 20000, pop, RngStream::keyed({29}));
        std::size_t c = 0;
        for (const auto& p : t.patients) c += p.event ? 0 : 1;
        return c;
    };
    CHECK(censored_count(0.05, std::log(0.15)) <= censored_count(0.10, std::log(0.15)));
    CHECK(censored_count(0.10, std::log(0.15)) <= censored_count(0.15, std::log(0.15)));
    // faster events leave less room for censoring
    CHECK(censored_count(0.10, std::log(0.60)) <= censored_count(0.10, std::log(0.15)));
}

TEST_CASE("synthesize_study: sizes, cycling and bitwise determinism") {
    PopulationParams pop = base_pop();
    const std::vector<std::size_t> equal(10, 300);
    const auto study = synthesize_study(pop, equal, 777);
    REQUIRE(study.size() == 10);
    for (const auto& t : study) CHECK(t.n() == 300);

    std::vector<std::size_t> mixed;
    const std::size_t cycle[3] = {300, 500, 1000};
    for (int i = 0; i < 7; ++i) mixed.push_back(cycle[i % 3]);
    const auto study2 = synthesize_study(pop, mixed, 778);
    REQUIRE(study2.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) CHECK(study2[i].n() == cycle[i % 3]);

    const auto again = synthesize_study(pop, equal, 777);
    REQUIRE(again.size() == study.size());
    for (std::size_t i = 0; i < study.size(); ++i) {
        CHECK(again[i].trial_id == study[i].trial_id);
        REQUIRE(again[i].n() == study[i].n());
        for (std::size_t j = 0; j < study[i].n(); ++j) {
            CHECK(again[i].patients[j].time == study[i].patients[j].time);
            CHECK(again[i].patients[j].event == study[i].patients[j].event);
            CHECK(again[i].patients[j].surrogate == study[i].patients[j].surrogate);
            CHECK(again[i].patients[j].treatment == study[i].patients[j].treatment);
        }
    }

    CHECK_THROWS_AS(synthesize_study(pop, {}, 1), DomainError);
}
