#include <doctest.h>

#include <cmath>
#include <vector>

#include "survalid/errors.hpp"
#include "survalid/rng.hpp"
#include "survalid/verdict.hpp"

using namespace survalid;

namespace {

SurrogacyEstimates make_est(double r2w, double r2w_lo, double r2c, double r2c_lo, double or_,
                            double or_lo) {
    SurrogacyEstimates e;
    e.r2_wls = {r2w, r2w_lo, 1.0};
    e.r2_copula = {r2c, r2c_lo, 1.0};
    e.r2_adj = {r2c, r2c_lo, 1.0};
    e.global_or = {or_, or_lo, or_ * 2};
    return e;
}

int rank(SurrogacyClass c) {
    switch (c) {
        case SurrogacyClass::fvs: return 2;
        case SurrogacyClass::rls: return 1;
        case SurrogacyClass::not_established: return 0;
    }
    return 0;
}

}  // namespace

TEST_CASE("classify: the four reference classifications") {
    // all clauses satisfied
    CHECK(classify(make_est(0.85, 0.65, 0.75, 0.55, 4.0, 1.5)).cls == SurrogacyClass::fvs);
    // CL of the qualifying R^2 only reaches 0.55 and the OR clause fails
    CHECK(classify(make_est(0.85, 0.55, 0.75, 0.50, 2.0, 0.9)).cls == SurrogacyClass::rls);
    // weak R^2 but a strong OR still gives the OR branch of RLS
    CHECK(classify(make_est(0.60, 0.30, 0.50, 0.20, 3.5, 1.2)).cls == SurrogacyClass::rls);
    // no clause fires
    CHECK(classify(make_est(0.60, 0.30, 0.50, 0.20, 2.0, 0.8)).cls ==
          SurrogacyClass::not_established);
}

TEST_CASE("classify: boundary strictness") {
    // max exactly 0.8 is not "> 0.8"
    CHECK(classify(make_est(0.80, 0.79, 0.75, 0.7, 4.0, 1.5)).cls != SurrogacyClass::fvs);
    // min exactly 0.7 satisfies "neither below 0.7"
    CHECK(classify(make_est(0.85, 0.65, 0.70, 0.6, 4.0, 1.5)).cls == SurrogacyClass::fvs);
    // OR exactly 3 is not "> 3"
    CHECK(classify(make_est(0.85, 0.65, 0.75, 0.6, 3.0, 1.5)).cls != SurrogacyClass::fvs);
}

TEST_CASE("classify: rationale is complete and deterministic") {
    const auto est = make_est(0.85, 0.65, 0.75, 0.55, 4.0, 1.5);
    const Verdict v1 = classify(est);
    const Verdict v2 = classify(est);
    REQUIRE(v1.rationale.size() == 6);
    CHECK(v1.rationale[0].rule == "r2_max_gt_0.8");
    for (std::size_t i = 0; i < v1.rationale.size(); ++i) {
        CHECK(v1.rationale[i].rule == v2.rationale[i].rule);
        CHECK(v1.rationale[i].pass == v2.rationale[i].pass);
        CHECK_FALSE(v1.rationale[i].operands.empty());
    }
    CHECK(v1.cls == v2.cls);
}

TEST_CASE("classify: missing intervals are an error, never NotEstablished") {
    SurrogacyEstimates e = make_est(0.85, 0.65, 0.75, 0.55, 4.0, 1.5);
    e.global_or.lo = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(classify(e), ValidationError);
    SurrogacyEstimates e2 = make_est(0.85, 0.65, 0.75, 0.55, 4.0, 1.5);
    e2.r2_wls.est = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(classify(e2), ValidationError);
}

TEST_CASE("classify: monotone in every favourable direction") {
    RngStream rng = RngStream::keyed({606});
    int checked = 0;
    for (int i = 0; i < 10000; ++i) {
        const double r2w = rng.uniform01();
        const double r2c = rng.uniform01();
        const double wlo = r2w * rng.uniform01();
        const double clo = r2c * rng.uniform01();
        const double orv = 0.5 + 7.0 * rng.uniform01();
        const double orlo = orv * rng.uniform01();
        const auto base = make_est(r2w, wlo, r2c, clo, orv, orlo);
        const int base_rank = rank(classify(base).cls);

        SurrogacyEstimates up = base;
        const int which = static_cast<int>(rng.below(6));
        switch (which) {
            case 0: up.r2_wls.est = std::min(1.0, r2w + 0.2); break;
            case 1: up.r2_copula.est = std::min(1.0, r2c + 0.2); break;
            case 2: up.r2_wls.lo = std::min(up.r2_wls.est, wlo + 0.2); break;
            case 3: up.r2_copula.lo = std::min(up.r2_copula.est, clo + 0.2); break;
            case 4: up.global_or.est = orv + 2.0; break;
            case 5: up.global_or.lo = orlo + 0.5; break;
        }
        // the cl_applies_to = max rule switches which CL is consulted when the
        // larger estimate changes; monotonicity is asserted jointly by also
        // never letting a raised estimate carry a lower CL
        if (which == 0) up.r2_wls.lo = std::max(up.r2_wls.lo, base.r2_wls.lo);
        if (which == 1) up.r2_copula.lo = std::max(up.r2_copula.lo, base.r2_copula.lo);
        const int up_rank = rank(classify(up).cls);
        CHECK(up_rank >= base_rank);
        ++checked;
    }
    CHECK(checked == 10000);
}

TEST_CASE("classify: FVS implies the RLS R^2 branch with the OR clause masked") {
    RngStream rng = RngStream::keyed({607});
    for (int i = 0; i < 5000; ++i) {
        const auto est = make_est(rng.uniform01(), rng.uniform01() * 0.9,
                                  rng.uniform01(), rng.uniform01() * 0.9,
                                  0.5 + 7.0 * rng.uniform01(), 0.2 + 2.0 * rng.uniform01());
        SurrogacyEstimates fixed = est;
        fixed.r2_wls.lo = std::min(fixed.r2_wls.lo, fixed.r2_wls.est);
        fixed.r2_copula.lo = std::min(fixed.r2_copula.lo, fixed.r2_copula.est);
        const Verdict v = classify(fixed);
        if (v.cls != SurrogacyClass::fvs) continue;
        SurrogacyEstimates masked = fixed;
        masked.global_or = {1.0, 0.5, 2.0};  // kill the OR branch
        const Verdict m = classify(masked);
        CHECK(m.cls == SurrogacyClass::rls);
    }
}

TEST_CASE("classify: cl_applies_to variants") {
    // wls is the larger estimate; its CL passes, the copula CL does not
    const auto est = make_est(0.9, 0.65, 0.75, 0.2, 4.0, 1.5);
    VerdictConfig cfg;
    cfg.cl_applies_to = ClAppliesTo::max_estimate;
    CHECK(classify(est, cfg).cls == SurrogacyClass::fvs);
    cfg.cl_applies_to = ClAppliesTo::both;
    CHECK(classify(est, cfg).cls != SurrogacyClass::fvs);
    cfg.cl_applies_to = ClAppliesTo::either;
    CHECK(classify(est, cfg).cls == SurrogacyClass::fvs);
}

TEST_CASE("acceptance_rates: counting") {
    const auto mk = [](SurrogacyClass c) {
        Verdict v;
        v.cls = c;
        return v;
    };
    const auto all_fvs = acceptance_rates({mk(SurrogacyClass::fvs), mk(SurrogacyClass::fvs)});
    CHECK(all_fvs.first == doctest::Approx(100.0));
    CHECK(all_fvs.second == doctest::Approx(100.0));

    const auto mixed =
        acceptance_rates({mk(SurrogacyClass::fvs), mk(SurrogacyClass::rls),
                          mk(SurrogacyClass::not_established), mk(SurrogacyClass::not_established)});
    CHECK(mixed.first == doctest::Approx(25.0));
    CHECK(mixed.second == doctest::Approx(50.0));

    CHECK_THROWS_AS(acceptance_rates({}), DomainError);
}
