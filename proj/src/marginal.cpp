#include "survalid/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "survalid/errors.hpp"

namespace survalid {

LogisticFit fit_logistic_treatment(const TrialDataset& data) {
    if (!data.both_arms())
        throw EstimationError("fit_logistic_treatment: both arms are required");

    double a = 0, b = 0, c = 0, d = 0;  // responders/non-responders by arm
    for (const auto& p : data.patients) {
        const bool resp = p.surrogate == 0;
        if (p.treatment == 0)
            (resp ? a : b) += 1.0;
        else
            (resp ? c : d) += 1.0;
    }

    LogisticFit fit;
    if (a == 0 || b == 0 || c == 0 || d == 0) {
        // Haldane-Anscombe continuity correction, flagged to the caller
        a += 0.5;
        b += 0.5;
        c += 0.5;
        d += 0.5;
        fit.zero_cell_corrected = true;
    }
    fit.counts = {a, b, c, d};
    fit.gamma_hat = std::log(a / b);
    fit.alpha_hat = std::log((c * b) / (d * a));
    fit.se_gamma = std::sqrt(1.0 / a + 1.0 / b);
    fit.se_alpha = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
    return fit;
}

namespace {

struct CoxDerivs {
    double loglik = 0.0;
    double score = 0.0;
    double info = 0.0;
    std::size_t n_events = 0;
};

// One pass over the risk sets at a fixed beta. Times are processed in
// decreasing order so the running sums hold everyone still at risk; tied
// event times form one death set handled per the tie method.
CoxDerivs cox_pass(const std::vector<std::size_t>& order, const std::vector<double>& time,
                   const std::vector<int>& event, const std::vector<double>& x, double beta,
                   TieMethod ties) {
    CoxDerivs out;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;  // sums of w, w x, w x^2 over the risk set
    std::size_t i = 0;
    const std::size_t n = order.size();
    while (i < n) {
        const double t = time[order[i]];
        double d0 = 0.0, d1 = 0.0, d2 = 0.0, xsum = 0.0;
        std::size_t deaths = 0;
        // everyone with this time enters the risk set; its events form the death set
        for (; i < n && time[order[i]] == t; ++i) {
            const std::size_t k = order[i];
            const double w = std::exp(beta * x[k]);
            s0 += w;
            s1 += w * x[k];
            s2 += w * x[k] * x[k];
            if (event[k]) {
                d0 += w;
                d1 += w * x[k];
                d2 += w * x[k] * x[k];
                xsum += x[k];
                ++deaths;
            }
        }
        if (deaths == 0) continue;
        out.n_events += deaths;
        out.loglik += beta * xsum;
        out.score += xsum;
        for (std::size_t l = 0; l < deaths; ++l) {
            const double frac =
                ties == TieMethod::efron ? static_cast<double>(l) / static_cast<double>(deaths)
                                         : 0.0;
            const double e0 = s0 - frac * d0;
            const double e1 = s1 - frac * d1;
            const double e2 = s2 - frac * d2;
            out.loglik -= std::log(e0);
            out.score -= e1 / e0;
            out.info += e2 / e0 - (e1 / e0) * (e1 / e0);
        }
    }
    return out;
}

std::vector<std::size_t> descending_time_order(const std::vector<double>& time) {
    std::vector<std::size_t> order(time.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return time[a] > time[b]; });
    return order;
}

}  // namespace

double cox_partial_loglik(const std::vector<double>& time, const std::vector<int>& event,
                          const std::vector<double>& covariate, double beta, TieMethod ties) {
    return cox_pass(descending_time_order(time), time, event, covariate, beta, ties).loglik;
}

CoxFit fit_cox(const std::vector<double>& time, const std::vector<int>& event,
               const std::vector<double>& covariate, TieMethod ties) {
    const std::size_t n = time.size();
    if (event.size() != n || covariate.size() != n)
        throw DomainError("fit_cox: input vectors must have equal length");
    if (std::accumulate(event.begin(), event.end(), 0) < 1)
        throw EstimationError("fit_cox: at least one event is required");
    const double x0 = covariate.empty() ? 0.0 : covariate[0];
    if (std::all_of(covariate.begin(), covariate.end(), [&](double v) { return v == x0; }))
        throw EstimationError("fit_cox: covariate has no variation");

    const auto order = descending_time_order(time);
    constexpr double kBetaBound = 20.0;

    double beta = 0.0;
    CoxDerivs cur = cox_pass(order, time, event, covariate, beta, ties);
    CoxFit fit;
    for (int iter = 1; iter <= 50; ++iter) {
        fit.iterations = iter;
        if (std::abs(cur.score) < 1e-10) break;
        if (cur.info <= 0.0)
            throw EstimationError("fit_cox: non-positive information (monotone likelihood?)");
        double step = cur.score / cur.info;
        // step-halving until the partial likelihood does not decrease
        double candidate = beta + step;
        CoxDerivs next = cox_pass(order, time, event, covariate, candidate, ties);
        int halvings = 0;
        while (next.loglik < cur.loglik && halvings < 30) {
            step *= 0.5;
            candidate = beta + step;
            next = cox_pass(order, time, event, covariate, candidate, ties);
            ++halvings;
        }
        const double delta = candidate - beta;
        beta = candidate;
        cur = next;
        if (std::abs(beta) > kBetaBound)
            throw EstimationError(
                "fit_cox: estimate diverged past |beta| = 20 (monotone likelihood); "
                "last beta = " +
                std::to_string(beta));
        if (std::abs(delta) < 1e-12) break;
        if (iter == 50 && std::abs(cur.score) >= 1e-10)
            throw NumericError("fit_cox: Newton-Raphson did not converge in 50 iterations");
    }

    fit.beta_hat = beta;
    fit.n_events = cur.n_events;
    if (cur.info <= 0.0)
        throw EstimationError("fit_cox: non-positive information at the optimum");
    fit.se_beta = 1.0 / std::sqrt(cur.info);
    return fit;
}

CoxFit fit_cox_treatment(const TrialDataset& data, TieMethod ties) {
    if (!data.both_arms()) throw EstimationError("fit_cox_treatment: both arms are required");
    std::vector<double> time, x;
    std::vector<int> event;
    time.reserve(data.n());
    x.reserve(data.n());
    event.reserve(data.n());
    for (const auto& p : data.patients) {
        time.push_back(p.time);
        event.push_back(p.event ? 1 : 0);
        x.push_back(static_cast<double>(p.treatment));
    }
    return fit_cox(time, event, x, ties);
}

ExponentialFit fit_exponential_ph(const TrialDataset& data) {
    double events0 = 0, events1 = 0, exposure0 = 0, exposure1 = 0;
    for (const auto& p : data.patients) {
        if (p.treatment == 0) {
            events0 += p.event ? 1.0 : 0.0;
            exposure0 += p.time;
        } else {
            events1 += p.event ? 1.0 : 0.0;
            exposure1 += p.time;
        }
    }
    if (events0 < 1 || events1 < 1)
        throw EstimationError("fit_exponential_ph: each arm needs at least one event");
    ExponentialFit fit;
    fit.lambda0_hat = events0 / exposure0;
    fit.beta_hat = std::log((events1 / exposure1) / fit.lambda0_hat);
    return fit;
}

}  // namespace survalid
