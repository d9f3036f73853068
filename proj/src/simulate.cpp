#include "survalid/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

#include "survalid/errors.hpp"
#include "survalid/synthesize.hpp"

namespace survalid {

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string TrialSizeSpec::label() const {
    if (sizes.empty()) return "";
    if (!mixed()) return std::to_string(sizes[0]);
    std::string s = "mix(";
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(sizes[i]);
    }
    return s + ")";
}

std::vector<std::size_t> TrialSizeSpec::expand(std::size_t n_trials) const {
    if (sizes.empty()) throw DomainError("TrialSizeSpec: no sizes given");
    std::vector<std::size_t> out(n_trials);
    for (std::size_t i = 0; i < n_trials; ++i) out[i] = sizes[i % sizes.size()];
    return out;
}

std::uint64_t ScenarioSpec::scenario_id() const {
    std::string key = "r2=" + num(factors.r2_true) + ";theta=" + num(factors.theta_true) +
                      ";N=" + std::to_string(factors.n_trials) + ";sizes=" +
                      factors.sizes.label() + ";cens=" + num(factors.censor_rate) +
                      ";a=" + num(factors.alpha) + ";b=" + num(factors.beta);
    return fnv1a(key);
}

std::string ScenarioSpec::scenario_id_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(scenario_id()));
    return buf;
}

PopulationParams ScenarioSpec::population() const {
    PopulationParams pop;
    pop.gamma = gamma;
    pop.log_lambda0 = log_lambda0;
    pop.alpha = factors.alpha;
    pop.beta = factors.beta;
    pop.r2_true = factors.r2_true;
    pop.theta_true = factors.theta_true;
    pop.censor_rate = factors.censor_rate;
    pop.t_assess = t_assess;
    return pop;
}

std::vector<ScenarioSpec> expand_grid(const GridFactors& f, const ScenarioSpec& base) {
    if (f.r2_true.empty() || f.theta_true.empty() || f.n_trials.empty() ||
        f.trial_sizes.empty() || f.censor_rate.empty() || f.effects.empty())
        throw DomainError("expand_grid: every factor needs at least one level");
    std::vector<ScenarioSpec> grid;
    for (double r2 : f.r2_true)
        for (double th : f.theta_true)
            for (std::size_t N : f.n_trials)
                for (const auto& sz : f.trial_sizes)
                    for (double cr : f.censor_rate)
                        for (const auto& eff : f.effects) {
                            ScenarioSpec s = base;
                            s.factors.r2_true = r2;
                            s.factors.theta_true = th;
                            s.factors.n_trials = N;
                            s.factors.sizes = sz;
                            s.factors.censor_rate = cr;
                            s.factors.alpha = eff.first;
                            s.factors.beta = eff.second;
                            grid.push_back(std::move(s));
                        }
    return grid;
}

namespace {

ReplicateOutcome run_replicate(const ScenarioSpec& spec, std::size_t rep) {
    ReplicateOutcome out;
    out.replicate = rep;
    RngStream rep_stream =
        RngStream::keyed({spec.master_seed, spec.scenario_id(), static_cast<std::uint64_t>(rep)});
    try {
        const auto sizes = spec.factors.sizes.expand(spec.factors.n_trials);
        const auto trials = synthesize_study(spec.population(), sizes, rep_stream.child(1));
        std::size_t censored = 0, total = 0;
        for (const auto& t : trials)
            for (const auto& p : t.patients) {
                ++total;
                censored += p.event ? 0 : 1;
            }
        out.realized_censoring =
            total ? static_cast<double>(censored) / static_cast<double>(total) : 0.0;
        StudyFit fit =
            estimate_study(trials, spec.estimators, rep_stream.child(stream_tag::bootstrap));
        out.estimates = fit.estimates;
        out.verdict = fit.verdict.cls;
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec, int workers) {
    if (spec.replications < 1) throw DomainError("run_scenario: replications must be >= 1");
    ScenarioResult result;
    result.spec = spec;
    result.replicates.resize(spec.replications);

    const int w = std::max(1, std::min<int>(workers, static_cast<int>(spec.replications)));
    if (w == 1) {
        for (std::size_t r = 0; r < spec.replications; ++r)
            result.replicates[r] = run_replicate(spec, r);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t r = next.fetch_add(1);
                if (r >= spec.replications) return;
                result.replicates[r] = run_replicate(spec, r);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(w));
        for (int i = 0; i < w; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return result;
}

Metrics metrics(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) throw DomainError("metrics: no estimates");
    if (!std::isfinite(truth)) throw DomainError("metrics: truth must be finite");
    const double n = static_cast<double>(estimates.size());
    double mean = 0, pc = 0, mse = 0;
    for (double e : estimates) {
        mean += e;
        mse += (e - truth) * (e - truth);
    }
    mean /= n;
    mse /= n;
    Metrics m;
    m.bias = mean - truth;
    if (truth == 0.0) throw DomainError("metrics: percent change undefined for truth = 0");
    for (double e : estimates) pc += (e - truth) / truth * 100.0;
    m.percent_change = pc / n;
    if (mean == 0.0) throw DomainError("metrics: NRMSE undefined for zero mean estimate");
    m.nrmse = std::sqrt(mse) / mean;
    return m;
}

namespace {

EstimandSummary summarize_estimand(const std::vector<double>& est, double truth) {
    EstimandSummary s;
    s.truth = truth;
    if (est.empty()) return s;
    double mean = 0, mse = 0;
    for (double e : est) {
        mean += e;
        mse += (e - truth) * (e - truth);
    }
    mean /= static_cast<double>(est.size());
    mse /= static_cast<double>(est.size());
    s.mean_est = mean;
    if (truth != 0.0 && mean != 0.0) {
        s.m = metrics(est, truth);
    } else {
        // percent change (and NRMSE at zero mean) are undefined; keep what is
        s.m.bias = mean - truth;
        s.m.percent_change = std::numeric_limits<double>::quiet_NaN();
        s.m.nrmse = mean != 0.0 ? std::sqrt(mse) / mean
                                : std::numeric_limits<double>::quiet_NaN();
    }
    s.defined = true;
    return s;
}

}  // namespace

MetricsSummary summarize(const ScenarioResult& result) {
    MetricsSummary s;
    s.n_requested = result.spec.replications;
    std::vector<double> r2c, r2w, r2a, gor;
    std::vector<Verdict> verdicts;
    double cens = 0;
    for (const auto& rep : result.replicates) {
        if (!rep.ok) {
            ++s.n_failed;
            continue;
        }
        ++s.n_ok;
        r2c.push_back(rep.estimates.r2_copula.est);
        r2w.push_back(rep.estimates.r2_wls.est);
        r2a.push_back(rep.estimates.r2_adj.est);
        gor.push_back(rep.estimates.global_or.est);
        cens += rep.realized_censoring;
        s.zero_cell_trials += rep.estimates.flags.zero_cell_trials;
        s.underflow_clamps += rep.estimates.flags.underflow_clamps;
        s.r2_clip_count += rep.estimates.flags.r2_clipped ? 1 : 0;
        Verdict v;
        v.cls = rep.verdict;
        verdicts.push_back(v);
    }
    if (s.n_ok > 0) {
        s.r2_copula = summarize_estimand(r2c, result.spec.factors.r2_true);
        s.r2_wls = summarize_estimand(r2w, result.spec.factors.r2_true);
        s.r2_adj = summarize_estimand(r2a, result.spec.factors.r2_true);
        s.global_or = summarize_estimand(gor, result.spec.factors.theta_true);
        s.mean_realized_censoring = cens / static_cast<double>(s.n_ok);
        const auto rates = acceptance_rates(verdicts);
        s.fvs_rate = rates.first;
        s.rls_rate = rates.second;
    }
    return s;
}

AggregateReport aggregate(const std::vector<ScenarioResult>& results) {
    if (results.empty()) throw DomainError("aggregate: no scenarios");

    std::vector<const ScenarioResult*> sorted;
    sorted.reserve(results.size());
    for (const auto& r : results) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const ScenarioResult* a, const ScenarioResult* b) {
        return a->spec.scenario_id() < b->spec.scenario_id();
    });

    AggregateReport report;
    for (const auto* r : sorted) report.scenarios.emplace_back(r->spec, summarize(*r));

    // factor-marginal blocks, averaging per-scenario metric values
    struct Acc {
        Metrics sum;
        std::size_t n = 0;
    };
    std::map<std::tuple<std::string, std::string, std::string>, Acc> acc;
    const auto add = [&](const std::string& factor, const std::string& level,
                         const std::string& estimand, const EstimandSummary& es) {
        if (!es.defined) return;
        Acc& a = acc[{factor, level, estimand}];
        a.sum.bias += es.m.bias;
        a.sum.percent_change += es.m.percent_change;
        a.sum.nrmse += es.m.nrmse;
        ++a.n;
    };
    for (const auto& [spec, ms] : report.scenarios) {
        const auto each_estimand = [&](const std::string& factor, const std::string& level) {
            add(factor, level, "r2_copula", ms.r2_copula);
            add(factor, level, "r2_wls", ms.r2_wls);
            add(factor, level, "r2_adj", ms.r2_adj);
            add(factor, level, "global_or", ms.global_or);
        };
        if (spec.factors.sizes.mixed()) {
            // mixed sizes form their own stratum, reported by trial count
            each_estimand("mixed_trial_sizes", std::to_string(spec.factors.n_trials));
            continue;
        }
        each_estimand("true_r2", num(spec.factors.r2_true));
        each_estimand("true_global_or", num(spec.factors.theta_true));
        each_estimand("trial_count", std::to_string(spec.factors.n_trials));
        each_estimand("sample_size", spec.factors.sizes.label());
        each_estimand("censoring_rate", num(spec.factors.censor_rate));
        each_estimand("effect_size", "(" + num(spec.factors.alpha) + "," +
                                         num(spec.factors.beta) + ")");
    }
    for (const auto& [key, a] : acc) {
        FactorMarginalRow row;
        row.factor = std::get<0>(key);
        row.level = std::get<1>(key);
        row.estimand = std::get<2>(key);
        row.m.bias = a.sum.bias / static_cast<double>(a.n);
        row.m.percent_change = a.sum.percent_change / static_cast<double>(a.n);
        row.m.nrmse = a.sum.nrmse / static_cast<double>(a.n);
        row.n_scenarios = a.n;
        report.marginals.push_back(std::move(row));
    }

    // acceptance rates pooled over replicates within (r2_true, theta_true)
    std::map<std::pair<double, double>, std::vector<Verdict>> pools;
    for (const auto* r : sorted) {
        auto& pool = pools[{r->spec.factors.r2_true, r->spec.factors.theta_true}];
        for (const auto& rep : r->replicates) {
            if (!rep.ok) continue;
            Verdict v;
            v.cls = rep.verdict;
            pool.push_back(v);
        }
    }
    for (const auto& [key, verdicts] : pools) {
        AcceptanceRow row;
        row.r2_true = key.first;
        row.theta_true = key.second;
        row.n_replicates = verdicts.size();
        if (!verdicts.empty()) {
            const auto rates = acceptance_rates(verdicts);
            row.fvs_rate = rates.first;
            row.rls_rate = rates.second;
        }
        report.acceptance.push_back(std::move(row));
    }
    return report;
}

}  // namespace survalid
