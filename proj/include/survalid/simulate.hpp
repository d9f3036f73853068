#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "survalid/estimate.hpp"
#include "survalid/types.hpp"

namespace survalid {

// Per-trial sample sizes of one factor level: a single entry means equal
// sizes; several entries are cycled across trials in index order.
struct TrialSizeSpec {
    std::vector<std::size_t> sizes;

    bool mixed() const { return sizes.size() > 1; }
    std::string label() const;
    std::vector<std::size_t> expand(std::size_t n_trials) const;
};

struct ScenarioFactors {
    double r2_true = 0.65;
    double theta_true = 3.0;
    std::size_t n_trials = 10;
    TrialSizeSpec sizes{{300}};
    double censor_rate = 0.05;
    double alpha = 0.8;
    double beta = -0.74;
};

// One cell of the factor grid plus everything needed to run it.
struct ScenarioSpec {
    ScenarioFactors factors;
    double gamma = std::log(0.40 / 0.60);
    double log_lambda0 = std::log(0.15);
    double t_assess = 0.5;
    std::size_t replications = 100;
    std::uint64_t master_seed = 0;
    EstimatorConfig estimators;

    // stable id: hash of the canonical factor tuple, independent of factor
    // list ordering; used in seeding and in per-scenario result files
    std::uint64_t scenario_id() const;
    std::string scenario_id_hex() const;
    PopulationParams population() const;
};

struct GridFactors {
    std::vector<double> r2_true{0.3, 0.65, 0.95};
    std::vector<double> theta_true{1.0, 3.0, 7.0};
    std::vector<std::size_t> n_trials{10, 20, 30};
    std::vector<TrialSizeSpec> trial_sizes{{{300}}, {{1000}}, {{300, 500, 1000}}};
    std::vector<double> censor_rate{0.05, 0.10, 0.15};
    std::vector<std::pair<double, double>> effects{{0.8, -0.74}, {0.3, -0.25}, {1.2, -1.05}};
};

// Full Cartesian product of the factor lists over the base configuration.
std::vector<ScenarioSpec> expand_grid(const GridFactors& factors, const ScenarioSpec& base);

struct ReplicateOutcome {
    std::size_t replicate = 0;
    bool ok = false;
    std::string error;
    SurrogacyEstimates estimates;
    SurrogacyClass verdict = SurrogacyClass::not_established;
    double realized_censoring = 0.0;
};

struct ScenarioResult {
    ScenarioSpec spec;
    std::vector<ReplicateOutcome> replicates;
};

// Replicated synthesize -> fit -> classify pipelines. Replicates are the unit
// of parallelism; results are identical for any worker count because every
// replicate draws from the sub-stream (master_seed, scenario_id, replicate).
// Failed fits are recorded, never dropped silently.
ScenarioResult run_scenario(const ScenarioSpec& spec, int workers = 1);

struct Metrics {
    double bias = 0.0;
    double percent_change = 0.0;
    double nrmse = 0.0;
};

// bias = mean(est) - truth; percent change averaged per replicate;
// NRMSE = sqrt(mean squared error) / mean(est).
Metrics metrics(const std::vector<double>& estimates, double truth);

struct EstimandSummary {
    double truth = 0.0;
    double mean_est = 0.0;
    Metrics m;
    bool defined = false;  // false when every replicate failed
};

struct MetricsSummary {
    std::size_t n_requested = 0;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    EstimandSummary r2_copula, r2_wls, r2_adj, global_or;
    double fvs_rate = 0.0;
    double rls_rate = 0.0;  // RLS or better
    double mean_realized_censoring = 0.0;
    int zero_cell_trials = 0;
    int underflow_clamps = 0;
    int r2_clip_count = 0;
};

MetricsSummary summarize(const ScenarioResult& result);

struct FactorMarginalRow {
    std::string factor;
    std::string level;
    std::string estimand;
    Metrics m;
    std::size_t n_scenarios = 0;
};

struct AcceptanceRow {
    double r2_true = 0.0;
    double theta_true = 0.0;
    double fvs_rate = 0.0;
    double rls_rate = 0.0;
    std::size_t n_replicates = 0;
};

struct AggregateReport {
    std::vector<std::pair<ScenarioSpec, MetricsSummary>> scenarios;  // sorted by id
    std::vector<FactorMarginalRow> marginals;
    std::vector<AcceptanceRow> acceptance;
};

// Per-scenario summaries, factor-marginal tables (equal-size scenarios feed
// the main factor blocks, mixed sizes form their own stratum by trial count)
// and acceptance rates stratified by the true association pair.
AggregateReport aggregate(const std::vector<ScenarioResult>& results);

}  // namespace survalid
