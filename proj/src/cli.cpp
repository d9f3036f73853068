#include "survalid/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "survalid/errors.hpp"
#include "survalid/io.hpp"
#include "survalid/synthesize.hpp"
#include "survalid/version.hpp"

namespace survalid::cli {

using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- config ---

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& path) {
    if (!obj.is_object()) throw ConfigError("config: " + path + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ConfigError("config: unknown key '" + path + key + "'");
    }
}

double as_double(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError("config: " + path + " must be a number");
    return v.get<double>();
}

std::size_t as_count(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw ConfigError("config: " + path + " must be a non-negative integer");
    return v.get<std::size_t>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError("config: " + path + " must be a string");
    return v.get<std::string>();
}

TieMethod parse_ties(const std::string& s, const std::string& path) {
    if (s == "efron") return TieMethod::efron;
    if (s == "breslow") return TieMethod::breslow;
    throw ConfigError("config: " + path + " must be 'efron' or 'breslow'");
}

WeightScheme parse_weights(const std::string& s, const std::string& path) {
    if (s == "sample_size") return WeightScheme::sample_size;
    if (s == "inverse_sample_size") return WeightScheme::inverse_sample_size;
    if (s == "inverse_var_log_or") return WeightScheme::inverse_var_log_or;
    throw ConfigError("config: " + path +
                      " must be 'sample_size', 'inverse_sample_size' or 'inverse_var_log_or'");
}

CiMethod parse_ci(const std::string& s, const std::string& path) {
    if (s == "fisher_z") return CiMethod::fisher_z;
    if (s == "trial_bootstrap") return CiMethod::trial_bootstrap;
    throw ConfigError("config: " + path + " must be 'fisher_z' or 'trial_bootstrap'");
}

EffectSource parse_effects_source(const std::string& s, const std::string& path) {
    if (s == "marginal") return EffectSource::marginal;
    if (s == "joint") return EffectSource::joint;
    throw ConfigError("config: " + path + " must be 'marginal' or 'joint'");
}

ClAppliesTo parse_cl(const std::string& s, const std::string& path) {
    if (s == "max") return ClAppliesTo::max_estimate;
    if (s == "both") return ClAppliesTo::both;
    if (s == "either") return ClAppliesTo::either;
    throw ConfigError("config: " + path + " must be 'max', 'both' or 'either'");
}

DispersionMode parse_dispersion(const std::string& s, const std::string& path) {
    if (s == "raw") return DispersionMode::raw;
    if (s == "adjusted") return DispersionMode::adjusted;
    throw ConfigError("config: " + path + " must be 'raw' or 'adjusted'");
}

void parse_estimators(const json& o, EstimatorConfig& est, bool& ci_set) {
    check_keys(o,
               {"ties", "wls_weights", "ci_method", "bootstrap_samples",
                "second_stage_effects", "cl_applies_to", "dispersion"},
               "estimators.");
    if (o.contains("ties")) est.ties = parse_ties(as_string(o["ties"], "estimators.ties"), "estimators.ties");
    if (o.contains("wls_weights"))
        est.wls_weights =
            parse_weights(as_string(o["wls_weights"], "estimators.wls_weights"), "estimators.wls_weights");
    if (o.contains("ci_method")) {
        est.ci_method = parse_ci(as_string(o["ci_method"], "estimators.ci_method"), "estimators.ci_method");
        ci_set = true;
    }
    if (o.contains("bootstrap_samples")) {
        est.bootstrap_samples =
            static_cast<int>(as_count(o["bootstrap_samples"], "estimators.bootstrap_samples"));
        if (est.bootstrap_samples < 100)
            throw ConfigError("config: estimators.bootstrap_samples must be >= 100");
    }
    if (o.contains("second_stage_effects"))
        est.second_stage_effects = parse_effects_source(
            as_string(o["second_stage_effects"], "estimators.second_stage_effects"),
            "estimators.second_stage_effects");
    if (o.contains("cl_applies_to"))
        est.verdict.cl_applies_to =
            parse_cl(as_string(o["cl_applies_to"], "estimators.cl_applies_to"), "estimators.cl_applies_to");
    if (o.contains("dispersion"))
        est.dispersion =
            parse_dispersion(as_string(o["dispersion"], "estimators.dispersion"), "estimators.dispersion");
}

TrialSizeSpec parse_size_spec(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty())
        throw ConfigError("config: " + path + " must be a non-empty array of sizes");
    TrialSizeSpec spec;
    for (const auto& e : v) {
        const std::size_t n = as_count(e, path);
        if (n < 2) throw ConfigError("config: " + path + " sizes must be >= 2");
        spec.sizes.push_back(n);
    }
    return spec;
}

void parse_generate(const json& o, RunConfig& cfg) {
    check_keys(o,
               {"r2_true", "theta_true", "n_trials", "trial_sizes", "censor_rate", "alpha",
                "beta", "gamma", "log_lambda0", "t_assess"},
               "generate.");
    auto& f = cfg.gen_factors;
    if (o.contains("r2_true")) f.r2_true = as_double(o["r2_true"], "generate.r2_true");
    if (o.contains("theta_true")) f.theta_true = as_double(o["theta_true"], "generate.theta_true");
    if (o.contains("n_trials")) f.n_trials = as_count(o["n_trials"], "generate.n_trials");
    if (o.contains("trial_sizes")) f.sizes = parse_size_spec(o["trial_sizes"], "generate.trial_sizes");
    if (o.contains("censor_rate")) f.censor_rate = as_double(o["censor_rate"], "generate.censor_rate");
    if (o.contains("alpha")) f.alpha = as_double(o["alpha"], "generate.alpha");
    if (o.contains("beta")) f.beta = as_double(o["beta"], "generate.beta");
    if (o.contains("gamma")) cfg.gen_gamma = as_double(o["gamma"], "generate.gamma");
    if (o.contains("log_lambda0"))
        cfg.gen_log_lambda0 = as_double(o["log_lambda0"], "generate.log_lambda0");
    if (o.contains("t_assess")) cfg.gen_t_assess = as_double(o["t_assess"], "generate.t_assess");
}

void parse_simulate(const json& o, RunConfig& cfg) {
    check_keys(o, {"replications", "factors", "gamma", "log_lambda0", "t_assess"}, "simulate.");
    if (o.contains("replications")) {
        cfg.replications = as_count(o["replications"], "simulate.replications");
        if (cfg.replications < 1) throw ConfigError("config: simulate.replications must be >= 1");
    }
    if (o.contains("gamma")) cfg.sim_gamma = as_double(o["gamma"], "simulate.gamma");
    if (o.contains("log_lambda0"))
        cfg.sim_log_lambda0 = as_double(o["log_lambda0"], "simulate.log_lambda0");
    if (o.contains("t_assess")) cfg.sim_t_assess = as_double(o["t_assess"], "simulate.t_assess");
    if (o.contains("factors")) {
        const json& f = o["factors"];
        check_keys(f, {"r2_true", "theta_true", "n_trials", "trial_sizes", "censor_rate", "effects"},
                   "simulate.factors.");
        const auto doubles = [&](const char* key) {
            std::vector<double> out;
            for (const auto& e : f[key]) out.push_back(as_double(e, std::string("simulate.factors.") + key));
            if (out.empty()) throw ConfigError(std::string("config: simulate.factors.") + key + " is empty");
            return out;
        };
        if (f.contains("r2_true")) cfg.grid.r2_true = doubles("r2_true");
        if (f.contains("theta_true")) cfg.grid.theta_true = doubles("theta_true");
        if (f.contains("n_trials")) {
            cfg.grid.n_trials.clear();
            for (const auto& e : f["n_trials"])
                cfg.grid.n_trials.push_back(as_count(e, "simulate.factors.n_trials"));
            if (cfg.grid.n_trials.empty())
                throw ConfigError("config: simulate.factors.n_trials is empty");
        }
        if (f.contains("trial_sizes")) {
            cfg.grid.trial_sizes.clear();
            for (const auto& e : f["trial_sizes"])
                cfg.grid.trial_sizes.push_back(parse_size_spec(e, "simulate.factors.trial_sizes"));
            if (cfg.grid.trial_sizes.empty())
                throw ConfigError("config: simulate.factors.trial_sizes is empty");
        }
        if (f.contains("censor_rate")) cfg.grid.censor_rate = doubles("censor_rate");
        if (f.contains("effects")) {
            cfg.grid.effects.clear();
            for (const auto& e : f["effects"]) {
                if (!e.is_array() || e.size() != 2)
                    throw ConfigError("config: simulate.factors.effects entries must be [alpha, beta]");
                cfg.grid.effects.emplace_back(as_double(e[0], "simulate.factors.effects"),
                                              as_double(e[1], "simulate.factors.effects"));
            }
            if (cfg.grid.effects.empty())
                throw ConfigError("config: simulate.factors.effects is empty");
        }
    }
}

json parse_override_value(const std::string& raw) {
    try {
        return json::parse(raw);
    } catch (const json::exception&) {
        return json(raw);  // bare strings need no quotes on the command line
    }
}

void apply_override(json& tree, const std::string& entry) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like dotted.key=value: '" + entry + "'");
    const std::string path = entry.substr(0, eq);
    json* node = &tree;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("override has an empty key segment: '" + entry + "'");
        if (dot == std::string::npos) {
            (*node)[key] = parse_override_value(entry.substr(eq + 1));
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

}  // namespace

RunConfig load_config(const std::string& mode, const std::filesystem::path& config_file,
                      const std::vector<std::string>& overrides) {
    json tree = json::object();
    if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) throw ConfigError("cannot open config file " + config_file.string());
        try {
            in >> tree;
        } catch (const json::exception& e) {
            throw ConfigError("config parse error in " + config_file.string() + ": " + e.what());
        }
    }
    for (const auto& entry : overrides) apply_override(tree, entry);

    check_keys(tree,
               {"mode", "seed", "threads", "output_dir", "run_dir", "estimators", "generate",
                "fit", "simulate"},
               "");

    RunConfig cfg;
    cfg.mode = mode;
    if (tree.contains("mode") && as_string(tree["mode"], "mode") != mode)
        throw ConfigError("config: mode '" + as_string(tree["mode"], "mode") +
                          "' does not match the subcommand '" + mode + "'");
    if (tree.contains("seed")) {
        if (!tree["seed"].is_number_integer() && !tree["seed"].is_number_unsigned())
            throw ConfigError("config: seed must be an integer");
        cfg.seed = tree["seed"].get<std::uint64_t>();
        cfg.seed_set = true;
    }
    if (tree.contains("threads")) {
        cfg.threads = static_cast<int>(as_count(tree["threads"], "threads"));
        if (cfg.threads < 1) throw ConfigError("config: threads must be >= 1");
    }
    if (tree.contains("output_dir")) cfg.output_dir = as_string(tree["output_dir"], "output_dir");
    if (tree.contains("run_dir")) cfg.run_dir = as_string(tree["run_dir"], "run_dir");
    if (tree.contains("estimators")) parse_estimators(tree["estimators"], cfg.estimators, cfg.estimators_ci_set);
    if (tree.contains("generate")) parse_generate(tree["generate"], cfg);
    if (tree.contains("fit")) {
        check_keys(tree["fit"], {"ipd"}, "fit.");
        if (tree["fit"].contains("ipd")) cfg.ipd_path = as_string(tree["fit"]["ipd"], "fit.ipd");
    }
    if (tree.contains("simulate")) parse_simulate(tree["simulate"], cfg);

    if ((mode == "simulate" || mode == "generate") && !cfg.seed_set)
        throw ConfigError("config: '" + mode + "' requires an explicit seed");
    if (mode == "fit" && !cfg.estimators_ci_set)
        cfg.estimators.ci_method = CiMethod::trial_bootstrap;
    if (mode == "fit" && cfg.ipd_path.empty())
        throw ConfigError("config: fit requires fit.ipd (or --ipd)");
    if (mode == "report" && cfg.run_dir.empty())
        throw ConfigError("config: report requires run_dir (or --run-dir)");
    return cfg;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SURVALID_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

// ------------------------------------------------------------- reporting ---

std::string csv_num(double x) {
    return std::isfinite(x) ? format_g17(x) : std::string();
}

json interval_json(const IntervalEstimate& iv) {
    return json{{"est", iv.est}, {"lo", iv.lo}, {"hi", iv.hi}};
}

IntervalEstimate interval_from_json(const json& o) {
    IntervalEstimate iv;
    iv.est = o.at("est").get<double>();
    iv.lo = o.at("lo").get<double>();
    iv.hi = o.at("hi").get<double>();
    return iv;
}

json verdict_json(const Verdict& v) {
    json rationale = json::array();
    for (const auto& r : v.rationale) {
        json operands = json::object();
        for (const auto& [name, value] : r.operands) operands[name] = value;
        rationale.push_back(json{{"rule", r.rule}, {"operands", operands}, {"pass", r.pass}});
    }
    return json{{"class", to_string(v.cls)}, {"rationale", rationale}};
}

SurrogacyClass class_from_string(const std::string& s) {
    if (s == "FVS") return SurrogacyClass::fvs;
    if (s == "RLS") return SurrogacyClass::rls;
    if (s == "NotEstablished") return SurrogacyClass::not_established;
    throw ValidationError("unknown verdict class '" + s + "'");
}

json estimator_echo(const EstimatorConfig& e) {
    return json{
        {"ties", e.ties == TieMethod::efron ? "efron" : "breslow"},
        {"wls_weights", e.wls_weights == WeightScheme::sample_size          ? "sample_size"
                        : e.wls_weights == WeightScheme::inverse_sample_size ? "inverse_sample_size"
                                                                             : "inverse_var_log_or"},
        {"ci_method", e.ci_method == CiMethod::fisher_z ? "fisher_z" : "trial_bootstrap"},
        {"bootstrap_samples", e.bootstrap_samples},
        {"second_stage_effects",
         e.second_stage_effects == EffectSource::marginal ? "marginal" : "joint"},
        {"cl_applies_to", e.verdict.cl_applies_to == ClAppliesTo::max_estimate ? "max"
                          : e.verdict.cl_applies_to == ClAppliesTo::both       ? "both"
                                                                               : "either"},
        {"dispersion", e.dispersion == DispersionMode::raw ? "raw" : "adjusted"},
    };
}

json size_spec_json(const TrialSizeSpec& s) {
    json arr = json::array();
    for (std::size_t n : s.sizes) arr.push_back(n);
    return arr;
}

json config_echo(const RunConfig& cfg) {
    json echo{{"mode", cfg.mode}, {"output_dir", cfg.output_dir.string()},
              {"estimators", estimator_echo(cfg.estimators)}};
    if (cfg.seed_set) echo["seed"] = cfg.seed;
    if (cfg.mode == "generate") {
        echo["generate"] = json{{"r2_true", cfg.gen_factors.r2_true},
                                {"theta_true", cfg.gen_factors.theta_true},
                                {"n_trials", cfg.gen_factors.n_trials},
                                {"trial_sizes", size_spec_json(cfg.gen_factors.sizes)},
                                {"censor_rate", cfg.gen_factors.censor_rate},
                                {"alpha", cfg.gen_factors.alpha},
                                {"beta", cfg.gen_factors.beta},
                                {"gamma", cfg.gen_gamma},
                                {"log_lambda0", cfg.gen_log_lambda0},
                                {"t_assess", cfg.gen_t_assess}};
    } else if (cfg.mode == "fit") {
        echo["fit"] = json{{"ipd", cfg.ipd_path.string()}};
    } else if (cfg.mode == "simulate") {
        json sizes = json::array();
        for (const auto& s : cfg.grid.trial_sizes) sizes.push_back(size_spec_json(s));
        json effects = json::array();
        for (const auto& e : cfg.grid.effects) effects.push_back(json::array({e.first, e.second}));
        echo["simulate"] = json{{"replications", cfg.replications},
                                {"factors", json{{"r2_true", cfg.grid.r2_true},
                                                 {"theta_true", cfg.grid.theta_true},
                                                 {"n_trials", cfg.grid.n_trials},
                                                 {"trial_sizes", sizes},
                                                 {"censor_rate", cfg.grid.censor_rate},
                                                 {"effects", effects}}},
                                {"gamma", cfg.sim_gamma},
                                {"log_lambda0", cfg.sim_log_lambda0},
                                {"t_assess", cfg.sim_t_assess}};
    } else if (cfg.mode == "report") {
        echo["run_dir"] = cfg.run_dir.string();
    }
    return echo;
}

void write_manifest(const std::filesystem::path& dir, const RunConfig& cfg, double wall_seconds,
                    int threads, const json& extra) {
    json manifest{{"config", config_echo(cfg)},
                  {"execution", json{{"version", kVersion},
                                     {"threads", threads},
                                     {"wall_time_seconds", wall_seconds}}}};
    for (const auto& [k, v] : extra.items()) manifest[k] = v;
    atomic_write(dir / "run_manifest.json", manifest.dump(2) + "\n");
}

// ------------------------------------------------------ scenario archive ---

json scenario_to_json(const ScenarioResult& res) {
    const ScenarioSpec& s = res.spec;
    json reps = json::array();
    for (const auto& r : res.replicates) {
        json rec{{"replicate", r.replicate}, {"ok", r.ok}};
        if (r.ok) {
            rec["realized_censoring"] = r.realized_censoring;
            rec["estimates"] = json{{"r2_copula", interval_json(r.estimates.r2_copula)},
                                    {"r2_wls", interval_json(r.estimates.r2_wls)},
                                    {"r2_adj", interval_json(r.estimates.r2_adj)},
                                    {"global_or", interval_json(r.estimates.global_or)}};
            rec["flags"] = json{{"zero_cell_trials", r.estimates.flags.zero_cell_trials},
                                {"underflow_clamps", r.estimates.flags.underflow_clamps},
                                {"inner_nonconverged", r.estimates.flags.inner_nonconverged},
                                {"profile_multimodal", r.estimates.flags.profile_multimodal},
                                {"r2_clipped", r.estimates.flags.r2_clipped},
                                {"fisherz_degenerate", r.estimates.flags.fisherz_degenerate}};
            rec["verdict"] = to_string(r.verdict);
        } else {
            rec["error"] = r.error;
        }
        reps.push_back(std::move(rec));
    }
    return json{{"scenario_id", s.scenario_id_hex()},
                {"factors", json{{"r2_true", s.factors.r2_true},
                                 {"theta_true", s.factors.theta_true},
                                 {"n_trials", s.factors.n_trials},
                                 {"trial_sizes", size_spec_json(s.factors.sizes)},
                                 {"censor_rate", s.factors.censor_rate},
                                 {"alpha", s.factors.alpha},
                                 {"beta", s.factors.beta}}},
                {"constants", json{{"gamma", s.gamma},
                                   {"log_lambda0", s.log_lambda0},
                                   {"t_assess", s.t_assess}}},
                {"replications", s.replications},
                {"master_seed", s.master_seed},
                {"replicates", std::move(reps)}};
}

ScenarioResult scenario_from_json(const json& o) {
    ScenarioResult res;
    ScenarioSpec& s = res.spec;
    const json& f = o.at("factors");
    s.factors.r2_true = f.at("r2_true").get<double>();
    s.factors.theta_true = f.at("theta_true").get<double>();
    s.factors.n_trials = f.at("n_trials").get<std::size_t>();
    s.factors.sizes.sizes = f.at("trial_sizes").get<std::vector<std::size_t>>();
    s.factors.censor_rate = f.at("censor_rate").get<double>();
    s.factors.alpha = f.at("alpha").get<double>();
    s.factors.beta = f.at("beta").get<double>();
    const json& c = o.at("constants");
    s.gamma = c.at("gamma").get<double>();
    s.log_lambda0 = c.at("log_lambda0").get<double>();
    s.t_assess = c.at("t_assess").get<double>();
    s.replications = o.at("replications").get<std::size_t>();
    s.master_seed = o.at("master_seed").get<std::uint64_t>();
    for (const json& rec : o.at("replicates")) {
        ReplicateOutcome r;
        r.replicate = rec.at("replicate").get<std::size_t>();
        r.ok = rec.at("ok").get<bool>();
        if (r.ok) {
            r.realized_censoring = rec.at("realized_censoring").get<double>();
            const json& est = rec.at("estimates");
            r.estimates.r2_copula = interval_from_json(est.at("r2_copula"));
            r.estimates.r2_wls = interval_from_json(est.at("r2_wls"));
            r.estimates.r2_adj = interval_from_json(est.at("r2_adj"));
            r.estimates.global_or = interval_from_json(est.at("global_or"));
            const json& flags = rec.at("flags");
            r.estimates.flags.zero_cell_trials = flags.at("zero_cell_trials").get<int>();
            r.estimates.flags.underflow_clamps = flags.at("underflow_clamps").get<int>();
            r.estimates.flags.inner_nonconverged = flags.at("inner_nonconverged").get<int>();
            r.estimates.flags.profile_multimodal = flags.at("profile_multimodal").get<bool>();
            r.estimates.flags.r2_clipped = flags.at("r2_clipped").get<bool>();
            r.estimates.flags.fisherz_degenerate = flags.at("fisherz_degenerate").get<bool>();
            r.verdict = class_from_string(rec.at("verdict").get<std::string>());
        } else {
            r.error = rec.at("error").get<std::string>();
        }
        res.replicates.push_back(std::move(r));
    }
    return res;
}

// --------------------------------------------------------- report tables ---

void write_report_tables(const std::filesystem::path& dir,
                         const std::vector<ScenarioResult>& results) {
    const AggregateReport report = aggregate(results);

    {
        std::ostringstream out;
        out << "scenario_id,r2_true,theta_true,n_trials,trial_sizes,censor_rate,alpha,beta,"
               "replications,n_ok,n_failed,"
               "r2_copula_mean,r2_copula_bias,r2_copula_percent_change,r2_copula_nrmse,"
               "r2_wls_mean,r2_wls_bias,r2_wls_percent_change,r2_wls_nrmse,"
               "r2_adj_mean,r2_adj_bias,r2_adj_percent_change,r2_adj_nrmse,"
               "global_or_mean,global_or_bias,global_or_percent_change,global_or_nrmse,"
               "fvs_rate,rls_or_better_rate,mean_realized_censoring,"
               "zero_cell_trials,underflow_clamps,r2_clip_count\n";
        for (const auto& [spec, ms] : report.scenarios) {
            out << spec.scenario_id_hex() << ',' << csv_num(spec.factors.r2_true) << ','
                << csv_num(spec.factors.theta_true) << ',' << spec.factors.n_trials << ','
                << spec.factors.sizes.label() << ',' << csv_num(spec.factors.censor_rate) << ','
                << csv_num(spec.factors.alpha) << ',' << csv_num(spec.factors.beta) << ','
                << ms.n_requested << ',' << ms.n_ok << ',' << ms.n_failed;
            const auto est = [&](const EstimandSummary& e) {
                if (e.defined)
                    out << ',' << csv_num(e.mean_est) << ',' << csv_num(e.m.bias) << ','
                        << csv_num(e.m.percent_change) << ',' << csv_num(e.m.nrmse);
                else
                    out << ",,,,";
            };
            est(ms.r2_copula);
            est(ms.r2_wls);
            est(ms.r2_adj);
            est(ms.global_or);
            out << ',' << csv_num(ms.fvs_rate) << ',' << csv_num(ms.rls_rate) << ','
                << csv_num(ms.mean_realized_censoring) << ',' << ms.zero_cell_trials << ','
                << ms.underflow_clamps << ',' << ms.r2_clip_count << '\n';
        }
        atomic_write(dir / "scenario_metrics.csv", out.str());
    }

    {
        std::ostringstream out;
        out << "factor,level,estimand,bias,percent_change,nrmse,n_scenarios\n";
        for (const auto& row : report.marginals)
            out << row.factor << ',' << row.level << ',' << row.estimand << ','
                << csv_num(row.m.bias) << ',' << csv_num(row.m.percent_change) << ','
                << csv_num(row.m.nrmse) << ',' << row.n_scenarios << '\n';
        atomic_write(dir / "factor_marginals.csv", out.str());
    }

    {
        std::ostringstream out;
        out << "r2_true,theta_true,n_replicates,fvs_rate,rls_or_better_rate\n";
        for (const auto& row : report.acceptance)
            out << csv_num(row.r2_true) << ',' << csv_num(row.theta_true) << ','
                << row.n_replicates << ',' << csv_num(row.fvs_rate) << ','
                << csv_num(row.rls_rate) << '\n';
        atomic_write(dir / "acceptance_rates.csv", out.str());
    }

    {
        std::ostringstream out;
        out << "scenario_id,replicate,r2_true,theta_true,r2_copula,r2_wls,r2_adj,global_or,"
               "verdict\n";
        std::vector<const ScenarioResult*> sorted;
        for (const auto& r : results) sorted.push_back(&r);
        std::sort(sorted.begin(), sorted.end(),
                  [](const ScenarioResult* a, const ScenarioResult* b) {
                      return a->spec.scenario_id() < b->spec.scenario_id();
                  });
        for (const auto* res : sorted)
            for (const auto& r : res->replicates) {
                if (!r.ok) continue;
                out << res->spec.scenario_id_hex() << ',' << r.replicate << ','
                    << csv_num(res->spec.factors.r2_true) << ','
                    << csv_num(res->spec.factors.theta_true) << ','
                    << csv_num(r.estimates.r2_copula.est) << ','
                    << csv_num(r.estimates.r2_wls.est) << ',' << csv_num(r.estimates.r2_adj.est)
                    << ',' << csv_num(r.estimates.global_or.est) << ',' << to_string(r.verdict)
                    << '\n';
            }
        atomic_write(dir / "scatter_by_truth.csv", out.str());
    }
}

}  // namespace

// ------------------------------------------------------------- commands ---

int cmd_generate(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    PopulationParams pop;
    pop.gamma = cfg.gen_gamma;
    pop.log_lambda0 = cfg.gen_log_lambda0;
    pop.alpha = cfg.gen_factors.alpha;
    pop.beta = cfg.gen_factors.beta;
    pop.r2_true = cfg.gen_factors.r2_true;
    pop.theta_true = cfg.gen_factors.theta_true;
    pop.censor_rate = cfg.gen_factors.censor_rate;
    pop.t_assess = cfg.gen_t_assess;
    pop.validate();

    const auto sizes = cfg.gen_factors.sizes.expand(cfg.gen_factors.n_trials);
    const auto trials = synthesize_study(pop, sizes, cfg.seed);
    write_ipd_csv(cfg.output_dir / "ipd.csv", trials);

    const auto summaries = summarize_trials(trials);
    std::size_t rows = 0, censored = 0;
    json per_trial = json::array();
    for (const auto& s : summaries) {
        rows += s.n;
        censored += static_cast<std::size_t>(
            std::llround(s.censoring_fraction * static_cast<double>(s.n)));
        per_trial.push_back(json{{"trial_id", s.trial_id},
                                 {"n", s.n},
                                 {"events", s.events},
                                 {"response_rate_control", s.response_rate_control},
                                 {"response_rate_treated", s.response_rate_treated},
                                 {"censoring_fraction", s.censoring_fraction}});
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg.output_dir, cfg, wall, 1,
                   json{{"realized",
                         json{{"rows", rows},
                              {"censoring_fraction",
                               rows ? static_cast<double>(censored) / static_cast<double>(rows)
                                    : 0.0},
                              {"per_trial", per_trial}}}});
    std::cout << "wrote " << rows << " patients across " << trials.size() << " trials to "
              << (cfg.output_dir / "ipd.csv").string() << "\n";
    return kExitOk;
}

int cmd_fit(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto trials = ingest_ipd(cfg.ipd_path);

    std::cout << "trial_id  n      events  resp_ctrl  resp_trt  censoring\n";
    for (const auto& s : summarize_trials(trials)) {
        std::printf("%-9s %-6zu %-7zu %-10.3f %-9.3f %-9.3f\n", s.trial_id.c_str(), s.n,
                    s.events, s.response_rate_control, s.response_rate_treated,
                    s.censoring_fraction);
    }

    RngStream bootstrap = RngStream::keyed({cfg.seed}).child(stream_tag::bootstrap);
    const StudyFit fit = estimate_study(trials, cfg.estimators, bootstrap);

    json estimates{{"theta", interval_json(fit.estimates.global_or)},
                   {"r2_copula", interval_json(fit.estimates.r2_copula)},
                   {"r2_wls", interval_json(fit.estimates.r2_wls)},
                   {"r2_adj", interval_json(fit.estimates.r2_adj)},
                   {"verdict", verdict_json(fit.verdict)}};
    atomic_write(cfg.output_dir / "estimates.json", estimates.dump(2) + "\n");

    {
        std::ostringstream out;
        out << "trial_id,n,events,log_or,se_log_or,or,or_lo,or_hi,"
               "log_hr,se_log_hr,hr,hr_lo,hr_hi,"
               "log_hr_by_surrogate,se_log_hr_by_surrogate,hr_by_surrogate,"
               "hr_by_surrogate_lo,hr_by_surrogate_hi,wls_weight,zero_cell_corrected\n";
        for (const auto& r : fit.per_trial) {
            const auto triple = [&](std::ostringstream& o, double logx, double se) {
                if (std::isfinite(logx) && std::isfinite(se))
                    o << csv_num(std::exp(logx)) << ',' << csv_num(std::exp(logx - 1.96 * se))
                      << ',' << csv_num(std::exp(logx + 1.96 * se));
                else
                    o << ",,";
            };
            out << r.trial_id << ',' << r.n << ',' << r.events << ',' << csv_num(r.log_or)
                << ',' << csv_num(r.se_log_or) << ',';
            triple(out, r.log_or, r.se_log_or);
            out << ',' << csv_num(r.log_hr) << ',' << csv_num(r.se_log_hr) << ',';
            triple(out, r.log_hr, r.se_log_hr);
            out << ',' << csv_num(r.log_hr_surrogate) << ',' << csv_num(r.se_log_hr_surrogate)
                << ',';
            triple(out, r.log_hr_surrogate, r.se_log_hr_surrogate);
            out << ',' << csv_num(r.weight) << ',' << (r.zero_cell_corrected ? 1 : 0) << '\n';
        }
        atomic_write(cfg.output_dir / "effects.csv", out.str());
    }

    {
        std::ostringstream out;
        out << "trial_id,log_or,log_hr,wls_weight,fitted_log_hr\n";
        for (const auto& r : fit.per_trial)
            out << r.trial_id << ',' << csv_num(r.log_or) << ',' << csv_num(r.log_hr) << ','
                << csv_num(r.weight) << ','
                << csv_num(fit.estimates.wls_intercept + fit.estimates.wls_slope * r.log_or)
                << '\n';
        atomic_write(cfg.output_dir / "scatter.csv", out.str());
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg.output_dir, cfg, wall, 1, json::object());

    std::cout << "theta = " << fit.estimates.global_or.est << "  ["
              << fit.estimates.global_or.lo << ", " << fit.estimates.global_or.hi << "]\n"
              << "r2_copula = " << fit.estimates.r2_copula.est << "  ["
              << fit.estimates.r2_copula.lo << ", " << fit.estimates.r2_copula.hi << "]\n"
              << "r2_wls = " << fit.estimates.r2_wls.est << "  [" << fit.estimates.r2_wls.lo
              << ", " << fit.estimates.r2_wls.hi << "]\n"
              << "r2_adj = " << fit.estimates.r2_adj.est << "  [" << fit.estimates.r2_adj.lo
              << ", " << fit.estimates.r2_adj.hi << "]\n"
              << "verdict: " << to_string(fit.verdict.cls) << "\n";
    return kExitOk;
}

int cmd_simulate(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const int threads = resolve_threads(cfg.threads);

    ScenarioSpec base;
    base.gamma = cfg.sim_gamma;
    base.log_lambda0 = cfg.sim_log_lambda0;
    base.t_assess = cfg.sim_t_assess;
    base.replications = cfg.replications;
    base.master_seed = cfg.seed;
    base.estimators = cfg.estimators;
    const auto grid = expand_grid(cfg.grid, base);

    // resume guard: an existing manifest must describe the same configuration
    const auto manifest_path = cfg.output_dir / "run_manifest.json";
    const json echo = config_echo(cfg);
    if (std::filesystem::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        json previous;
        try {
            in >> previous;
        } catch (const json::exception&) {
            throw ConfigError("existing run_manifest.json is unreadable; refusing to resume");
        }
        if (previous.at("config") != echo)
            throw ConfigError(
                "output directory holds a run with a different configuration; refusing to "
                "resume");
    } else if (std::filesystem::exists(cfg.output_dir / "scenarios")) {
        throw ConfigError("output directory has scenario files but no manifest");
    }

    std::vector<ScenarioResult> results;
    std::size_t failures = 0, resumed = 0;
    for (const auto& spec : grid) {
        const auto path = cfg.output_dir / "scenarios" / (spec.scenario_id_hex() + ".json");
        ScenarioResult res;
        if (std::filesystem::exists(path)) {
            std::ifstream in(path);
            json o;
            in >> o;
            res = scenario_from_json(o);
            if (res.spec.replications != spec.replications ||
                res.spec.master_seed != spec.master_seed)
                throw ConfigError("scenario file " + path.string() +
                                  " does not match the requested run");
            res.spec = spec;
            ++resumed;
        } else {
            res = run_scenario(spec, threads);
            atomic_write(path, scenario_to_json(res).dump() + "\n");
        }
        for (const auto& r : res.replicates) failures += r.ok ? 0 : 1;
        results.push_back(std::move(res));
    }

    write_report_tables(cfg.output_dir, results);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json scenario_ids = json::array();
    for (const auto& spec : grid) scenario_ids.push_back(spec.scenario_id_hex());
    write_manifest(cfg.output_dir, cfg, wall, threads,
                   json{{"scenarios", scenario_ids},
                        {"failure_counts", json{{"replicates_failed", failures}}},
                        {"resumed_scenarios", resumed}});
    std::cout << "simulated " << grid.size() << " scenarios (" << resumed << " resumed), "
              << failures << " failed replicates; reports in " << cfg.output_dir.string()
              << "\n";
    return kExitOk;
}

int cmd_report(const RunConfig& cfg) {
    const auto dir = cfg.run_dir;
    const auto scen_dir = dir / "scenarios";
    if (!std::filesystem::is_directory(scen_dir))
        throw ValidationError("report: " + scen_dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(scen_dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ValidationError("report: no scenario files in " + scen_dir.string());
    std::vector<ScenarioResult> results;
    for (const auto& f : files) {
        std::ifstream in(f);
        json o;
        try {
            in >> o;
        } catch (const json::exception& e) {
            throw ValidationError("report: cannot parse " + f.string() + ": " + e.what());
        }
        results.push_back(scenario_from_json(o));
    }
    const auto out_dir = cfg.output_dir.empty() ? dir : cfg.output_dir;
    write_report_tables(out_dir, results);
    std::cout << "re-aggregated " << results.size() << " scenarios into " << out_dir.string()
              << "\n";
    return kExitOk;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"survalid: surrogate-endpoint validation workbench"};
    app.require_subcommand(1);

    std::string config_file;
    std::vector<std::string> sets;
    std::string mode;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config,-c", config_file, "JSON configuration file");
        sub->add_option("--set", sets, "override a config key, e.g. --set simulate.replications=10")
            ->take_all();
        sub->add_option_function<std::string>(
            "--seed", [&](const std::string& v) { sets.push_back("seed=" + v); },
            "random seed (overrides config)");
        sub->add_option_function<std::string>(
            "--threads", [&](const std::string& v) { sets.push_back("threads=" + v); },
            "worker threads (default: SURVALID_THREADS or hardware)");
        sub->add_option_function<std::string>(
            "--out,-o", [&](const std::string& v) { sets.push_back("output_dir=" + v); },
            "output directory");
    };

    CLI::App* generate = app.add_subcommand("generate", "synthesize one multi-trial IPD dataset");
    add_common(generate);
    CLI::App* fit = app.add_subcommand("fit", "estimate surrogacy from an IPD CSV");
    add_common(fit);
    fit->add_option_function<std::string>(
        "--ipd", [&](const std::string& v) { sets.push_back("fit.ipd=" + v); }, "IPD CSV path");
    CLI::App* simulate = app.add_subcommand("simulate", "run a factorial simulation study");
    add_common(simulate);
    simulate->add_option_function<std::string>(
        "--replications", [&](const std::string& v) { sets.push_back("simulate.replications=" + v); },
        "replicates per scenario");
    CLI::App* report = app.add_subcommand("report", "re-aggregate a simulation run directory");
    add_common(report);
    report->add_option_function<std::string>(
        "--run-dir", [&](const std::string& v) { sets.push_back("run_dir=" + v); },
        "directory of a previous simulate run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (generate->parsed()) mode = "generate";
    else if (fit->parsed()) mode = "fit";
    else if (simulate->parsed()) mode = "simulate";
    else if (report->parsed()) mode = "report";

    try {
        const RunConfig cfg = load_config(mode, config_file, sets);
        if (mode == "generate") return cmd_generate(cfg);
        if (mode == "fit") return cmd_fit(cfg);
        if (mode == "simulate") return cmd_simulate(cfg);
        return cmd_report(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const FitError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return kExitFit;
    } catch (const EstimationError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return kExitFit;
    } catch (const NumericError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return kExitFit;
    } catch (const DomainError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return kExitFit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOther;
    }
}

}  // namespace survalid::cli
