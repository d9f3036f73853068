#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "survalid/estimate.hpp"
#include "survalid/simulate.hpp"

namespace survalid::cli {

// Exit codes: 0 success, 2 configuration error, 3 data validation error,
// 4 fit failure, 1 unexpected error.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;
constexpr int kExitFit = 4;
constexpr int kExitOther = 1;

// Fully resolved run configuration (file keys overridden by flags).
struct RunConfig {
    std::string mode;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;  // resolved from SURVALID_THREADS / hardware when 0
    std::filesystem::path output_dir = "run";
    std::filesystem::path run_dir;  // report mode input
    EstimatorConfig estimators;
    bool estimators_ci_set = false;  // fit mode defaults to the trial bootstrap

    // generate: one study
    ScenarioFactors gen_factors;
    double gen_gamma = std::log(0.40 / 0.60);
    double gen_log_lambda0 = std::log(0.15);
    double gen_t_assess = 0.5;

    // fit
    std::filesystem::path ipd_path;

    // simulate
    GridFactors grid;
    std::size_t replications = 100;
    double sim_gamma = std::log(0.40 / 0.60);
    double sim_log_lambda0 = std::log(0.15);
    double sim_t_assess = 0.5;
};

// Parse a config file plus overrides into a resolved RunConfig.
// Unknown keys are rejected, not ignored. Throws ConfigError.
RunConfig load_config(const std::string& mode, const std::filesystem::path& config_file,
                      const std::vector<std::string>& overrides);

int resolve_threads(int requested);

// Subcommand bodies (shared by main() and the test suites).
int cmd_generate(const RunConfig& cfg);
int cmd_fit(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);
int cmd_report(const RunConfig& cfg);

// Full argv entry point used by tools/survalid_main.cpp.
int run(int argc, const char* const* argv);

}  // namespace survalid::cli
