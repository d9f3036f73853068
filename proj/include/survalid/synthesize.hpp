#pragma once

#include <cstdint>
#include <vector>

#include "survalid/mvn.hpp"
#include "survalid/rng.hpp"
#include "survalid/types.hpp"

namespace survalid {

// Sub-stream tags used when splitting a trial stream. Fixed constants so a
// record's draws depend only on (seed, ..., trial, patient), never on how
// many values other consumers drew.
namespace stream_tag {
constexpr std::uint64_t effects = 1;
constexpr std::uint64_t assignment = 2;
constexpr std::uint64_t patients = 3;
constexpr std::uint64_t bootstrap = 4;
}  // namespace stream_tag

// One draw of trial-specific parameters: MVN around the population means with
// unit variances, correlation -sqrt(r2_true) between gamma and log lambda0
// and between alpha and beta, and no cross-block correlation.
TrialEffects draw_trial_effects(const PopulationParams& pop, RngStream& rng);

// Build one trial of n patients from its effects: exact 1:1 allocation after
// a stream-driven shuffle, Plackett pair per patient, inverse-cdf transforms
// to the binary surrogate and exponential event time, independent exponential
// censoring with rate -log(1 - censor_rate), and the landmark override
// (observed time < t_assess forces surrogate = 1).
TrialDataset synthesize_trial(const TrialEffects& effects, std::size_t n,
                              const PopulationParams& pop, RngStream trial_stream);

// One dataset per entry of trial_sizes, each from the sub-stream
// (master_seed, trial index).
std::vector<TrialDataset> synthesize_study(const PopulationParams& pop,
                                           const std::vector<std::size_t>& trial_sizes,
                                           RngStream study_stream);
std::vector<TrialDataset> synthesize_study(const PopulationParams& pop,
                                           const std::vector<std::size_t>& trial_sizes,
                                           std::uint64_t master_seed);

}  // namespace survalid
