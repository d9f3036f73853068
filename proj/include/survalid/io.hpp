#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "survalid/types.hpp"

namespace survalid {

// 17 significant digits: round-trips any double exactly.
std::string format_g17(double x);

// Write-temp-then-rename so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// IPD CSV schema: header `trial_id,patient_id,treatment,surrogate,time,event`,
// UTF-8, decimal points, no thousands separators.
void write_ipd_csv(const std::filesystem::path& path,
                   const std::vector<TrialDataset>& trials);

// Strict ingestion: exact header, binary flags in {0,1}, strictly positive
// times, no duplicate (trial_id, patient_id), both arms in every trial.
// Trials are ordered by first appearance. Violations raise ValidationError
// carrying the row number.
std::vector<TrialDataset> ingest_ipd(const std::filesystem::path& path);

struct TrialSummary {
    std::string trial_id;
    std::size_t n = 0;
    std::size_t events = 0;
    double response_rate_control = 0.0;
    double response_rate_treated = 0.0;
    double censoring_fraction = 0.0;
};

std::vector<TrialSummary> summarize_trials(const std::vector<TrialDataset>& trials);

}  // namespace survalid
