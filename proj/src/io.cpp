#include "survalid/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "survalid/errors.hpp"

namespace survalid {

namespace fs = std::filesystem;

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_ipd_csv(const fs::path& path, const std::vector<TrialDataset>& trials) {
    std::ostringstream out;
    out << "trial_id,patient_id,treatment,surrogate,time,event\n";
    for (const auto& t : trials) {
        for (std::size_t j = 0; j < t.patients.size(); ++j) {
            const auto& p = t.patients[j];
            out << t.trial_id << ',' << (j + 1) << ',' << p.treatment << ',' << p.surrogate
                << ',' << format_g17(p.time) << ',' << (p.event ? 1 : 0) << '\n';
        }
    }
    atomic_write(path, out.str());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

int parse_binary(const std::string& s, const char* what, std::size_t row) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw ValidationError("row " + std::to_string(row) + ": " + what + " must be 0 or 1, got '" +
                          s + "'");
}

double parse_time(const std::string& s, std::size_t row) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
        throw ValidationError("row " + std::to_string(row) + ": cannot parse time '" + s + "'");
    if (!(v > 0.0))
        throw ValidationError("row " + std::to_string(row) + ": time must be strictly positive");
    return v;
}

}  // namespace

std::vector<TrialDataset> ingest_ipd(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open IPD file " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw ValidationError("empty IPD file " + path.string());
    {
        std::string header = line;
        if (!header.empty() && header.back() == '\r') header.pop_back();
        if (header != "trial_id,patient_id,treatment,surrogate,time,event")
            throw ValidationError(
                "row 1: expected header trial_id,patient_id,treatment,surrogate,time,event");
    }

    std::vector<TrialDataset> trials;
    std::map<std::string, std::size_t> index_of;          // trial_id -> position
    std::map<std::pair<std::string, std::string>, bool> seen;  // (trial, patient)
    std::size_t row = 1;
    bool any = false;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 6)
            throw ValidationError("row " + std::to_string(row) + ": expected 6 fields, got " +
                                  std::to_string(fields.size()));
        const std::string& trial_id = fields[0];
        const std::string& patient_id = fields[1];
        if (trial_id.empty() || patient_id.empty())
            throw ValidationError("row " + std::to_string(row) + ": empty identifier");
        if (seen.count({trial_id, patient_id}))
            throw ValidationError("row " + std::to_string(row) + ": duplicate patient '" +
                                  patient_id + "' in trial '" + trial_id + "'");
        seen[{trial_id, patient_id}] = true;

        PatientRecord rec;
        rec.treatment = parse_binary(fields[2], "treatment", row);
        rec.surrogate = parse_binary(fields[3], "surrogate", row);
        rec.time = parse_time(fields[4], row);
        rec.event = parse_binary(fields[5], "event", row) == 1;

        auto it = index_of.find(trial_id);
        if (it == index_of.end()) {
            index_of.emplace(trial_id, trials.size());
            trials.push_back(TrialDataset{trial_id, {}});
            it = index_of.find(trial_id);
        }
        trials[it->second].patients.push_back(rec);
        any = true;
    }
    if (!any) throw ValidationError("IPD file has no data rows: " + path.string());
    for (const auto& t : trials)
        if (!t.both_arms())
            throw ValidationError("trial '" + t.trial_id + "' does not have both arms");
    return trials;
}

std::vector<TrialSummary> summarize_trials(const std::vector<TrialDataset>& trials) {
    std::vector<TrialSummary> out;
    out.reserve(trials.size());
    for (const auto& t : trials) {
        TrialSummary s;
        s.trial_id = t.trial_id;
        s.n = t.n();
        double resp0 = 0, n0 = 0, resp1 = 0, n1 = 0, censored = 0;
        for (const auto& p : t.patients) {
            if (p.treatment == 0) {
                n0 += 1;
                resp0 += p.surrogate == 0 ? 1 : 0;
            } else {
                n1 += 1;
                resp1 += p.surrogate == 0 ? 1 : 0;
            }
            s.events += p.event ? 1 : 0;
            censored += p.event ? 0 : 1;
        }
        s.response_rate_control = n0 > 0 ? resp0 / n0 : 0.0;
        s.response_rate_treated = n1 > 0 ? resp1 / n1 : 0.0;
        s.censoring_fraction = t.n() ? censored / static_cast<double>(t.n()) : 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace survalid
