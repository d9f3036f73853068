#pragma once

#include <stdexcept>

namespace survalid {

// Argument outside its mathematical domain (probabilities, rates, factor levels).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed: root finder, bracket search, flat profile.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A statistical fit cannot be produced from the data at hand
// (empty arm, zero events, monotone partial likelihood).
struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A multi-trial fit failed as a whole (too many inner failures, bad bracket).
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CSV schema, duplicate keys, single arm).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed run configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace survalid
