#pragma once

#include <vector>

#include "survalid/rng.hpp"

namespace survalid {

// Draw from N(mean, cov). `cov` is the dense row-major d x d covariance,
// required symmetric positive semidefinite; singular covariances are handled
// through a rank-revealing eigendecomposition (negative eigenvalues below
// -1e-10 raise DomainError, tiny negatives are clamped to zero).
std::vector<double> mvn_sample(const std::vector<double>& mean,
                               const std::vector<double>& cov,
                               RngStream& rng);

}  // namespace survalid
