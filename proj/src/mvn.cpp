#include "survalid/mvn.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "survalid/errors.hpp"

namespace survalid {

std::vector<double> mvn_sample(const std::vector<double>& mean,
                               const std::vector<double>& cov,
                               RngStream& rng) {
    const auto d = static_cast<Eigen::Index>(mean.size());
    if (cov.size() != mean.size() * mean.size())
        throw DomainError("mvn_sample: covariance must be d x d");

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        sigma(cov.data(), d, d);
    if (!sigma.isApprox(sigma.transpose(), 1e-12))
        throw DomainError("mvn_sample: covariance must be symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.info() != Eigen::Success)
        throw NumericError("mvn_sample: eigendecomposition failed");
    Eigen::VectorXd evals = es.eigenvalues();
    if (evals.minCoeff() < -1e-10)
        throw DomainError("mvn_sample: covariance is not positive semidefinite");
    for (Eigen::Index i = 0; i < d; ++i) evals[i] = std::sqrt(std::max(0.0, evals[i]));

    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();

    Eigen::VectorXd x = es.eigenvectors() * evals.asDiagonal() * z;
    std::vector<double> out(mean.begin(), mean.end());
    for (Eigen::Index i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] += x[i];
    return out;
}

}  // namespace survalid
