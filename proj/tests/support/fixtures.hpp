#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "trimfmr/rng.hpp"
#include "trimfmr/types.hpp"

namespace trimfmr::testing {

// Random mixture of m regressions on p standard-normal covariates.
inline MixtureParams random_theta(std::size_t m, std::size_t p, Rng& rng, double spread = 3.0) {
    std::uniform_real_distribution<double> coef(-spread, spread);
    std::uniform_real_distribution<double> var(0.3, 1.5);
    std::gamma_distribution<double> mass(2.0, 1.0);
    Vector pi(static_cast<Eigen::Index>(m));
    for (auto& v : pi) v = mass(rng);
    pi /= pi.sum();
    Matrix beta(static_cast<Eigen::Index>(p + 1), static_cast<Eigen::Index>(m));
    for (Eigen::Index j = 0; j < beta.cols(); ++j) {
        for (Eigen::Index k = 0; k < beta.rows(); ++k) beta(k, j) = coef(rng);
    }
    Vector s2(static_cast<Eigen::Index>(m));
    for (auto& v : s2) v = var(rng);
    return MixtureParams(pi, beta, s2);
}

inline Dataset sample_mixture(const MixtureParams& theta, std::size_t n, Rng& rng) {
    const auto p = static_cast<Eigen::Index>(theta.dimension() - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::discrete_distribution<int> label(theta.proportions.data(), theta.proportions.data() + theta.proportions.size());
    Matrix cov(static_cast<Eigen::Index>(n), p);
    Vector y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
        for (Eigen::Index k = 0; k < p; ++k) cov(i, k) = normal(rng);
        const int j = label(rng);
        double mean = theta.coefficients(0, j);
        for (Eigen::Index k = 0; k < p; ++k) mean += cov(i, k) * theta.coefficients(k + 1, j);
        y(i) = mean + std::sqrt(theta.variances(j)) * normal(rng);
    }
    return Dataset::from_covariates(std::move(y), cov);
}

// Copy of `data` with `shift` added to the responses of `rows`.
inline Dataset shifted(const Dataset& data, const std::vector<std::size_t>& rows, double shift) {
    Vector y = data.y();
    for (const auto i : rows) y(static_cast<Eigen::Index>(i)) += shift;
    return Dataset(std::move(y), data.x());
}

}  // namespace trimfmr::testing
