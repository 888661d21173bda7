#pragma once

#include <cstddef>
#include <span>

#include "trimfmr/penalty.hpp"
#include "trimfmr/types.hpp"

namespace trimfmr {

double log_component_density(double y, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                             const Eigen::Ref<const Vector>& beta, double sigma2);

// phi(y; x'beta, sigma2). DomainError when sigma2 <= 0.
double component_density(double y, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                         const Eigen::Ref<const Vector>& beta, double sigma2);

// log sum_j pi_j phi(y; x'beta_j, sigma_j^2), via log-sum-exp.
double log_mixture_density(double y, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                           const MixtureParams& theta);
double mixture_density(double y, const Eigen::Ref<const Eigen::RowVectorXd>& x, const MixtureParams& theta);

// log f(y_i | x_i, theta) for every row of the dataset.
Vector row_log_densities(const Dataset& data, const MixtureParams& theta);

double log_likelihood(const Dataset& data, const MixtureParams& theta);
// DomainError on an empty subset or an out-of-range index.
double log_likelihood(const Dataset& data, const MixtureParams& theta, std::span<const std::size_t> subset);

// log_likelihood minus total_penalty; the penalty is scaled by the subset size.
double penalized_objective(const Dataset& data, const MixtureParams& theta, std::span<const PenaltySpec> specs);
double penalized_objective(const Dataset& data, const MixtureParams& theta, std::span<const PenaltySpec> specs,
                           std::span<const std::size_t> subset);
// Same, with an explicit sample size for the sqrt(n) penalty scaling.
double penalized_objective(const Dataset& data, const MixtureParams& theta, std::span<const PenaltySpec> specs,
                           std::span<const std::size_t> subset, std::size_t penalty_n);

}  // namespace trimfmr
