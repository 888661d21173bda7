#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trimfmr/types.hpp"

namespace trimfmr {

// perm[j] is the estimate component matched to reference component j.
using Permutation = std::vector<std::size_t>;

/// Label-switching resolution: the permutation minimizing
/// sum_j ||beta_hat_{perm(j)} - beta_ref_j||^2 over all m! candidates.
/// Ties go to the permutation with the fewest moved labels.
Permutation align_components(const MixtureParams& estimate, const MixtureParams& reference);

MixtureParams permute_components(const MixtureParams& theta, const Permutation& perm);

// Zero-declaration tolerance used when counting zeros.
inline constexpr double kZeroCountTolerance = 1e-4;

struct ZeroPatternScore {
    std::vector<int> correct_zeros;
    std::vector<int> incorrect_zeros;
    std::vector<bool> exact_model;
};

/// Counts over slopes only (rows 1..p). A slope is declared zero when
/// |beta_hat| <= tol; "correct" when the truth is zero, "incorrect" otherwise.
ZeroPatternScore count_zero_pattern(const Matrix& beta_hat, const Matrix& beta_true,
                                    double tol = kZeroCountTolerance);

// (beta_hat_j - beta_j)' E(XX') (beta_hat_j - beta_j) for every component.
Vector model_error(const Matrix& beta_hat, const Matrix& beta_true, const Matrix& exx);

struct ReplicationScore {
    ZeroPatternScore zeros;
    Vector model_errors;
};

struct CellSummary {
    std::vector<double> mean_correct;
    std::vector<double> mean_incorrect;
    std::vector<double> median_model_error;
    std::vector<double> accuracy;
    std::size_t replications = 0;  // successful replications
    std::size_t failures = 0;
};

// Means of zero counts, medians of model errors, share of exact models.
CellSummary aggregate_replications(std::span<const ReplicationScore> scores, std::size_t failures = 0);

double median(std::vector<double> values);

}  // namespace trimfmr
