#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "trimfmr/em.hpp"
#include "trimfmr/penalty.hpp"
#include "trimfmr/rng.hpp"
#include "trimfmr/trimmed.hpp"
#include "trimfmr/types.hpp"

namespace trimfmr {

enum class DispersionCriterion { MaxDiagonal, MaxEigenvalue };

std::string to_string(DispersionCriterion c);
DispersionCriterion parse_dispersion_criterion(const std::string& name);

// 0.00, 0.01, ..., 0.20.
std::vector<double> default_alpha_grid();

struct AlphaSelectConfig {
    std::vector<double> grid = default_alpha_grid();
    std::size_t n_boot = 200;
    DispersionCriterion criterion = DispersionCriterion::MaxDiagonal;
    std::uint64_t rng_seed = 1;
    PenaltySpec penalty = PenaltySpec::lasso(0.0);
    std::vector<double> lambda_grid;
    TrimSpec trim;          // alpha is overwritten per grid point
    EmControls controls;    // for the reference fit on the original data
    // Random starts per bootstrap fit, on top of the warm start from the
    // reference fit.
    int boot_starts = 1;
    // Re-select lambda on every bootstrap sample instead of reusing the
    // reference fit's lambda.
    bool refit_lambda = false;
    bool include_intercepts = true;
    // An alpha is disqualified when more than this share of its fits fail.
    double max_failure_share = 0.2;
    std::size_t threads = 1;
    void validate() const;
};

struct AlphaScore {
    double alpha = 0.0;
    double lambda = 0.0;  // reference fit
    double reference_objective = 0.0;
    MixtureParams reference;
    std::vector<Matrix> covariances;  // one per component
    double score_diag = 0.0;
    double score_eig = 0.0;
    std::size_t failures = 0;
    std::size_t successes = 0;
    bool disqualified = false;
};

struct AlphaSelectReport {
    double chosen_alpha = 0.0;
    DispersionCriterion criterion = DispersionCriterion::MaxDiagonal;
    std::vector<AlphaScore> scores;
};

// n rows drawn uniformly with replacement.
std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng);
// Resampled dataset; truth annotations are dropped.
Dataset bootstrap_resample(const Dataset& data, Rng& rng);

/// Sample covariance (n-1 denominator) of the rows of `samples`.
Matrix sample_covariance(const Matrix& samples);
double max_diagonal(std::span<const Matrix> covariances);
double max_eigenvalue(std::span<const Matrix> covariances);

/// Bootstrap selection of the trimming proportion: for every alpha, fit the
/// resamples, align each fit to the original-data fit at that alpha, and
/// score the per-component coefficient covariances. Returns the alpha with
/// the smallest score (ties to the smallest alpha).
AlphaSelectReport select_alpha(const Dataset& data, std::size_t m, const AlphaSelectConfig& cfg);

// Re-derives chosen_alpha from the stored scores.
double rescore(const AlphaSelectReport& report, DispersionCriterion criterion);

// Columns: alpha,score_diag,score_eig,failures.
void write_alpha_report_csv(std::ostream& out, const AlphaSelectReport& report);

}  // namespace trimfmr
