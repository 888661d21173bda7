#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "trimfmr/penalty.hpp"
#include "trimfmr/types.hpp"

namespace trimfmr {

struct EmControls {
    int max_iter = 500;
    // Stop when |l1_new - l1_old| <= tol * max(1, |l1_old|).
    double tol = 1e-8;
    // Random starts; an explicit init is tried in addition to these.
    int n_starts = 10;
    std::uint64_t rng_seed = 1;
    bool monotonicity_assert = true;
    double monotonicity_tol = 1e-7;
    // Unpenalized EM iterations run from random responsibilities before the
    // penalized loop of each random start.
    int warmup_iter = 5;

    void validate() const;
};

/// Posterior component probabilities, one row per retained observation in
/// subset order.
struct Responsibilities {
    Matrix r;
    std::size_t underflow_rows = 0;
};

struct FitResult {
    MixtureParams theta;
    // Penalized objective l1 = l_n - p_n at theta^(0), theta^(1), ...
    std::vector<double> objective_trace;
    bool converged = false;
    int iterations = 0;
    // active_sets[j][k] is true iff coefficient k of component j is nonzero.
    std::vector<std::vector<bool>> active_sets;
    double objective = 0.0;
    double log_likelihood = 0.0;
    // -1 when the supplied init won, otherwise the random start index.
    int start_index = -1;
    int failed_starts = 0;
    std::size_t underflow_rows = 0;
};

Responsibilities e_step(const Dataset& data, const MixtureParams& theta, std::span<const std::size_t> subset);

// Column means of r, floored at kProportionFloor and renormalized.
Vector m_step_proportions(const Responsibilities& resp);
Vector m_step_proportions(const Matrix& r);

/// LQA-penalized weighted least squares for one component:
///   beta = (X'WX + sigma2 D)^{-1} X'Wy
/// over the subset, with D = diag(0, w_1..w_p) and w_k the LQA weight at
/// beta_prev. Coordinates with |beta_prev_k| < kZeroThreshold stay exactly zero.
/// `penalty_n` defaults to the subset size.
Vector m_step_beta(const Dataset& data, std::span<const std::size_t> subset, const Eigen::Ref<const Vector>& r_col,
                   double sigma2, const Eigen::Ref<const Vector>& beta_prev, const PenaltySpec& spec,
                   std::optional<std::size_t> penalty_n = std::nullopt);

// Weighted mean squared residual, floored at data.variance_floor().
double m_step_sigma(const Dataset& data, std::span<const std::size_t> subset, const Eigen::Ref<const Vector>& r_col,
                    const Eigen::Ref<const Vector>& beta);

/// One E-step followed by the M-step updates for pi, beta (using the previous
/// variances) and sigma^2 (using the new beta). New slopes below
/// kZeroThreshold are set to exactly zero.
MixtureParams em_iteration(const Dataset& data, std::span<const std::size_t> subset, const MixtureParams& theta,
                           std::span<const PenaltySpec> specs, std::optional<std::size_t> penalty_n = std::nullopt);

/// Penalized EM with LQA. Runs `controls.n_starts` random starts plus `init`
/// (if any) and returns the start with the largest final objective.
/// Throws MonotonicityError if l1 drops by more than controls.monotonicity_tol
/// (when asserted), NumericalError if every start fails.
FitResult fit_penalized_fmr(const Dataset& data, std::span<const std::size_t> subset, std::size_t m,
                            std::span<const PenaltySpec> specs, const EmControls& controls,
                            const std::optional<MixtureParams>& init = std::nullopt,
                            std::optional<std::size_t> penalty_n = std::nullopt);

struct LambdaSelection {
    double lambda = 0.0;
    std::vector<PenaltySpec> specs;
    FitResult fit;
    std::vector<double> grid;  // as supplied
    std::vector<double> bic;   // aligned with grid; +inf where the fit failed
};

// Degrees of freedom used by the BIC: nonzero coefficients + (m-1) + m.
std::size_t degrees_of_freedom(const MixtureParams& theta);

/// BIC tuning of a lambda shared across components:
///   BIC = -2 l_n(theta; subset) + df log |subset|.
/// Grid values are fitted in increasing order, each warm-started from the
/// previous one as well as from the random starts. Ties go to the larger lambda.
LambdaSelection select_lambda(const Dataset& data, std::span<const std::size_t> subset, std::size_t m,
                              const PenaltySpec& penalty, std::span<const double> grid, const EmControls& controls,
                              const std::optional<MixtureParams>& init = std::nullopt,
                              std::optional<std::size_t> penalty_n = std::nullopt);

}  // namespace trimfmr
