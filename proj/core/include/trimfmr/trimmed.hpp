#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "trimfmr/em.hpp"
#include "trimfmr/penalty.hpp"
#include "trimfmr/types.hpp"

namespace trimfmr {

// Sample size used for the sqrt(n) penalty scaling inside trimmed fits.
enum class PenaltyScaling { Retained, Full };

struct TrimSpec {
    double alpha = 0.05;
    // Stop once the max-norm change of the aligned parameter vector is below this.
    double outer_tol = 1e-6;
    int max_outer = 100;
    PenaltyScaling scaling = PenaltyScaling::Retained;
    // Re-select lambda at every outer iteration instead of once per fit. The
    // objective trace is then no longer comparable across iterations.
    bool retune_lambda = false;

    void validate() const;
};

// floor(n (1 - alpha)).
std::size_t retained_count(std::size_t n, double alpha);

struct InnerFitStats {
    int em_runs = 0;
    long em_iterations = 0;
    int failed_starts = 0;
};

struct TrimmedFit {
    MixtureParams theta;
    IndexSet retained;  // sorted; always the top-h rows under theta
    // sum_{i in I} log f(y_i | x_i, theta) - p_n(theta) after every refit.
    std::vector<double> trimmed_objective_trace;
    int outer_iterations = 0;
    InnerFitStats inner;
    double alpha = 0.0;
    double lambda = 0.0;
    std::vector<PenaltySpec> specs;
    double objective = 0.0;
    bool converged = false;
    int start_index = -1;
};

// Top h = floor(n(1-alpha)) rows by mixture density, ties to the lower index.
IndexSet trim_index_set(const Dataset& data, const MixtureParams& theta, double alpha);
IndexSet top_rows(const Vector& log_densities, std::size_t h);

/// FAST-TLE for the penalized mixture: alternate trimming under the current
/// estimate with penalized EM on the retained rows.
///
/// Initial values come from unpenalized fits on `controls.n_starts` random
/// h-subsets (plus `init`). Lambda is chosen by BIC from `lambda_grid` on the
/// rows retained by the most promising start, then every start runs the
/// concentration loop with that lambda and the best trimmed objective wins.
/// With alpha = 0 this reduces to select_lambda on the full data.
TrimmedFit fit_trimmed(const Dataset& data, std::size_t m, const PenaltySpec& penalty, const TrimSpec& trim,
                       const EmControls& controls, std::span<const double> lambda_grid,
                       const std::optional<MixtureParams>& init = std::nullopt);

/// Exact TLE by enumeration of every h-subset. Test oracle only; refuses
/// more than 10,000 subsets.
TrimmedFit exhaustive_tle(const Dataset& data, std::size_t m, std::span<const PenaltySpec> specs, double alpha,
                          const EmControls& controls, PenaltyScaling scaling = PenaltyScaling::Retained);

}  // namespace trimfmr
