#include "trimfmr/trimmed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "trimfmr/error.hpp"
#include "trimfmr/metrics.hpp"
#include "trimfmr/mixture.hpp"
#include "trimfmr/rng.hpp"

namespace trimfmr {

namespace {

constexpr std::uint64_t kTrimStream = 0x7472696d;  // "trim"
constexpr std::size_t kMaxSubsets = 10000;

double trimmed_objective(const Vector& log_dens, const IndexSet& rows, const MixtureParams& theta,
                         std::span<const PenaltySpec> specs, std::size_t penalty_n) {
    double total = 0.0;
    for (const auto i : rows) total += log_dens(static_cast<Eigen::Index>(i));
    return total - total_penalty(theta, specs, penalty_n);
}

IndexSet random_subset(std::size_t n, std::size_t h, Rng& rng) {
    IndexSet idx = all_rows(n);
    for (std::size_t i = 0; i < h; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(h);
    std::sort(idx.begin(), idx.end());
    return idx;
}

double aligned_change(const MixtureParams& next, const MixtureParams& prev) {
    const MixtureParams aligned = permute_components(next, align_components(next, prev));
    return (aligned.flatten() - prev.flatten()).cwiseAbs().maxCoeff();
}

void tally(InnerFitStats& stats, const FitResult& fit) {
    ++stats.em_runs;
    stats.em_iterations += fit.iterations;
    stats.failed_starts += fit.failed_starts;
}

double binomial(std::size_t n, std::size_t k) {
    k = std::min(k, n - k);
    double c = 1.0;
    for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    return c;
}

struct Path {
    MixtureParams theta;
    IndexSet rows;
    std::vector<double> trace;
    std::vector<PenaltySpec> specs;
    double lambda = 0.0;
    bool retuned = false;
    int outer = 0;
    bool converged = false;
};

// Alternates trimming and refitting from (rows, theta). With refit_first the
// estimate is first refitted on `rows`. Records the trimmed objective after
// every refit; the final retained set is the top h under the final theta.
Path concentrate(const Dataset& data, IndexSet rows, MixtureParams theta, std::vector<PenaltySpec> specs,
                 const PenaltySpec& penalty, const TrimSpec& trim, const EmControls& warm,
                 std::span<const double> lambda_grid, std::size_t h, std::size_t penalty_n, InnerFitStats& stats,
                 bool refit_first, bool retune) {
    const std::size_t m = theta.components();
    if (refit_first) {
        FitResult fit = fit_penalized_fmr(data, rows, m, specs, warm, theta, penalty_n);
        tally(stats, fit);
        theta = std::move(fit.theta);
    }
    Path path;
    Vector dens = row_log_densities(data, theta);
    path.trace.push_back(trimmed_objective(dens, rows, theta, specs, penalty_n));
    while (path.outer < trim.max_outer) {
        IndexSet next_rows = top_rows(dens, h);
        if (next_rows == rows) {
            path.converged = true;
            break;
        }
        ++path.outer;
        MixtureParams next;
        if (retune) {
            LambdaSelection sel = select_lambda(data, next_rows, m, penalty, lambda_grid, warm, theta, penalty_n);
            tally(stats, sel.fit);
            specs = sel.specs;
            path.lambda = sel.lambda;
            path.retuned = true;
            next = std::move(sel.fit.theta);
        } else {
            FitResult fit = fit_penalized_fmr(data, next_rows, m, specs, warm, theta, penalty_n);
            tally(stats, fit);
            next = std::move(fit.theta);
        }
        const double change = aligned_change(next, theta);
        theta = std::move(next);
        rows = std::move(next_rows);
        dens = row_log_densities(data, theta);
        path.trace.push_back(trimmed_objective(dens, rows, theta, specs, penalty_n));
        const double prev = path.trace[path.trace.size() - 2];
        if (!retune && warm.monotonicity_assert && path.trace.back() < prev - warm.monotonicity_tol) {
            throw MonotonicityError(fmt::format(
                "fit_trimmed: trimmed objective decreased at outer iteration {} ({:.17g} -> {:.17g})", path.outer,
                prev, path.trace.back()));
        }
        if (change < trim.outer_tol) {
            path.converged = true;
            break;
        }
    }
    IndexSet final_rows = top_rows(dens, h);
    if (final_rows != rows) {
        rows = std::move(final_rows);
        path.trace.push_back(trimmed_objective(dens, rows, theta, specs, penalty_n));
    }
    path.theta = std::move(theta);
    path.rows = std::move(rows);
    path.specs = std::move(specs);
    return path;
}

}  // namespace

void TrimSpec::validate() const {
    if (!(alpha >= 0.0 && alpha < 0.5)) throw DomainError("TrimSpec: alpha must lie in [0, 0.5)");
    if (!(outer_tol > 0.0)) throw DomainError("TrimSpec: outer_tol must be > 0");
    if (max_outer < 1) throw DomainError("TrimSpec: max_outer must be >= 1");
}

std::size_t retained_count(std::size_t n, double alpha) {
    // The epsilon keeps products like 100 * 0.95 from rounding down to 94.
    const double h = std::floor(static_cast<double>(n) * (1.0 - alpha) + 1e-9);
    return static_cast<std::size_t>(std::max(h, 0.0));
}

IndexSet top_rows(const Vector& log_densities, std::size_t h) {
    const auto n = static_cast<std::size_t>(log_densities.size());
    if (h < 1) throw DomainError("trim_index_set: nothing would be retained");
    if (h > n) throw DomainError("trim_index_set: retained count exceeds the number of rows");
    IndexSet order = all_rows(n);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return log_densities(static_cast<Eigen::Index>(a)) > log_densities(static_cast<Eigen::Index>(b));
    });
    order.resize(h);
    std::sort(order.begin(), order.end());
    return order;
}

IndexSet trim_index_set(const Dataset& data, const MixtureParams& theta, double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("trim_index_set: alpha must lie in [0, 1)");
    return top_rows(row_log_densities(data, theta), retained_count(data.rows(), alpha));
}

TrimmedFit fit_trimmed(const Dataset& data, std::size_t m, const PenaltySpec& penalty, const TrimSpec& trim,
                       const EmControls& controls, std::span<const double> lambda_grid,
                       const std::optional<MixtureParams>& init) {
    trim.validate();
    controls.validate();
    penalty.validate();
    const std::size_t n = data.rows();
    const std::size_t h = retained_count(n, trim.alpha);
    const std::size_t need = m * (data.predictors() + 2);
    if (h < need) {
        throw DataError(fmt::format("fit_trimmed: {} retained rows cannot fit {} components with {} predictors "
                                    "(need at least {})", h, m, data.predictors(), need));
    }
    const std::size_t penalty_n = trim.scaling == PenaltyScaling::Retained ? h : n;

    TrimmedFit out;
    out.alpha = trim.alpha;

    if (h == n) {
        const IndexSet everything = all_rows(n);
        LambdaSelection sel = select_lambda(data, everything, m, penalty, lambda_grid, controls, init, penalty_n);
        tally(out.inner, sel.fit);
        out.theta = sel.fit.theta;
        out.retained = everything;
        out.trimmed_objective_trace = {sel.fit.objective};
        out.lambda = sel.lambda;
        out.specs = sel.specs;
        out.objective = sel.fit.objective;
        out.converged = true;
        return out;
    }

    // Initial values: unpenalized single-start fits on random h-subsets.
    std::vector<MixtureParams> starts;
    std::vector<int> start_ids;
    if (init) {
        starts.push_back(*init);
        start_ids.push_back(-1);
    }
    const auto unpenalized = shared_penalty(penalty.with_lambda(0.0), m);
    for (int s = 0; s < controls.n_starts; ++s) {
        Rng rng = make_rng(controls.rng_seed, kTrimStream, static_cast<std::uint64_t>(s));
        const IndexSet subset = random_subset(n, h, rng);
        EmControls one = controls;
        one.n_starts = 1;
        one.rng_seed = derive_seed(controls.rng_seed, kTrimStream + 1, static_cast<std::uint64_t>(s));
        try {
            FitResult fit = fit_penalized_fmr(data, subset, m, unpenalized, one, std::nullopt, penalty_n);
            tally(out.inner, fit);
            starts.push_back(std::move(fit.theta));
            start_ids.push_back(s);
        } catch (const MonotonicityError&) {
            throw;
        } catch (const NumericalError&) {
            ++out.inner.failed_starts;
        }
    }
    if (starts.empty()) throw NumericalError("fit_trimmed: no initial value could be fitted");

    EmControls warm = controls;
    warm.n_starts = 0;

    // Unpenalized concentration from every initial value; the best trimmed
    // likelihood decides where lambda is tuned.
    const auto unpenalized_specs = shared_penalty(penalty.with_lambda(0.0), m);
    std::optional<Path> lead;
    for (std::size_t c = 0; c < starts.size(); ++c) {
        try {
            Path path = concentrate(data, top_rows(row_log_densities(data, starts[c]), h), starts[c],
                                    unpenalized_specs, penalty, trim, warm, lambda_grid, h, penalty_n, out.inner,
                                    /*refit_first=*/true, /*retune=*/false);
            if (!lead || path.trace.back() > lead->trace.back()) {
                lead = std::move(path);
                out.start_index = start_ids[c];
            }
        } catch (const MonotonicityError&) {
            throw;
        } catch (const NumericalError&) {
            ++out.inner.failed_starts;
        }
    }
    if (!lead) throw NumericalError("fit_trimmed: every start failed");

    // Lambda is tuned once, then the penalized concentration runs from the
    // tuned fit with lambda held fixed.
    LambdaSelection tuned = select_lambda(data, lead->rows, m, penalty, lambda_grid, controls, lead->theta, penalty_n);
    tally(out.inner, tuned.fit);
    Path path = concentrate(data, lead->rows, tuned.fit.theta, tuned.specs, penalty, trim, warm, lambda_grid, h,
                            penalty_n, out.inner, /*refit_first=*/false, trim.retune_lambda);
    out.theta = std::move(path.theta);
    out.retained = std::move(path.rows);
    out.trimmed_objective_trace = std::move(path.trace);
    out.outer_iterations = path.outer;
    out.converged = path.converged;
    out.lambda = path.retuned ? path.lambda : tuned.lambda;
    out.specs = std::move(path.specs);
    out.objective = out.trimmed_objective_trace.back();
    return out;
}

TrimmedFit exhaustive_tle(const Dataset& data, std::size_t m, std::span<const PenaltySpec> specs, double alpha,
                          const EmControls& controls, PenaltyScaling scaling) {
    if (!(alpha >= 0.0 && alpha < 0.5)) throw DomainError("exhaustive_tle: alpha must lie in [0, 0.5)");
    const std::size_t n = data.rows();
    const std::size_t h = retained_count(n, alpha);
    if (h < 1) throw DomainError("exhaustive_tle: nothing would be retained");
    if (binomial(n, h) > static_cast<double>(kMaxSubsets)) {
        throw DomainError(fmt::format("exhaustive_tle: C({}, {}) subsets exceed the limit of {}", n, h, kMaxSubsets));
    }
    const std::size_t penalty_n = scaling == PenaltyScaling::Retained ? h : n;

    TrimmedFit out;
    out.alpha = alpha;
    out.specs.assign(specs.begin(), specs.end());
    out.lambda = specs.empty() ? 0.0 : specs.front().lambda;
    out.converged = true;
    bool have_best = false;
    // Lexicographic enumeration of h-combinations.
    IndexSet comb(h);
    std::iota(comb.begin(), comb.end(), std::size_t{0});
    for (;;) {
        try {
            FitResult fit = fit_penalized_fmr(data, comb, m, specs, controls, std::nullopt, penalty_n);
            tally(out.inner, fit);
            if (!have_best || fit.objective > out.objective) {
                have_best = true;
                out.objective = fit.objective;
                out.theta = std::move(fit.theta);
                out.retained = comb;
            }
        } catch (const MonotonicityError&) {
            throw;
        } catch (const NumericalError&) {
            ++out.inner.failed_starts;
        }
        std::size_t i = h;
        while (i > 0 && comb[i - 1] == n - h + i - 1) --i;
        if (i == 0) break;
        ++comb[i - 1];
        for (std::size_t j = i; j < h; ++j) comb[j] = comb[j - 1] + 1;
    }
    if (!have_best) throw NumericalError("exhaustive_tle: no subset could be fitted");
    out.trimmed_objective_trace = {out.objective};
    return out;
}

}  // namespace trimfmr
