#include "trimfmr/cross_validation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "trimfmr/error.hpp"
#include "trimfmr/rng.hpp"

namespace trimfmr {

namespace {

constexpr std::uint64_t kKfoldStream = 0x6b666f6c64;  // "kfold"
constexpr std::uint64_t kMccvStream = 0x6d636376;     // "mccv"

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx = all_rows(n);
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(idx[i - 1], idx[pick(rng)]);
    }
    return idx;
}

}  // namespace

MethodConfig method_from_tag(std::string_view tag) {
    std::string t(tag);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    MethodConfig out;
    out.tag = t;
    if (t == "ml" || t == "ms" || t == "mmcp") out.estimator = Estimator::Fmr;
    else if (t == "mtl" || t == "mts" || t == "mtmcp") out.estimator = Estimator::Trimmed;
    else throw ConfigError("unknown method tag '" + std::string(tag) + "' (expected ml, ms, mmcp, mtl, mts, mtmcp)");
    PenaltyFamily family = PenaltyFamily::Lasso;
    if (t == "ms" || t == "mts") family = PenaltyFamily::Scad;
    if (t == "mmcp" || t == "mtmcp") family = PenaltyFamily::Mcp;
    out.penalty = PenaltySpec::make(family, 0.0);
    return out;
}

std::string method_tag(Estimator estimator, PenaltyFamily family) {
    const bool trimmed = estimator == Estimator::Trimmed;
    switch (family) {
        case PenaltyFamily::Lasso: return trimmed ? "mtl" : "ml";
        case PenaltyFamily::Scad: return trimmed ? "mts" : "ms";
        case PenaltyFamily::Mcp: return trimmed ? "mtmcp" : "mmcp";
    }
    return "unknown";
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) grid.push_back(k / 10.0);
    return grid;
}

MethodFit fit_method(const Dataset& data, std::size_t m, const MethodConfig& method) {
    const std::vector<double> grid = method.lambda_grid.empty() ? default_lambda_grid() : method.lambda_grid;
    MethodFit out;
    if (method.estimator == Estimator::Fmr) {
        const IndexSet rows = all_rows(data.rows());
        LambdaSelection sel = select_lambda(data, rows, m, method.penalty, grid, method.controls);
        out.theta = std::move(sel.fit.theta);
        out.lambda = sel.lambda;
        out.retained = rows;
        out.objective = sel.fit.objective;
        out.objective_trace = std::move(sel.fit.objective_trace);
    } else {
        TrimSpec trim = method.trim;
        if (method.alpha_search) {
            AlphaSelectConfig search = *method.alpha_search;
            search.penalty = method.penalty;
            search.lambda_grid = grid;
            search.trim = method.trim;
            search.controls = method.controls;
            trim.alpha = select_alpha(data, m, search).chosen_alpha;
        }
        TrimmedFit fit = fit_trimmed(data, m, method.penalty, trim, method.controls, grid);
        out.theta = std::move(fit.theta);
        out.lambda = fit.lambda;
        out.retained = std::move(fit.retained);
        out.objective = fit.objective;
        out.objective_trace = std::move(fit.trimmed_objective_trace);
    }
    return out;
}

double predict(const MixtureParams& theta, const Eigen::Ref<const Eigen::RowVectorXd>& x, PredictionRule rule) {
    if (static_cast<std::size_t>(x.size()) != theta.dimension()) throw DomainError("predict: dimension mismatch");
    if (rule == PredictionRule::MaxProportion) {
        Eigen::Index j = 0;
        theta.proportions.maxCoeff(&j);
        return x.dot(theta.coefficients.col(j).transpose());
    }
    double y = 0.0;
    for (Eigen::Index j = 0; j < theta.coefficients.cols(); ++j) {
        y += theta.proportions(j) * x.dot(theta.coefficients.col(j).transpose());
    }
    return y;
}

Partition kfold_partition(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw DomainError("kfold: k must be >= 2");
    if (n < k) throw DomainError("kfold: need at least k rows");
    Rng rng = make_rng(seed, kKfoldStream);
    const auto order = shuffled(n, rng);
    Partition folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t lo = f * n / k;
        const std::size_t hi = (f + 1) * n / k;
        folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(hi));
    }
    return folds;
}

Partition mccv_splits(std::size_t n, std::size_t d, std::size_t reps, std::uint64_t seed) {
    if (d < 1 || d >= n) throw DomainError("mccv: hold-out size d must satisfy 1 <= d < n");
    if (reps < 1) throw DomainError("mccv: reps must be >= 1");
    Partition splits(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        Rng rng = make_rng(seed, kMccvStream, r);
        const auto order = shuffled(n, rng);
        splits[r].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(d));
    }
    return splits;
}

namespace {

struct SplitError {
    double sum_sq = 0.0;
    std::size_t count = 0;
};

SplitError evaluate_split(const Dataset& data, std::size_t m, const MethodConfig& method,
                          const std::vector<std::size_t>& held_out) {
    std::vector<std::uint8_t> out(data.rows(), 0);
    for (const auto i : held_out) {
        if (i >= data.rows()) throw DomainError("cross_validate: hold-out index out of range");
        out[i] = 1;
    }
    std::vector<std::size_t> train;
    train.reserve(data.rows() - held_out.size());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        if (!out[i]) train.push_back(i);
    }
    const Dataset train_data = data.take(train);
    const MethodFit fit = fit_method(train_data, m, method);
    SplitError err;
    for (const auto i : held_out) {
        const double r = data.response(i) - predict(fit.theta, data.row(i), method.prediction);
        err.sum_sq += r * r;
        ++err.count;
    }
    return err;
}

}  // namespace

CvResult cross_validate(const Dataset& data, std::size_t m, const MethodConfig& method, const Partition& splits) {
    if (splits.empty()) throw DomainError("cross_validate: no splits");
    CvResult result;
    double total = 0.0;
    for (const auto& held_out : splits) {
        if (held_out.empty()) throw DomainError("cross_validate: empty hold-out set");
        try {
            const SplitError e = evaluate_split(data, m, method, held_out);
            total += e.sum_sq;
            result.held_out_rows += e.count;
            ++result.splits_used;
        } catch (const MonotonicityError&) {
            throw;
        } catch (const NumericalError&) {
            ++result.splits_skipped;
        }
    }
    if (2 * result.splits_skipped > splits.size()) {
        throw NumericalError(fmt::format("cross_validate: {} of {} fits failed", result.splits_skipped, splits.size()));
    }
    result.mspe = total / static_cast<double>(result.held_out_rows);
    return result;
}

CvResult kfold_cv_error(const Dataset& data, std::size_t m, const MethodConfig& method, std::size_t k,
                        std::uint64_t seed) {
    return cross_validate(data, m, method, kfold_partition(data.rows(), k, seed));
}

CvResult mccv_error(const Dataset& data, std::size_t m, const MethodConfig& method, std::size_t d, std::size_t reps,
                    std::uint64_t seed) {
    // Every split has d rows, so the pooled mean equals the mean of split MSPEs.
    return cross_validate(data, m, method, mccv_splits(data.rows(), d, reps, seed));
}

}  // namespace trimfmr
