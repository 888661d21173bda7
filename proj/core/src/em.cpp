#include "trimfmr/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "trimfmr/error.hpp"
#include "trimfmr/mixture.hpp"
#include "trimfmr/rng.hpp"

namespace trimfmr {

void EmControls::validate() const {
    if (max_iter < 1) throw DomainError("EmControls: max_iter must be >= 1");
    if (!(tol > 0.0)) throw DomainError("EmControls: tol must be > 0");
    if (n_starts < 0) throw DomainError("EmControls: n_starts must be >= 0");
    if (warmup_iter < 0) throw DomainError("EmControls: warmup_iter must be >= 0");
    if (!(monotonicity_tol >= 0.0)) throw DomainError("EmControls: monotonicity_tol must be >= 0");
}

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// Retained rows copied into contiguous storage for the duration of a fit.
struct Local {
    Dataset rows;
    double variance_floor;
    std::size_t penalty_n;
};

Local gather(const Dataset& data, std::span<const std::size_t> subset, std::optional<std::size_t> penalty_n) {
    if (subset.empty()) throw DomainError("EM: empty subset");
    std::vector<std::uint8_t> seen(data.rows(), 0);
    for (const auto i : subset) {
        if (i >= data.rows()) throw DomainError("EM: subset index out of range");
        if (seen[i]) throw DomainError("EM: subset indices must be distinct");
        seen[i] = 1;
    }
    return Local{data.take(subset), data.variance_floor(), penalty_n.value_or(subset.size())};
}

Responsibilities e_step_local(const Dataset& d, const MixtureParams& theta) {
    const auto n = static_cast<Eigen::Index>(d.rows());
    const auto m = static_cast<Eigen::Index>(theta.components());
    const Matrix fitted = d.x() * theta.coefficients;
    Vector log_norm(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        log_norm(j) = std::log(theta.proportions(j)) - 0.5 * (kLogTwoPi + std::log(theta.variances(j)));
    }
    Responsibilities out{Matrix(n, m), 0};
    for (Eigen::Index i = 0; i < n; ++i) {
        double hi = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < m; ++j) {
            const double r = d.y()(i) - fitted(i, j);
            const double lp = log_norm(j) - r * r / (2.0 * theta.variances(j));
            out.r(i, j) = lp;
            hi = std::max(hi, lp);
        }
        if (!std::isfinite(hi)) {
            out.r.row(i).setConstant(1.0 / static_cast<double>(m));
            ++out.underflow_rows;
            continue;
        }
        double s = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            out.r(i, j) = std::exp(out.r(i, j) - hi);
            s += out.r(i, j);
        }
        out.r.row(i) /= s;
    }
    return out;
}

// Maximizer of sum_j c_j log pi_j over the simplex with pi_j >= floor.
Vector project_proportions(const Vector& mass) {
    const auto m = mass.size();
    std::vector<bool> pinned(static_cast<std::size_t>(m), false);
    Vector pi(m);
    for (;;) {
        double free_mass = 0.0;
        Eigen::Index n_pinned = 0;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (pinned[static_cast<std::size_t>(j)]) ++n_pinned;
            else free_mass += mass(j);
        }
        const double budget = 1.0 - static_cast<double>(n_pinned) * kProportionFloor;
        bool changed = false;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (pinned[static_cast<std::size_t>(j)]) {
                pi(j) = kProportionFloor;
                continue;
            }
            pi(j) = free_mass > 0.0 ? mass(j) * budget / free_mass : budget / static_cast<double>(m - n_pinned);
            if (pi(j) < kProportionFloor) {
                pinned[static_cast<std::size_t>(j)] = true;
                changed = true;
            }
        }
        if (!changed) break;
    }
    // Exact unit sum after rounding.
    const double total = pi.sum();
    Eigen::Index big = 0;
    pi.maxCoeff(&big);
    pi(big) += 1.0 - total;
    return pi;
}

double lqa_quadratic(const Matrix& xa, const Vector& y, const Vector& w, double sigma2, const Vector& beta,
                     const Vector& curvature) {
    const Vector resid = y - xa * beta;
    return -(w.array() * resid.array().square()).sum() / (2.0 * sigma2) -
           0.5 * (curvature.array() * beta.array().square()).sum();
}

// Penalized weighted least squares. With `penalized` false every coordinate
// is free and no LQA term is added (used for warm-up iterations).
Vector solve_beta(const Dataset& d, const Vector& w, double sigma2, const Vector& beta_prev, const PenaltySpec& spec,
                  std::size_t penalty_n, bool penalized) {
    const auto dim = static_cast<Eigen::Index>(d.dimension());
    std::vector<Eigen::Index> active{0};
    for (Eigen::Index k = 1; k < dim; ++k) {
        if (!penalized || std::abs(beta_prev(k)) >= kZeroThreshold) active.push_back(k);
    }
    const auto q = static_cast<Eigen::Index>(active.size());
    Matrix xa(d.x().rows(), q);
    Vector curvature = Vector::Zero(q);
    for (Eigen::Index c = 0; c < q; ++c) {
        xa.col(c) = d.x().col(active[static_cast<std::size_t>(c)]);
        if (penalized && c > 0 && spec.lambda > 0.0) {
            curvature(c) = lqa_weight(spec, beta_prev(active[static_cast<std::size_t>(c)]), penalty_n);
        }
    }
    const Matrix xw = xa.array().colwise() * w.array();
    Matrix normal = xw.transpose() * xa;
    normal.diagonal() += sigma2 * curvature;
    const Vector rhs = xw.transpose() * d.y();

    Vector sol;
    const double trace = normal.trace();
    bool ok = false;
    for (int attempt = 0; attempt <= 3 && !ok; ++attempt) {
        Matrix a = normal;
        if (attempt > 0) {
            const double jitter = std::pow(100.0, attempt - 1) * 1e-10 * std::abs(trace) / static_cast<double>(q);
            a.diagonal().array() += jitter;
        }
        Eigen::LLT<Matrix> llt(a);
        if (llt.info() != Eigen::Success) continue;
        sol = llt.solve(rhs);
        ok = sol.allFinite();
    }
    if (!ok) throw NumericalError("m_step_beta: singular normal equations after 3 jittered retries");

    if (penalized) {
        Vector prev(q);
        for (Eigen::Index c = 0; c < q; ++c) prev(c) = beta_prev(active[static_cast<std::size_t>(c)]);
        const double before = lqa_quadratic(xa, d.y(), w, sigma2, prev, curvature);
        const double after = lqa_quadratic(xa, d.y(), w, sigma2, sol, curvature);
        if (after < before - 1e-9 * (1.0 + std::abs(before))) {
            throw NumericalError(fmt::format("m_step_beta: M-step objective decreased ({} -> {})", before, after));
        }
    }
    Vector out = Vector::Zero(dim);
    for (Eigen::Index c = 0; c < q; ++c) out(active[static_cast<std::size_t>(c)]) = sol(c);
    return out;
}

double sigma_local(const Dataset& d, const Vector& w, const Vector& beta, double floor) {
    const double total = w.sum();
    if (!(total > 0.0)) return floor;
    const Vector resid = d.y() - d.x() * beta;
    const double s2 = (w.array() * resid.array().square()).sum() / total;
    return std::max(s2, floor);
}

void snap_slopes(Eigen::Ref<Vector> beta) {
    for (Eigen::Index k = 1; k < beta.size(); ++k) {
        if (std::abs(beta(k)) < kZeroThreshold) beta(k) = 0.0;
    }
}

MixtureParams m_step_local(const Local& L, const MixtureParams& theta, const Matrix& r,
                           std::span<const PenaltySpec> specs, bool penalized) {
    const auto m = static_cast<Eigen::Index>(theta.components());
    MixtureParams next;
    next.proportions = m_step_proportions(r);
    next.coefficients = theta.coefficients;
    next.variances = theta.variances;
    const PenaltySpec none{};
    for (Eigen::Index j = 0; j < m; ++j) {
        const Vector w = r.col(j);
        const auto& spec = penalized ? specs[static_cast<std::size_t>(j)] : none;
        Vector beta = solve_beta(L.rows, w, theta.variances(j), theta.coefficients.col(j), spec, L.penalty_n, penalized);
        if (penalized) snap_slopes(beta);
        next.variances(j) = sigma_local(L.rows, w, beta, L.variance_floor);
        next.coefficients.col(j) = beta;
    }
    return next;
}

double objective_local(const Local& L, const MixtureParams& theta, std::span<const PenaltySpec> specs) {
    return row_log_densities(L.rows, theta).sum() - total_penalty(theta, specs, L.penalty_n);
}

MixtureParams random_start(const Local& L, std::size_t m, const EmControls& controls, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(L.rows.rows());
    const auto mm = static_cast<Eigen::Index>(m);
    Matrix r(n, mm);
    std::exponential_distribution<double> expo(1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < mm; ++j) r(i, j) = expo(rng);
        r.row(i) /= r.row(i).sum();
    }
    MixtureParams theta;
    theta.coefficients = Matrix::Zero(static_cast<Eigen::Index>(L.rows.dimension()), mm);
    theta.variances = Vector::Ones(mm);
    theta.proportions = Vector::Constant(mm, 1.0 / static_cast<double>(m));
    theta = m_step_local(L, theta, r, {}, false);
    for (int it = 0; it < controls.warmup_iter; ++it) {
        theta = m_step_local(L, theta, e_step_local(L.rows, theta).r, {}, false);
    }
    return theta;
}

std::vector<std::vector<bool>> active_sets_of(const MixtureParams& theta) {
    std::vector<std::vector<bool>> out(theta.components());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const auto col = theta.coefficients.col(static_cast<Eigen::Index>(j));
        out[j].resize(static_cast<std::size_t>(col.size()));
        for (Eigen::Index k = 0; k < col.size(); ++k) out[j][static_cast<std::size_t>(k)] = col(k) != 0.0;
    }
    return out;
}

FitResult run_em(const Local& L, MixtureParams theta, std::span<const PenaltySpec> specs, const EmControls& controls) {
    for (Eigen::Index j = 0; j < theta.coefficients.cols(); ++j) snap_slopes(theta.coefficients.col(j));
    FitResult fit;
    double obj = objective_local(L, theta, specs);
    if (!std::isfinite(obj)) throw NumericalError("EM: non-finite objective at the starting value");
    fit.objective_trace.push_back(obj);
    for (int it = 1; it <= controls.max_iter; ++it) {
        auto resp = e_step_local(L.rows, theta);
        fit.underflow_rows += resp.underflow_rows;
        MixtureParams next = m_step_local(L, theta, resp.r, specs, true);
        const double next_obj = objective_local(L, next, specs);
        if (!std::isfinite(next_obj)) throw NumericalError(fmt::format("EM: non-finite objective at iteration {}", it));
        fit.objective_trace.push_back(next_obj);
        const double delta = next_obj - obj;
        if (controls.monotonicity_assert && delta < -controls.monotonicity_tol) {
            throw MonotonicityError(
                fmt::format("EM: penalized objective decreased at iteration {} ({:.17g} -> {:.17g})", it, obj, next_obj));
        }
        const double change = (next.flatten() - theta.flatten()).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, std::abs(obj));
        theta = std::move(next);
        obj = next_obj;
        fit.iterations = it;
        if (std::abs(delta) <= controls.tol * scale || change <= 1e-12) {
            fit.converged = true;
            break;
        }
    }
    fit.objective = obj;
    fit.log_likelihood = obj + total_penalty(theta, specs, L.penalty_n);
    fit.active_sets = active_sets_of(theta);
    fit.theta = std::move(theta);
    return fit;
}

void check_fit_inputs(const Dataset& data, std::size_t subset_size, std::size_t m, std::span<const PenaltySpec> specs,
                      const EmControls& controls) {
    if (m < 1) throw DomainError("EM: need at least one component");
    if (specs.size() != m) throw DomainError("EM: need one PenaltySpec per component");
    for (const auto& s : specs) s.validate();
    controls.validate();
    const std::size_t need = m * (data.predictors() + 2);
    if (subset_size < need) {
        throw DataError(fmt::format("EM: {} rows cannot fit {} components with {} predictors (need at least {})",
                                    subset_size, m, data.predictors(), need));
    }
}

}  // namespace

Responsibilities e_step(const Dataset& data, const MixtureParams& theta, std::span<const std::size_t> subset) {
    if (theta.dimension() != data.dimension()) throw DomainError("e_step: dimension mismatch");
    const Local L = gather(data, subset, std::nullopt);
    return e_step_local(L.rows, theta);
}

Vector m_step_proportions(const Matrix& r) {
    if (r.rows() < 1) throw DomainError("m_step_proportions: no rows");
    const Vector mass = r.colwise().sum().transpose() / static_cast<double>(r.rows());
    return project_proportions(mass);
}

Vector m_step_proportions(const Responsibilities& resp) { return m_step_proportions(resp.r); }

Vector m_step_beta(const Dataset& data, std::span<const std::size_t> subset, const Eigen::Ref<const Vector>& r_col,
                   double sigma2, const Eigen::Ref<const Vector>& beta_prev, const PenaltySpec& spec,
                   std::optional<std::size_t> penalty_n) {
    if (static_cast<std::size_t>(r_col.size()) != subset.size()) {
        throw DomainError("m_step_beta: weights must align with the subset");
    }
    if (static_cast<std::size_t>(beta_prev.size()) != data.dimension()) {
        throw DomainError("m_step_beta: beta_prev has the wrong length");
    }
    if (!(sigma2 > 0.0)) throw DomainError("m_step_beta: sigma2 must be positive");
    spec.validate();
    const Local L = gather(data, subset, penalty_n);
    return solve_beta(L.rows, r_col, sigma2, beta_prev, spec, L.penalty_n, true);
}

double m_step_sigma(const Dataset& data, std::span<const std::size_t> subset, const Eigen::Ref<const Vector>& r_col,
                    const Eigen::Ref<const Vector>& beta) {
    if (static_cast<std::size_t>(r_col.size()) != subset.size()) {
        throw DomainError("m_step_sigma: weights must align with the subset");
    }
    const Local L = gather(data, subset, std::nullopt);
    return sigma_local(L.rows, r_col, beta, L.variance_floor);
}

MixtureParams em_iteration(const Dataset& data, std::span<const std::size_t> subset, const MixtureParams& theta,
                           std::span<const PenaltySpec> specs, std::optional<std::size_t> penalty_n) {
    if (specs.size() != theta.components()) throw DomainError("em_iteration: need one PenaltySpec per component");
    if (theta.dimension() != data.dimension()) throw DomainError("em_iteration: dimension mismatch");
    const Local L = gather(data, subset, penalty_n);
    return m_step_local(L, theta, e_step_local(L.rows, theta).r, specs, true);
}

FitResult fit_penalized_fmr(const Dataset& data, std::span<const std::size_t> subset, std::size_t m,
                            std::span<const PenaltySpec> specs, const EmControls& controls,
                            const std::optional<MixtureParams>& init, std::optional<std::size_t> penalty_n) {
    check_fit_inputs(data, subset.size(), m, specs, controls);
    if (init) {
        if (init->components() != m || init->dimension() != data.dimension()) {
            throw DomainError("fit_penalized_fmr: init has the wrong shape");
        }
        init->validate();
    }
    if (!init && controls.n_starts == 0) throw DomainError("fit_penalized_fmr: no init and no random starts");
    const Local L = gather(data, subset, penalty_n);

    std::optional<FitResult> best;
    int failed = 0;
    auto consider = [&](FitResult&& fit, int index) {
        fit.start_index = index;
        if (!best || fit.objective > best->objective) best = std::move(fit);
    };
    if (init) {
        try {
            consider(run_em(L, *init, specs, controls), -1);
        } catch (const MonotonicityError&) {
            throw;
        } catch (const NumericalError&) {
            ++failed;
        }
    }
    for (int s = 0; s < controls.n_starts; ++s) {
        try {
            Rng rng = make_rng(controls.rng_seed, static_cast<std::uint64_t>(s));
            MixtureParams start = random_start(L, m, controls, rng);
            consider(run_em(L, std::move(start), specs, controls), s);
        } catch (const MonotonicityError&) {
            throw;
        } catch (const NumericalError&) {
            ++failed;
        }
    }
    if (!best) throw NumericalError("fit_penalized_fmr: every start failed");
    best->failed_starts = failed;
    return std::move(*best);
}

std::size_t degrees_of_freedom(const MixtureParams& theta) {
    const auto nonzero = static_cast<std::size_t>((theta.coefficients.array() != 0.0).count());
    const std::size_t m = theta.components();
    return nonzero + (m - 1) + m;
}

LambdaSelection select_lambda(const Dataset& data, std::span<const std::size_t> subset, std::size_t m,
                              const PenaltySpec& penalty, std::span<const double> grid, const EmControls& controls,
                              const std::optional<MixtureParams>& init, std::optional<std::size_t> penalty_n) {
    if (grid.empty()) throw DomainError("select_lambda: empty lambda grid");
    for (const double g : grid) {
        if (!(g >= 0.0) || !std::isfinite(g)) throw DomainError("select_lambda: lambda values must be finite and >= 0");
    }
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return grid[a] < grid[b]; });

    LambdaSelection out;
    out.grid.assign(grid.begin(), grid.end());
    out.bic.assign(grid.size(), std::numeric_limits<double>::infinity());
    const double log_n = std::log(static_cast<double>(subset.size()));
    std::optional<MixtureParams> warm = init;
    bool have_best = false;
    double best_bic = std::numeric_limits<double>::infinity();
    std::size_t last_error_index = grid.size();
    std::string last_error;
    for (const auto gi : order) {
        const auto specs = shared_penalty(penalty.with_lambda(grid[gi]), m);
        FitResult fit;
        try {
            fit = fit_penalized_fmr(data, subset, m, specs, controls, warm, penalty_n);
        } catch (const MonotonicityError&) {
            throw;
        } catch (const NumericalError& e) {
            last_error_index = gi;
            last_error = e.what();
            continue;
        }
        const double bic = -2.0 * fit.log_likelihood + static_cast<double>(degrees_of_freedom(fit.theta)) * log_n;
        out.bic[gi] = bic;
        warm = fit.theta;
        // Ascending order: '<=' hands ties to the larger lambda.
        if (!have_best || bic <= best_bic) {
            have_best = true;
            best_bic = bic;
            out.lambda = grid[gi];
            out.specs = specs;
            out.fit = std::move(fit);
        }
    }
    if (!have_best) {
        throw NumericalError(fmt::format("select_lambda: every grid value failed (lambda={}: {})",
                                         last_error_index < grid.size() ? grid[last_error_index] : 0.0, last_error));
    }
    return out;
}

}  // namespace trimfmr
