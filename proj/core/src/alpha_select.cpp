#include "trimfmr/alpha_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "trimfmr/error.hpp"
#include "trimfmr/metrics.hpp"
#include "trimfmr/parallel.hpp"

namespace trimfmr {

namespace {

constexpr std::uint64_t kBootStream = 0x626f6f74;  // "boot"

}  // namespace

std::string to_string(DispersionCriterion c) {
    return c == DispersionCriterion::MaxDiagonal ? "max_diagonal" : "max_eigenvalue";
}

DispersionCriterion parse_dispersion_criterion(const std::string& name) {
    if (name == "max_diagonal" || name == "diag" || name == "diagonal") return DispersionCriterion::MaxDiagonal;
    if (name == "max_eigenvalue" || name == "eig" || name == "eigenvalue") return DispersionCriterion::MaxEigenvalue;
    throw ConfigError("unknown dispersion criterion '" + name + "' (expected max_diagonal or max_eigenvalue)");
}

std::vector<double> default_alpha_grid() {
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) grid.push_back(k / 100.0);
    return grid;
}

void AlphaSelectConfig::validate() const {
    if (grid.empty()) throw DomainError("select_alpha: alpha grid is empty");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] >= 0.0 && grid[k] < 0.5)) throw DomainError("select_alpha: alpha values must lie in [0, 0.5)");
        if (k > 0 && !(grid[k] > grid[k - 1])) throw DomainError("select_alpha: alpha grid must be strictly increasing");
    }
    if (n_boot < 2) throw DomainError("select_alpha: n_boot must be >= 2");
    if (boot_starts < 0) throw DomainError("select_alpha: boot_starts must be >= 0");
    if (!(max_failure_share >= 0.0 && max_failure_share < 1.0)) {
        throw DomainError("select_alpha: max_failure_share must lie in [0, 1)");
    }
    penalty.validate();
    controls.validate();
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng) {
    if (n < 1) throw DomainError("bootstrap_resample: empty dataset");
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

Dataset bootstrap_resample(const Dataset& data, Rng& rng) {
    const auto idx = bootstrap_indices(data.rows(), rng);
    return data.take(idx);
}

Matrix sample_covariance(const Matrix& samples) {
    if (samples.rows() < 2) throw DomainError("sample_covariance: need at least two samples");
    const Eigen::RowVectorXd mean = samples.colwise().mean();
    const Matrix centered = samples.rowwise() - mean;
    Matrix cov = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
    return (cov + cov.transpose()) / 2.0;
}

double max_diagonal(std::span<const Matrix> covariances) {
    double best = 0.0;
    for (const auto& c : covariances) best = std::max(best, c.diagonal().maxCoeff());
    return best;
}

double max_eigenvalue(std::span<const Matrix> covariances) {
    double best = 0.0;
    for (const auto& c : covariances) {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(c, Eigen::EigenvaluesOnly);
        best = std::max(best, solver.eigenvalues().maxCoeff());
    }
    return best;
}

AlphaSelectReport select_alpha(const Dataset& data, std::size_t m, const AlphaSelectConfig& cfg) {
    cfg.validate();
    const std::size_t na = cfg.grid.size();
    const std::size_t nb = cfg.n_boot;
    const std::size_t first = cfg.include_intercepts ? 0 : 1;
    const auto width = static_cast<Eigen::Index>(data.dimension() - first);
    if (width < 1) throw DomainError("select_alpha: no coefficients left to score");

    AlphaSelectReport report;
    report.criterion = cfg.criterion;
    report.scores.resize(na);

    // Reference fits on the original data.
    std::vector<std::vector<double>> fixed_grid(na);
    parallel_for(na, cfg.threads, [&](std::size_t a) {
        TrimSpec trim = cfg.trim;
        trim.alpha = cfg.grid[a];
        const TrimmedFit fit = fit_trimmed(data, m, cfg.penalty, trim, cfg.controls, cfg.lambda_grid);
        report.scores[a].alpha = cfg.grid[a];
        report.scores[a].lambda = fit.lambda;
        report.scores[a].reference = fit.theta;
        report.scores[a].reference_objective = fit.objective;
        fixed_grid[a] = cfg.refit_lambda ? cfg.lambda_grid : std::vector<double>{fit.lambda};
    });

    // Resample b is shared by every alpha so the scores are compared on the
    // same bootstrap samples.
    std::vector<std::optional<MixtureParams>> fits(na * nb);
    parallel_for(na * nb, cfg.threads, [&](std::size_t task) {
        const std::size_t a = task / nb;
        const std::size_t b = task % nb;
        Rng rng = make_rng(cfg.rng_seed, kBootStream, b);
        const Dataset sample = bootstrap_resample(data, rng);
        TrimSpec trim = cfg.trim;
        trim.alpha = cfg.grid[a];
        EmControls controls = cfg.controls;
        controls.n_starts = cfg.boot_starts;
        controls.rng_seed = derive_seed(cfg.rng_seed, kBootStream + 1, b);
        const MixtureParams& ref = report.scores[a].reference;
        try {
            const TrimmedFit fit = fit_trimmed(sample, m, cfg.penalty, trim, controls, fixed_grid[a], ref);
            fits[task] = permute_components(fit.theta, align_components(fit.theta, ref));
        } catch (const MonotonicityError&) {
            throw;
        } catch (const NumericalError&) {
        } catch (const DataError&) {
        }
    });

    for (std::size_t a = 0; a < na; ++a) {
        AlphaScore& s = report.scores[a];
        std::vector<const MixtureParams*> ok;
        for (std::size_t b = 0; b < nb; ++b) {
            if (fits[a * nb + b]) ok.push_back(&*fits[a * nb + b]);
        }
        s.successes = ok.size();
        s.failures = nb - ok.size();
        s.disqualified = static_cast<double>(s.failures) > cfg.max_failure_share * static_cast<double>(nb) ||
                         s.successes < 2;
        if (s.successes < 2) continue;
        for (std::size_t j = 0; j < m; ++j) {
            Matrix samples(static_cast<Eigen::Index>(ok.size()), width);
            for (std::size_t r = 0; r < ok.size(); ++r) {
                samples.row(static_cast<Eigen::Index>(r)) =
                    ok[r]->coefficients.col(static_cast<Eigen::Index>(j)).tail(width).transpose();
            }
            s.covariances.push_back(sample_covariance(samples));
        }
        s.score_diag = max_diagonal(s.covariances);
        s.score_eig = max_eigenvalue(s.covariances);
    }
    report.chosen_alpha = rescore(report, cfg.criterion);
    return report;
}

double rescore(const AlphaSelectReport& report, DispersionCriterion criterion) {
    double best = std::numeric_limits<double>::infinity();
    std::optional<double> chosen;
    for (const auto& s : report.scores) {
        if (s.disqualified) continue;
        const double score = criterion == DispersionCriterion::MaxDiagonal ? s.score_diag : s.score_eig;
        if (score < best) {
            best = score;
            chosen = s.alpha;
        }
    }
    if (!chosen) throw NumericalError("select_alpha: every alpha was disqualified by failed bootstrap fits");
    return *chosen;
}

void write_alpha_report_csv(std::ostream& out, const AlphaSelectReport& report) {
    out << "alpha,score_diag,score_eig,failures\n";
    for (const auto& s : report.scores) {
        if (s.disqualified && s.covariances.empty()) {
            fmt::print(out, "{},NA,NA,{}\n", s.alpha, s.failures);
        } else {
            fmt::print(out, "{},{},{},{}\n", s.alpha, s.score_diag, s.score_eig, s.failures);
        }
    }
}

}  // namespace trimfmr
