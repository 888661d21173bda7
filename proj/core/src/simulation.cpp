#include "trimfmr/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include <Eigen/Cholesky>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "trimfmr/error.hpp"
#include "trimfmr/parallel.hpp"

namespace trimfmr {

namespace {

constexpr std::size_t kPredictors = 4;

}  // namespace

std::string to_string(ModelId id) { return id == ModelId::Model1 ? "model1" : "model2"; }

std::string to_string(Correlation rho) { return rho == Correlation::Independent ? "independent" : "ar_half"; }

ModelId parse_model_id(const std::string& name) {
    if (name == "model1" || name == "Model1" || name == "1") return ModelId::Model1;
    if (name == "model2" || name == "Model2" || name == "2") return ModelId::Model2;
    throw ConfigError("model_id: unknown model '" + name + "' (expected model1 or model2)");
}

Correlation parse_correlation(const std::string& name) {
    if (name == "independent" || name == "0") return Correlation::Independent;
    if (name == "ar_half" || name == "0.5") return Correlation::ArHalf;
    throw ConfigError("rho: unknown correlation '" + name + "' (expected independent or ar_half)");
}

MixtureParams ModelSpec::truth() const {
    Matrix beta(kPredictors + 1, 2);
    if (model == ModelId::Model1) {
        beta.col(0) << 1, 0, 0, 3, 0;
        beta.col(1) << -1, 2, 0, 0, 3;
    } else {
        beta.col(0) << 1, 0.6, 0, 3, 0;
        beta.col(1) << -1, 0, 0, 4, 0.7;
    }
    return MixtureParams(Eigen::Vector2d(pi1, 1.0 - pi1), beta, Eigen::Vector2d(1.0, 1.0));
}

Matrix ModelSpec::covariance() const {
    Matrix sigma = Matrix::Identity(kPredictors, kPredictors);
    if (rho == Correlation::ArHalf) {
        for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
            for (Eigen::Index k = 0; k < sigma.cols(); ++k) sigma(i, k) = std::pow(0.5, std::abs(i - k));
        }
    }
    return sigma;
}

Matrix ModelSpec::exx() const {
    Matrix e = Matrix::Zero(kPredictors + 1, kPredictors + 1);
    e(0, 0) = 1.0;
    e.bottomRightCorner(kPredictors, kPredictors) = covariance();
    return e;
}

void ModelSpec::validate() const {
    if (!(pi1 > 0.0 && pi1 < 1.0)) throw ConfigError("pi1 must lie in (0, 1)");
    if (n < 1) throw ConfigError("n must be >= 1");
}

std::size_t ContaminationSpec::count(std::size_t n) const {
    return static_cast<std::size_t>(std::floor(alpha0 * static_cast<double>(n) + 1e-9));
}

void ContaminationSpec::validate() const {
    if (!(alpha0 >= 0.0 && alpha0 < 0.5)) throw ConfigError("alpha0 must lie in [0, 0.5)");
    if (!(shift_low <= shift_high)) throw ConfigError("contamination shift_low must not exceed shift_high");
}

Dataset generate_dataset(const ModelSpec& spec, Rng& rng) {
    spec.validate();
    const MixtureParams theta = spec.truth();
    const Matrix chol = spec.covariance().llt().matrixL();
    const auto n = static_cast<Eigen::Index>(spec.n);
    std::bernoulli_distribution first(spec.pi1);
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix x(n, kPredictors + 1);
    Vector y(n);
    std::vector<int> labels(spec.n);
    Vector z(kPredictors);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int j = first(rng) ? 0 : 1;
        for (auto& v : z) v = normal(rng);
        x(i, 0) = 1.0;
        x.row(i).tail(kPredictors) = (chol * z).transpose();
        y(i) = x.row(i).dot(theta.coefficients.col(j)) + std::sqrt(theta.variances(j)) * normal(rng);
        labels[static_cast<std::size_t>(i)] = j;
    }
    Truth truth{theta, spec.exx(), std::vector<std::uint8_t>(spec.n, 0), std::move(labels)};
    return Dataset(std::move(y), std::move(x), std::move(truth));
}

Dataset contaminate(const Dataset& data, const ContaminationSpec& spec, Rng& rng) {
    spec.validate();
    const std::size_t n = data.rows();
    const std::size_t k = spec.count(n);
    if (k == 0) return data;
    IndexSet idx = all_rows(n);
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::uniform_real_distribution<double> shift(spec.shift_low, spec.shift_high);
    Vector y = data.y();
    std::optional<Truth> truth = data.truth();
    if (truth && truth->contaminated.size() != n) truth->contaminated.assign(n, 0);
    for (std::size_t i = 0; i < k; ++i) {
        y(static_cast<Eigen::Index>(idx[i])) += shift(rng);
        if (truth) truth->contaminated[idx[i]] = 1;
    }
    return Dataset(std::move(y), data.x(), std::move(truth));
}

std::vector<StudyCell> StudyConfig::cells() const {
    std::vector<StudyCell> out;
    for (const auto model : models) {
        for (const auto p : pi1) {
            for (const auto r : rho) {
                for (const auto size : n) {
                    for (const auto a : alpha0) {
                        out.push_back({ModelSpec{model, p, r, size}, ContaminationSpec{a}});
                    }
                }
            }
        }
    }
    return out;
}

void StudyConfig::validate() const {
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (methods.empty()) throw ConfigError("methods: at least one method is required");
    if (models.empty() || pi1.empty() || rho.empty() || n.empty() || alpha0.empty()) {
        throw ConfigError("study grid: models, pi1, rho, n and alpha0 must all be non-empty");
    }
    for (const auto& c : cells()) {
        c.model.validate();
        c.contamination.validate();
    }
    for (const auto& m : methods) {
        m.penalty.validate();
        m.trim.validate();
        m.controls.validate();
    }
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t cell, std::size_t rep) {
    return derive_seed(master, cell, rep);
}

ReplicationOutcome run_replication(const StudyCell& cell, std::span<const MethodConfig> methods, std::uint64_t seed) {
    Rng rng(seed);
    const Dataset clean = generate_dataset(cell.model, rng);
    const Dataset data = contaminate(clean, cell.contamination, rng);
    const Truth& truth = *data.truth();

    ReplicationOutcome out;
    out.ok.assign(methods.size(), false);
    out.scores.resize(methods.size());
    for (std::size_t k = 0; k < methods.size(); ++k) {
        MethodConfig method = methods[k];
        method.controls.rng_seed = derive_seed(seed, k + 1);
        try {
            const MethodFit fit = fit_method(data, truth.theta.components(), method);
            const MixtureParams aligned = permute_components(fit.theta, align_components(fit.theta, truth.theta));
            out.scores[k].zeros = count_zero_pattern(aligned.coefficients, truth.theta.coefficients);
            out.scores[k].model_errors = model_error(aligned.coefficients, truth.theta.coefficients, truth.exx);
            out.ok[k] = true;
        } catch (const MonotonicityError&) {
            throw;
        } catch (const NumericalError&) {
        } catch (const DataError&) {
        }
    }
    return out;
}

StudySummary run_study(const StudyConfig& cfg, const StudyProgress& progress) {
    cfg.validate();
    const auto cells = cfg.cells();
    const std::size_t reps = cfg.replications;
    const std::size_t total = cells.size() * reps;
    std::vector<ReplicationOutcome> outcomes(total);
    std::atomic<std::size_t> done{0};
    parallel_for(total, cfg.threads, [&](std::size_t task) {
        const std::size_t c = task / reps;
        const std::size_t r = task % reps;
        outcomes[task] = run_replication(cells[c], cfg.methods, replication_seed(cfg.master_seed, c, r));
        const std::size_t finished = ++done;
        if (progress) progress(finished, total);
    });

    StudySummary summary;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
            std::vector<ReplicationScore> scores;
            std::size_t failures = 0;
            for (std::size_t r = 0; r < reps; ++r) {
                const auto& o = outcomes[c * reps + r];
                if (o.ok[k]) scores.push_back(o.scores[k]);
                else ++failures;
            }
            StudyRow row;
            row.cell = c;
            row.setting = cells[c];
            row.method = cfg.methods[k].tag;
            row.estimator = cfg.methods[k].estimator;
            row.family = cfg.methods[k].penalty.family;
            row.summary = aggregate_replications(scores, failures);
            summary.rows.push_back(std::move(row));
        }
    }
    return summary;
}

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "NA";
    return fmt::format("{:.6f}", v);
}

std::string stats_columns(const CellSummary& s) {
    const auto at = [](const std::vector<double>& v, std::size_t j) {
        return j < v.size() ? v[j] : std::numeric_limits<double>::quiet_NaN();
    };
    std::string out;
    for (std::size_t j = 0; j < 2; ++j) out += "," + num(at(s.mean_correct, j));
    for (std::size_t j = 0; j < 2; ++j) out += "," + num(at(s.mean_incorrect, j));
    for (std::size_t j = 0; j < 2; ++j) out += "," + num(at(s.median_model_error, j));
    for (std::size_t j = 0; j < 2; ++j) out += "," + num(at(s.accuracy, j));
    out += fmt::format(",{},{}", s.failures, s.replications);
    return out;
}

constexpr const char* kStatHeader =
    "correct_c1,correct_c2,incorrect_c1,incorrect_c2,mme_c1,mme_c2,accuracy_c1,accuracy_c2,failures,replications";

}  // namespace

void write_summary_csv(std::ostream& out, const StudySummary& summary) {
    out << "cell,model,pi1,rho,n,alpha0,method,estimator,penalty," << kStatHeader << "\n";
    for (const auto& r : summary.rows) {
        const auto& m = r.setting.model;
        out << fmt::format("{},{},{},{},{},{},{},{},{}", r.cell, to_string(m.model), m.pi1, to_string(m.rho), m.n,
                           r.setting.contamination.alpha0, r.method,
                           r.estimator == Estimator::Fmr ? "fmr" : "trimmed", to_string(r.family))
            << stats_columns(r.summary) << "\n";
    }
}

std::vector<StudyTable> study_tables(const StudySummary& summary) {
    using GroupKey = std::tuple<int, double, int>;
    using RowKey = std::tuple<double, int, std::size_t>;  // alpha0, penalty, n
    struct Pair {
        const StudyRow* fmr = nullptr;
        const StudyRow* trim = nullptr;
    };
    std::map<GroupKey, std::map<RowKey, Pair>> groups;
    for (const auto& r : summary.rows) {
        const auto& m = r.setting.model;
        const GroupKey g{static_cast<int>(m.model), m.pi1, static_cast<int>(m.rho)};
        const RowKey k{r.setting.contamination.alpha0, static_cast<int>(r.family), m.n};
        auto& slot = groups[g][k];
        (r.estimator == Estimator::Fmr ? slot.fmr : slot.trim) = &r;
    }
    std::vector<StudyTable> tables;
    for (const auto& [g, rows] : groups) {
        const auto model = static_cast<ModelId>(std::get<0>(g));
        const auto rho = static_cast<Correlation>(std::get<2>(g));
        std::ostringstream csv;
        std::string fmr_header;
        std::string trim_header;
        std::istringstream cols(kStatHeader);
        for (std::string c; std::getline(cols, c, ',');) {
            fmr_header += ",fmr_" + c;
            trim_header += ",trim_" + c;
        }
        csv << "alpha0,penalty,n" << fmr_header << trim_header << "\n";
        const std::string blank = ",NA,NA,NA,NA,NA,NA,NA,NA,NA,NA";
        for (const auto& [k, pair] : rows) {
            csv << fmt::format("{},{},{}", std::get<0>(k), to_string(static_cast<PenaltyFamily>(std::get<1>(k))),
                               std::get<2>(k));
            csv << (pair.fmr ? stats_columns(pair.fmr->summary) : blank);
            csv << (pair.trim ? stats_columns(pair.trim->summary) : blank);
            csv << "\n";
        }
        tables.push_back({fmt::format("table_{}_pi{}_{}.csv", to_string(model), std::get<1>(g), to_string(rho)),
                          csv.str()});
    }
    return tables;
}

}  // namespace trimfmr
