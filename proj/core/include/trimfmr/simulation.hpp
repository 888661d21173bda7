#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "trimfmr/methods.hpp"
#include "trimfmr/metrics.hpp"
#include "trimfmr/rng.hpp"
#include "trimfmr/types.hpp"

namespace trimfmr {

enum class ModelId { Model1, Model2 };
enum class Correlation { Independent, ArHalf };  // rho_ij = 0 or 0.5^|i-j|

std::string to_string(ModelId id);
std::string to_string(Correlation rho);
ModelId parse_model_id(const std::string& name);
Correlation parse_correlation(const std::string& name);

/// Two-component mixture of regressions with p = 4 normal covariates.
struct ModelSpec {
    ModelId model = ModelId::Model1;
    double pi1 = 0.5;
    Correlation rho = Correlation::Independent;
    std::size_t n = 100;

    MixtureParams truth() const;
    Matrix covariance() const;  // of the 4 covariates
    Matrix exx() const;         // blockdiag(1, covariance())
    void validate() const;
};

struct ContaminationSpec {
    double alpha0 = 0.0;
    double shift_low = 7.0;
    double shift_high = 10.0;
    // floor(alpha0 * n).
    std::size_t count(std::size_t n) const;
    void validate() const;
};

// Rows with Truth attached (theta, exx, labels, no contamination).
Dataset generate_dataset(const ModelSpec& spec, Rng& rng);

// Adds U(shift_low, shift_high) to floor(alpha0 n) distinct random responses
// and flags them. Every other value is copied unchanged.
Dataset contaminate(const Dataset& data, const ContaminationSpec& spec, Rng& rng);

struct StudyCell {
    ModelSpec model;
    ContaminationSpec contamination;
};

struct StudyConfig {
    std::vector<ModelId> models{ModelId::Model1};
    std::vector<double> pi1{0.5};
    std::vector<Correlation> rho{Correlation::Independent};
    std::vector<std::size_t> n{100, 200};
    std::vector<double> alpha0{0.01, 0.03, 0.05};
    std::vector<MethodConfig> methods;
    std::size_t replications = 200;
    std::uint64_t master_seed = 1;
    std::size_t threads = 1;

    // Cartesian product in the order model, pi1, rho, n, alpha0.
    std::vector<StudyCell> cells() const;
    void validate() const;
};

struct StudyRow {
    std::size_t cell = 0;
    StudyCell setting;
    std::string method;
    Estimator estimator = Estimator::Fmr;
    PenaltyFamily family = PenaltyFamily::Lasso;
    CellSummary summary;
};

struct StudySummary {
    std::vector<StudyRow> rows;  // cell-major, methods in config order
};

// Seed of replication `rep` in cell `cell`.
std::uint64_t replication_seed(std::uint64_t master, std::size_t cell, std::size_t rep);

// Scores one replication of every method. A failed method yields no score.
struct ReplicationOutcome {
    std::vector<bool> ok;
    std::vector<ReplicationScore> scores;
};
ReplicationOutcome run_replication(const StudyCell& cell, std::span<const MethodConfig> methods, std::uint64_t seed);

using StudyProgress = std::function<void(std::size_t done, std::size_t total)>;
StudySummary run_study(const StudyConfig& cfg, const StudyProgress& progress = {});

// One row per (cell, method) with every statistic.
void write_summary_csv(std::ostream& out, const StudySummary& summary);

struct StudyTable {
    std::string name;  // e.g. table_model1_pi0.5_rho0.csv
    std::string csv;
};

/// Table layout grouped by (model, pi1, rho): rows are (contamination,
/// penalty, n) and columns hold the FMR and trimmed statistics side by side.
std::vector<StudyTable> study_tables(const StudySummary& summary);

}  // namespace trimfmr
