#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "trimfmr/alpha_select.hpp"
#include "trimfmr/em.hpp"
#include "trimfmr/methods.hpp"
#include "trimfmr/penalty.hpp"
#include "trimfmr/simulation.hpp"
#include "trimfmr/trimmed.hpp"

namespace trimfmr::app {

using Json = nlohmann::ordered_json;

struct CvSettings {
    std::optional<std::size_t> kfold;
    std::optional<std::size_t> mccv_d;
    std::size_t mccv_reps = 50;
    std::vector<std::string> methods{"ml", "mtl"};
    PredictionRule prediction = PredictionRule::MixtureMean;
    // Re-select alpha inside every training split (trimmed methods).
    bool refit_alpha = false;
};

struct StudySettings {
    std::vector<std::string> models{"model1"};
    std::vector<double> pi1{0.5};
    std::vector<std::string> rho{"independent"};
    std::vector<std::size_t> n{100, 200};
    std::vector<double> alpha0{0.01, 0.03, 0.05};
    std::size_t replications = 200;
    std::vector<std::string> methods{"ml", "mtl"};
};

/// Fully resolved settings of one run. Serialized verbatim into the manifest.
struct RunConfig {
    std::string command;
    std::string data;
    std::string response;
    std::size_t m = 2;
    PenaltyFamily penalty = PenaltyFamily::Lasso;
    std::optional<double> a;
    std::optional<double> lambda;
    std::vector<double> lambda_grid = default_lambda_grid();
    double alpha = 0.05;
    bool select_alpha = false;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::string out_dir = "out";

    EmControls em;
    TrimSpec trim;
    AlphaSelectConfig alpha_select;
    CvSettings cv;
    StudySettings study;

    PenaltySpec penalty_spec() const;
    // lambda_grid, or {lambda} when a single value is fixed.
    std::vector<double> effective_lambda_grid() const;
    EmControls em_controls() const;  // em with rng_seed = seed
    TrimSpec trim_spec(double alpha_value) const;
    AlphaSelectConfig alpha_config() const;
    MethodConfig method(const std::string& tag) const;
    StudyConfig study_config() const;
    void validate() const;
};

Json to_json(const RunConfig& cfg);
// Unknown keys and malformed values raise ConfigError naming the field.
RunConfig from_json(const Json& j);

/// Resolution order, lowest first: built-in defaults, TRIMFMR_THREADS,
/// command-line flags, config file.
RunConfig resolve_config(const Json& flags, const std::optional<std::string>& config_path,
                         const char* threads_env);

Json load_json_file(const std::string& path);

}  // namespace trimfmr::app
