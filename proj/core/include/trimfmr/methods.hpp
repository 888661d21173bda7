#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trimfmr/alpha_select.hpp"
#include "trimfmr/em.hpp"
#include "trimfmr/penalty.hpp"
#include "trimfmr/trimmed.hpp"
#include "trimfmr/types.hpp"

namespace trimfmr {

enum class Estimator { Fmr, Trimmed };

// Point prediction of y at x from a fitted mixture.
enum class PredictionRule {
    MixtureMean,    // sum_j pi_j x'beta_j
    MaxProportion,  // x'beta_j of the component with the largest pi_j
};

/// A complete estimation recipe: estimator, penalty and tuning. Tags follow
/// ml / ms / mmcp (penalized mixture) and mtl / mts / mtmcp (trimmed).
struct MethodConfig {
    std::string tag = "mtl";
    Estimator estimator = Estimator::Trimmed;
    PenaltySpec penalty = PenaltySpec::lasso(0.0);
    std::vector<double> lambda_grid;
    TrimSpec trim;
    EmControls controls;
    PredictionRule prediction = PredictionRule::MixtureMean;
    // Trimmed only: choose alpha by select_alpha on the data being fitted
    // (penalty, lambda grid, trim and controls are taken from this config).
    std::optional<AlphaSelectConfig> alpha_search;
};

// ConfigError on unknown tags. Sets estimator and penalty family only.
MethodConfig method_from_tag(std::string_view tag);
std::string method_tag(Estimator estimator, PenaltyFamily family);

std::vector<double> default_lambda_grid();

struct MethodFit {
    MixtureParams theta;
    double lambda = 0.0;
    IndexSet retained;
    double objective = 0.0;
    std::vector<double> objective_trace;
};

// FMR: select_lambda on every row. Trimmed: fit_trimmed at method.trim.alpha.
MethodFit fit_method(const Dataset& data, std::size_t m, const MethodConfig& method);

double predict(const MixtureParams& theta, const Eigen::Ref<const Eigen::RowVectorXd>& x, PredictionRule rule);

}  // namespace trimfmr
