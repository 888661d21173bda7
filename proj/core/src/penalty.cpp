#include "trimfmr/penalty.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "trimfmr/error.hpp"

namespace trimfmr {

std::string_view to_string(PenaltyFamily family) {
    switch (family) {
        case PenaltyFamily::Lasso: return "lasso";
        case PenaltyFamily::Scad: return "scad";
        case PenaltyFamily::Mcp: return "mcp";
    }
    return "unknown";
}

PenaltyFamily parse_penalty_family(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "lasso") return PenaltyFamily::Lasso;
    if (lower == "scad") return PenaltyFamily::Scad;
    if (lower == "mcp") return PenaltyFamily::Mcp;
    throw ConfigError("unknown penalty family '" + std::string(name) + "' (expected lasso, scad or mcp)");
}

double default_concavity(PenaltyFamily family) {
    switch (family) {
        case PenaltyFamily::Scad: return 3.7;
        case PenaltyFamily::Mcp: return 3.0;
        case PenaltyFamily::Lasso: break;
    }
    return 0.0;
}

PenaltySpec PenaltySpec::lasso(double lambda) { return {PenaltyFamily::Lasso, lambda, 0.0}; }
PenaltySpec PenaltySpec::scad(double lambda, double a) { return {PenaltyFamily::Scad, lambda, a}; }
PenaltySpec PenaltySpec::mcp(double lambda, double a) { return {PenaltyFamily::Mcp, lambda, a}; }

PenaltySpec PenaltySpec::make(PenaltyFamily family, double lambda) {
    return {family, lambda, default_concavity(family)};
}

PenaltySpec PenaltySpec::make(PenaltyFamily family, double lambda, double a) {
    return {family, lambda, a};
}

PenaltySpec PenaltySpec::with_lambda(double new_lambda) const {
    PenaltySpec out = *this;
    out.lambda = new_lambda;
    return out;
}

void PenaltySpec::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("penalty: lambda must be finite and >= 0");
    if (family == PenaltyFamily::Scad && !(a > 2.0)) throw DomainError("penalty: SCAD requires a > 2");
    if (family == PenaltyFamily::Mcp && !(a > 1.0)) throw DomainError("penalty: MCP requires a > 1");
}

double penalty_value(const PenaltySpec& spec, double beta, std::size_t n) {
    const double rn = std::sqrt(static_cast<double>(n));
    const double b = std::abs(beta);
    const double lam = spec.lambda;
    if (b == 0.0 || lam == 0.0) return 0.0;
    switch (spec.family) {
        case PenaltyFamily::Lasso:
            return lam * rn * b;
        case PenaltyFamily::Scad: {
            // In t = sqrt(n) b the value is the usual SCAD integral.
            const double t = rn * b;
            const double a = spec.a;
            if (t <= lam) return lam * t;
            if (t <= a * lam) return (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0));
            return lam * lam * (a + 1.0) / 2.0;
        }
        case PenaltyFamily::Mcp: {
            // p' = sqrt(n)(lambda - b/a) up to b = a lambda / sqrt(n), zero after.
            const double cut = spec.a * lam / rn;
            const double u = std::min(b, cut);
            return rn * (lam * u - u * u / (2.0 * spec.a));
        }
    }
    return 0.0;
}

double penalty_derivative(const PenaltySpec& spec, double beta, std::size_t n) {
    const double rn = std::sqrt(static_cast<double>(n));
    const double lam = spec.lambda;
    switch (spec.family) {
        case PenaltyFamily::Lasso:
            return lam * rn;
        case PenaltyFamily::Scad: {
            const double t = rn * beta;
            if (t <= lam) return lam * rn;
            return rn * std::max(spec.a * lam - t, 0.0) / (spec.a - 1.0);
        }
        case PenaltyFamily::Mcp: {
            if (rn * beta <= spec.a * lam) return std::max(rn * (lam - beta / spec.a), 0.0);
            return 0.0;
        }
    }
    return 0.0;
}

double lqa_weight(const PenaltySpec& spec, double beta0, std::size_t n) {
    const double b = std::abs(beta0);
    if (b < kZeroThreshold) {
        throw DomainError("lqa_weight: coefficient must be frozen at zero, not approximated");
    }
    return penalty_derivative(spec, b, n) / b;
}

double total_penalty(const MixtureParams& theta, std::span<const PenaltySpec> specs, std::size_t n) {
    const auto m = theta.components();
    if (specs.size() != m) throw DomainError("total_penalty: need one PenaltySpec per component");
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const auto col = theta.coefficients.col(static_cast<Eigen::Index>(j));
        for (Eigen::Index k = 1; k < col.size(); ++k) total += penalty_value(specs[j], col(k), n);
    }
    return total;
}

std::vector<PenaltySpec> shared_penalty(const PenaltySpec& spec, std::size_t m) {
    return std::vector<PenaltySpec>(m, spec);
}

}  // namespace trimfmr
