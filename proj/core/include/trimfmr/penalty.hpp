#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trimfmr/types.hpp"

namespace trimfmr {

enum class PenaltyFamily { Lasso, Scad, Mcp };

std::string_view to_string(PenaltyFamily family);
// Accepts "lasso", "scad", "mcp" (case-insensitive).
PenaltyFamily parse_penalty_family(std::string_view name);
double default_concavity(PenaltyFamily family);

/// One component's penalty. All penalties are scaled by sqrt(n):
///   Lasso  p(b)  = lambda sqrt(n) |b|
///   SCAD   p'(b) = lambda sqrt(n) 1{sqrt(n) b <= lambda}
///                  + sqrt(n) (a lambda - sqrt(n) b)_+ / (a - 1) 1{sqrt(n) b > lambda}
///   MCP    p'(b) = sqrt(n) (lambda - b / a) 1{sqrt(n) b <= a lambda}
/// so a lambda grid has to be chosen on the sqrt(n)-scaled axis.
struct PenaltySpec {
    PenaltyFamily family = PenaltyFamily::Lasso;
    double lambda = 0.0;
    double a = 3.7;

    static PenaltySpec lasso(double lambda);
    static PenaltySpec scad(double lambda, double a = 3.7);
    static PenaltySpec mcp(double lambda, double a = 3.0);
    static PenaltySpec make(PenaltyFamily family, double lambda);
    static PenaltySpec make(PenaltyFamily family, double lambda, double a);

    PenaltySpec with_lambda(double new_lambda) const;

    // lambda >= 0, a > 2 for SCAD, a > 1 for MCP.
    void validate() const;
};

double penalty_value(const PenaltySpec& spec, double beta, std::size_t n);

// beta >= 0; negative values from the MCP formula are clamped to zero.
double penalty_derivative(const PenaltySpec& spec, double beta, std::size_t n);

// p'(|beta0|) / |beta0|; DomainError when |beta0| < kZeroThreshold.
double lqa_weight(const PenaltySpec& spec, double beta0, std::size_t n);

// Sum of penalty_value over the slopes (rows 1..p) of every component.
double total_penalty(const MixtureParams& theta, std::span<const PenaltySpec> specs, std::size_t n);

std::vector<PenaltySpec> shared_penalty(const PenaltySpec& spec, std::size_t m);

}  // namespace trimfmr
