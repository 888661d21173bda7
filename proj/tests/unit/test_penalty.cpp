#include <doctest.h>

#include <cmath>
#include <random>

#include "trimfmr/error.hpp"
#include "trimfmr/penalty.hpp"

using namespace trimfmr;

TEST_CASE("penalty values") {
    for (const auto& spec : {PenaltySpec::lasso(0.7), PenaltySpec::scad(0.7), PenaltySpec::mcp(0.7)}) {
        CHECK(penalty_value(spec, 0.0, 50) == 0.0);
    }
    CHECK(penalty_value(PenaltySpec::lasso(0.5), 2.0, 100) == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(penalty_value(PenaltySpec::lasso(0.5), -2.0, 100) == doctest::Approx(10.0).epsilon(1e-15));
    // oracle: quadrature of the derivative (tests/oracles/oracles.py)
    CHECK(penalty_value(PenaltySpec::scad(1.0, 3.7), 0.3, 4) == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(penalty_value(PenaltySpec::scad(0.8, 3.7), 0.9, 9) == doctest::Approx(1.4914814814814816).epsilon(1e-14));
    CHECK(penalty_value(PenaltySpec::mcp(0.8, 2.5), 0.5, 9) == doctest::Approx(1.05).epsilon(1e-14));
    // Flat tails.
    CHECK(penalty_value(PenaltySpec::scad(1.0, 3.7), 50.0, 1) == doctest::Approx(4.7 / 2.0).epsilon(1e-15));
    CHECK(penalty_value(PenaltySpec::mcp(1.0, 3.0), 50.0, 1) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("penalty derivatives") {
    CHECK(penalty_derivative(PenaltySpec::lasso(0.5), 0.1, 100) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(penalty_derivative(PenaltySpec::lasso(0.5), 7.0, 100) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(penalty_derivative(PenaltySpec::scad(1.0, 3.7), 5.0, 1) == 0.0);
    CHECK(penalty_derivative(PenaltySpec::mcp(1.0, 3.0), 0.0, 1) == 1.0);
    CHECK(penalty_derivative(PenaltySpec::scad(1.0, 3.7), 0.0, 1) == 1.0);
}

TEST_CASE("LQA weights") {
    CHECK(lqa_weight(PenaltySpec::lasso(1.0), 2.0, 1) == 0.5);
    CHECK(lqa_weight(PenaltySpec::lasso(1.0), -2.0, 1) == 0.5);
    CHECK(lqa_weight(PenaltySpec::scad(1.0, 3.7), 10.0, 1) == 0.0);
    CHECK(lqa_weight(PenaltySpec::mcp(1.0, 3.0), 1.5, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(lqa_weight(PenaltySpec::lasso(1.0), 5e-7, 1), DomainError);
    CHECK_THROWS_AS(lqa_weight(PenaltySpec::lasso(1.0), 0.0, 1), DomainError);
}

TEST_CASE("penalty shape properties") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int t = 0; t < 2000; ++t) {
        const double lam = u(rng);
        const std::size_t n = 1 + static_cast<std::size_t>(u(rng) * 60);
        const PenaltySpec specs[] = {PenaltySpec::lasso(lam), PenaltySpec::scad(lam, 2.0 + 0.01 + u(rng)),
                                     PenaltySpec::mcp(lam, 1.0 + 0.01 + u(rng))};
        const double b1 = u(rng);
        const double b2 = b1 + u(rng);
        for (const auto& s : specs) {
            const double v1 = penalty_value(s, b1, n);
            const double v2 = penalty_value(s, b2, n);
            CHECK(v1 >= 0.0);
            CHECK(v2 >= v1 - 1e-12);
            CHECK(penalty_value(s, -b1, n) == v1);
            CHECK(penalty_derivative(s, b1, n) >= 0.0);
            CHECK(penalty_derivative(s, b2, n) <= penalty_derivative(s, b1, n));
            // Concave in |b|: the value lies above the chord from 0.
            CHECK(v1 * b2 >= v2 * b1 - 1e-9 * (1.0 + v2));
        }
    }
}

TEST_CASE("penalty spec validation and parsing") {
    CHECK_THROWS_AS(PenaltySpec::scad(1.0, 2.0).validate(), DomainError);
    CHECK_THROWS_AS(PenaltySpec::mcp(1.0, 1.0).validate(), DomainError);
    CHECK_THROWS_AS(PenaltySpec::lasso(-0.1).validate(), DomainError);
    CHECK_NOTHROW(PenaltySpec::scad(1.0, 2.01).validate());
    CHECK(parse_penalty_family("SCAD") == PenaltyFamily::Scad);
    CHECK(to_string(PenaltyFamily::Mcp) == "mcp");
    CHECK_THROWS_AS(parse_penalty_family("ridge"), ConfigError);
    CHECK(PenaltySpec::make(PenaltyFamily::Scad, 0.2).a == 3.7);
    CHECK(PenaltySpec::lasso(0.3).with_lambda(0.9).lambda == 0.9);
}

TEST_CASE("total penalty skips intercepts") {
    Matrix beta(3, 2);
    beta << 100.0, -100.0, 1.0, 0.0, -2.0, 0.5;
    const MixtureParams theta(Vector::Constant(2, 0.5), beta, Vector::Ones(2));
    const auto specs = shared_penalty(PenaltySpec::lasso(1.0), 2);
    CHECK(total_penalty(theta, specs, 4) == doctest::Approx(2.0 * 3.5).epsilon(1e-15));
    CHECK_THROWS_AS(total_penalty(theta, shared_penalty(PenaltySpec::lasso(1.0), 1), 4), DomainError);
}
