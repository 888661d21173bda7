#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "trimfmr/error.hpp"
#include "trimfmr/metrics.hpp"
#include "trimfmr/simulation.hpp"

using namespace trimfmr;

namespace {

MixtureParams three_components() {
    Matrix beta(2, 3);
    beta << 1.0, -2.0, 5.0, 0.5, 3.0, -1.0;
    return MixtureParams(Vector::Constant(3, 1.0 / 3.0), beta, Vector::Ones(3));
}

}  // namespace

TEST_CASE("alignment") {
    const MixtureParams ref = three_components();
    CHECK(align_components(ref, ref) == Permutation{0, 1, 2});
    const MixtureParams swapped = permute_components(ref, {2, 0, 1});
    const Permutation back = align_components(swapped, ref);
    CHECK(permute_components(swapped, back).flatten() == ref.flatten());
}

TEST_CASE("alignment matches brute force on noisy fixtures") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> noise(0.0, 1.5);
    const MixtureParams ref = three_components();
    for (int t = 0; t < 200; ++t) {
        MixtureParams est = ref;
        for (auto& v : est.coefficients.reshaped()) v += noise(rng);
        Permutation p{0, 1, 2};
        double best = 1e300;
        do {
            double cost = 0.0;
            for (std::size_t j = 0; j < 3; ++j) {
                cost += (est.coefficients.col(static_cast<Eigen::Index>(p[j])) -
                         ref.coefficients.col(static_cast<Eigen::Index>(j))).squaredNorm();
            }
            best = std::min(best, cost);
        } while (std::next_permutation(p.begin(), p.end()));
        const MixtureParams aligned = permute_components(est, align_components(est, ref));
        CHECK((aligned.coefficients - ref.coefficients).colwise().squaredNorm().sum() ==
              doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("zero pattern counts") {
    Matrix truth(5, 1);
    truth << 1.0, 0.0, 0.0, 3.0, 0.0;
    const auto exact = count_zero_pattern(truth, truth);
    CHECK(exact.correct_zeros[0] == 3);
    CHECK(exact.incorrect_zeros[0] == 0);
    CHECK(exact.exact_model[0]);

    const auto zeros = count_zero_pattern(Matrix::Zero(5, 1), truth);
    CHECK(zeros.correct_zeros[0] == 3);
    CHECK(zeros.incorrect_zeros[0] == 1);
    CHECK_FALSE(zeros.exact_model[0]);

    Matrix est = truth;
    est(2, 0) = 0.002;
    const auto loose = count_zero_pattern(est, truth, 1e-3);
    CHECK(loose.correct_zeros[0] == 2);
    CHECK_FALSE(loose.exact_model[0]);
    // The intercept never counts.
    est = truth;
    est(0, 0) = 0.0;
    CHECK(count_zero_pattern(est, truth).exact_model[0]);
}

TEST_CASE("model error") {
    Matrix b(5, 1);
    b << 1.0, 0.0, 0.0, 3.0, 0.0;
    Matrix bhat(5, 1);
    bhat << 1.2, 0.1, -0.05, 2.7, 0.2;
    CHECK(model_error(b, b, Matrix::Identity(5, 5))(0) == 0.0);
    CHECK(model_error(bhat, b, Matrix::Identity(5, 5))(0) == doctest::Approx((bhat - b).squaredNorm()).epsilon(1e-15));
    ModelSpec spec;
    spec.rho = Correlation::ArHalf;
    // oracle: model_error ar_half
    CHECK(model_error(bhat, b, spec.exx())(0) == doctest::Approx(0.11749999999999992).epsilon(1e-13));
}

TEST_CASE("model error is permutation invariant and needs symmetric moments") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix b(3, 2), bhat(3, 2);
    for (auto& v : b.reshaped()) v = z(rng);
    for (auto& v : bhat.reshaped()) v = z(rng);
    Matrix exx(3, 3);
    exx << 1.0, 0.2, 0.1, 0.2, 1.0, 0.3, 0.1, 0.3, 1.0;
    const Vector e = model_error(bhat, b, exx);
    const Matrix bs = b.rowwise().reverse();
    const Matrix bhats = bhat.rowwise().reverse();
    const Vector es = model_error(bhats, bs, exx);
    CHECK(es(0) == doctest::Approx(e(1)).epsilon(1e-14));
    CHECK(es(1) == doctest::Approx(e(0)).epsilon(1e-14));
    exx(0, 1) = 0.5;
    CHECK_THROWS_AS(model_error(bhat, b, exx), DomainError);
}

TEST_CASE("zero-count bookkeeping") {
    std::mt19937_64 rng(6);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
        Matrix truth(6, 2), est(6, 2);
        for (Eigen::Index k = 0; k < 6; ++k) {
            for (Eigen::Index j = 0; j < 2; ++j) {
                truth(k, j) = coin(rng) ? 0.0 : z(rng);
                est(k, j) = coin(rng) ? 0.0 : z(rng);
            }
        }
        const auto s = count_zero_pattern(est, truth);
        for (Eigen::Index j = 0; j < 2; ++j) {
            int true_zero = 0, zero_as_nonzero = 0, nonzero = 0, nonzero_kept = 0;
            for (Eigen::Index k = 1; k < 6; ++k) {
                const bool declared = std::abs(est(k, j)) <= kZeroCountTolerance;
                if (truth(k, j) == 0.0) {
                    ++true_zero;
                    zero_as_nonzero += declared ? 0 : 1;
                } else {
                    ++nonzero;
                    nonzero_kept += declared ? 0 : 1;
                }
            }
            const auto jj = static_cast<std::size_t>(j);
            CHECK(s.correct_zeros[jj] + zero_as_nonzero == true_zero);
            CHECK(s.incorrect_zeros[jj] + nonzero_kept == nonzero);
        }
    }
}

TEST_CASE("aggregation") {
    CHECK(median({0.1, 0.3}) == doctest::Approx(0.2));
    CHECK(median({5.0, 1.0, 3.0}) == 3.0);

    ReplicationScore a;
    a.zeros.correct_zeros = {3, 2};
    a.zeros.incorrect_zeros = {0, 1};
    a.zeros.exact_model = {true, false};
    a.model_errors = Vector::Constant(2, 0.1);
    const std::vector<ReplicationScore> one{a};
    const CellSummary s1 = aggregate_replications(one);
    CHECK(s1.mean_correct == std::vector<double>{3.0, 2.0});
    CHECK(s1.mean_incorrect == std::vector<double>{0.0, 1.0});
    CHECK(s1.accuracy == std::vector<double>{1.0, 0.0});
    CHECK(s1.median_model_error[0] == 0.1);

    ReplicationScore b = a;
    b.zeros.correct_zeros = {2, 2};
    b.zeros.exact_model = {false, true};
    b.model_errors = Vector::Constant(2, 0.3);
    const std::vector<ReplicationScore> two{a, b};
    const CellSummary s2 = aggregate_replications(two, 4);
    CHECK(s2.mean_correct[0] == 2.5);
    CHECK(s2.accuracy == std::vector<double>{0.5, 0.5});
    CHECK(s2.median_model_error[1] == doctest::Approx(0.2));
    CHECK(s2.replications == 2);
    CHECK(s2.failures == 4);
}

TEST_CASE("aggregation matches a streaming computation") {
    std::mt19937_64 rng(44);
    std::uniform_int_distribution<int> c(0, 3);
    std::exponential_distribution<double> e(3.0);
    std::vector<ReplicationScore> reps(200);
    double sum = 0.0;
    int exact = 0;
    std::vector<double> errs;
    for (auto& r : reps) {
        r.zeros.correct_zeros = {c(rng)};
        r.zeros.incorrect_zeros = {c(rng) % 2};
        r.zeros.exact_model = {c(rng) == 0};
        r.model_errors = Vector::Constant(1, e(rng));
        sum += r.zeros.correct_zeros[0];
        exact += r.zeros.exact_model[0] ? 1 : 0;
        errs.push_back(r.model_errors(0));
    }
    std::sort(errs.begin(), errs.end());
    const CellSummary s = aggregate_replications(reps);
    CHECK(s.mean_correct[0] == doctest::Approx(sum / 200.0).epsilon(1e-15));
    CHECK(s.accuracy[0] == doctest::Approx(exact / 200.0).epsilon(1e-15));
    CHECK(s.median_model_error[0] == doctest::Approx(0.5 * (errs[99] + errs[100])).epsilon(1e-15));
}
