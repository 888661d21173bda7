#include "trimfmr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "trimfmr/error.hpp"

namespace trimfmr {

Permutation align_components(const MixtureParams& estimate, const MixtureParams& reference) {
    const std::size_t m = reference.components();
    if (estimate.components() != m || estimate.dimension() != reference.dimension()) {
        throw DomainError("align_components: estimate and reference differ in shape");
    }
    // cost(a, b): estimate a placed on reference b.
    Matrix cost(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                (estimate.coefficients.col(static_cast<Eigen::Index>(a)) -
                 reference.coefficients.col(static_cast<Eigen::Index>(b)))
                    .squaredNorm();
        }
    }
    Permutation perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Permutation best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best_moved = m + 1;
    do {
        double c = 0.0;
        std::size_t moved = 0;
        for (std::size_t j = 0; j < m; ++j) {
            c += cost(static_cast<Eigen::Index>(perm[j]), static_cast<Eigen::Index>(j));
            moved += perm[j] != j;
        }
        if (c < best_cost || (c == best_cost && moved < best_moved)) {
            best_cost = c;
            best_moved = moved;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

MixtureParams permute_components(const MixtureParams& theta, const Permutation& perm) {
    const std::size_t m = theta.components();
    if (perm.size() != m) throw DomainError("permute_components: permutation has the wrong size");
    MixtureParams out = theta;
    for (std::size_t j = 0; j < m; ++j) {
        const auto src = static_cast<Eigen::Index>(perm[j]);
        const auto dst = static_cast<Eigen::Index>(j);
        out.proportions(dst) = theta.proportions(src);
        out.coefficients.col(dst) = theta.coefficients.col(src);
        out.variances(dst) = theta.variances(src);
    }
    return out;
}

ZeroPatternScore count_zero_pattern(const Matrix& beta_hat, const Matrix& beta_true, double tol) {
    if (beta_hat.rows() != beta_true.rows() || beta_hat.cols() != beta_true.cols()) {
        throw DomainError("count_zero_pattern: coefficient shapes differ");
    }
    const auto m = static_cast<std::size_t>(beta_true.cols());
    ZeroPatternScore out{std::vector<int>(m, 0), std::vector<int>(m, 0), std::vector<bool>(m, false)};
    for (std::size_t j = 0; j < m; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        int true_zeros = 0;
        for (Eigen::Index k = 1; k < beta_true.rows(); ++k) {
            const bool declared_zero = std::abs(beta_hat(k, jj)) <= tol;
            if (beta_true(k, jj) == 0.0) {
                ++true_zeros;
                out.correct_zeros[j] += declared_zero;
            } else {
                out.incorrect_zeros[j] += declared_zero;
            }
        }
        out.exact_model[j] = out.correct_zeros[j] == true_zeros && out.incorrect_zeros[j] == 0;
    }
    return out;
}

Vector model_error(const Matrix& beta_hat, const Matrix& beta_true, const Matrix& exx) {
    if (beta_hat.rows() != beta_true.rows() || beta_hat.cols() != beta_true.cols()) {
        throw DomainError("model_error: coefficient shapes differ");
    }
    if (exx.rows() != beta_true.rows() || exx.cols() != beta_true.rows()) {
        throw DomainError("model_error: E(XX') has the wrong shape");
    }
    if ((exx - exx.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw DomainError("model_error: E(XX') must be symmetric");
    }
    Vector out(beta_true.cols());
    for (Eigen::Index j = 0; j < beta_true.cols(); ++j) {
        const Vector d = beta_hat.col(j) - beta_true.col(j);
        out(j) = d.dot(exx * d);
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const std::size_t k = values.size();
    return k % 2 == 1 ? values[k / 2] : 0.5 * (values[k / 2 - 1] + values[k / 2]);
}

CellSummary aggregate_replications(std::span<const ReplicationScore> scores, std::size_t failures) {
    CellSummary out;
    out.failures = failures;
    out.replications = scores.size();
    if (scores.empty()) return out;
    const std::size_t m = scores.front().zeros.correct_zeros.size();
    out.mean_correct.assign(m, 0.0);
    out.mean_incorrect.assign(m, 0.0);
    out.accuracy.assign(m, 0.0);
    out.median_model_error.assign(m, 0.0);
    std::vector<std::vector<double>> errors(m);
    for (const auto& s : scores) {
        if (s.zeros.correct_zeros.size() != m || static_cast<std::size_t>(s.model_errors.size()) != m) {
            throw DomainError("aggregate_replications: replications disagree on component count");
        }
        for (std::size_t j = 0; j < m; ++j) {
            out.mean_correct[j] += s.zeros.correct_zeros[j];
            out.mean_incorrect[j] += s.zeros.incorrect_zeros[j];
            out.accuracy[j] += s.zeros.exact_model[j] ? 1.0 : 0.0;
            errors[j].push_back(s.model_errors(static_cast<Eigen::Index>(j)));
        }
    }
    const double count = static_cast<double>(scores.size());
    for (std::size_t j = 0; j < m; ++j) {
        out.mean_correct[j] /= count;
        out.mean_incorrect[j] /= count;
        out.accuracy[j] /= count;
        out.median_model_error[j] = median(std::move(errors[j]));
    }
    return out;
}

}  // namespace trimfmr
