#include "trimfmr/mixture.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "trimfmr/error.hpp"

namespace trimfmr {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double log_sum_exp(const double* v, std::size_t m) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) hi = std::max(hi, v[j]);
    if (!std::isfinite(hi)) return hi;
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += std::exp(v[j] - hi);
    return hi + std::log(s);
}

void check_shape(const Dataset& data, const MixtureParams& theta) {
    if (theta.dimension() != data.dimension()) {
        throw DomainError("mixture: coefficient length does not match the design matrix");
    }
}

}  // namespace

double log_component_density(double y, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                             const Eigen::Ref<const Vector>& beta, double sigma2) {
    if (!(sigma2 > 0.0)) throw DomainError("component_density: variance must be positive");
    const double r = y - x.dot(beta.transpose());
    return -0.5 * (kLogTwoPi + std::log(sigma2)) - r * r / (2.0 * sigma2);
}

double component_density(double y, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                         const Eigen::Ref<const Vector>& beta, double sigma2) {
    return std::exp(log_component_density(y, x, beta, sigma2));
}

double log_mixture_density(double y, const Eigen::Ref<const Eigen::RowVectorXd>& x, const MixtureParams& theta) {
    const auto m = theta.components();
    double terms[16];
    std::vector<double> heap;
    double* buf = terms;
    if (m > 16) {
        heap.resize(m);
        buf = heap.data();
    }
    for (std::size_t j = 0; j < m; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        buf[j] = std::log(theta.proportions(jj)) +
                 log_component_density(y, x, theta.coefficients.col(jj), theta.variances(jj));
    }
    return log_sum_exp(buf, m);
}

double mixture_density(double y, const Eigen::Ref<const Eigen::RowVectorXd>& x, const MixtureParams& theta) {
    return std::exp(log_mixture_density(y, x, theta));
}

Vector row_log_densities(const Dataset& data, const MixtureParams& theta) {
    check_shape(data, theta);
    const auto n = static_cast<Eigen::Index>(data.rows());
    const auto m = static_cast<Eigen::Index>(theta.components());
    // Residuals for all rows at once, then log-sum-exp per row.
    const Matrix fitted = data.x() * theta.coefficients;
    Vector out(n);
    std::vector<double> buf(static_cast<std::size_t>(m));
    Vector log_norm(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        if (!(theta.variances(j) > 0.0)) throw DomainError("component_density: variance must be positive");
        log_norm(j) = std::log(theta.proportions(j)) - 0.5 * (kLogTwoPi + std::log(theta.variances(j)));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double r = data.y()(i) - fitted(i, j);
            buf[static_cast<std::size_t>(j)] = log_norm(j) - r * r / (2.0 * theta.variances(j));
        }
        out(i) = log_sum_exp(buf.data(), buf.size());
    }
    return out;
}

double log_likelihood(const Dataset& data, const MixtureParams& theta) {
    return row_log_densities(data, theta).sum();
}

double log_likelihood(const Dataset& data, const MixtureParams& theta, std::span<const std::size_t> subset) {
    if (subset.empty()) throw DomainError("log_likelihood: empty subset");
    for (const auto i : subset) {
        if (i >= data.rows()) throw DomainError("log_likelihood: subset index out of range");
    }
    // Same per-row arithmetic as row_log_densities, so trimming and the
    // objective agree bit for bit.
    const Vector rows = row_log_densities(data, theta);
    double total = 0.0;
    for (const auto i : subset) total += rows(static_cast<Eigen::Index>(i));
    return total;
}

double penalized_objective(const Dataset& data, const MixtureParams& theta, std::span<const PenaltySpec> specs) {
    return log_likelihood(data, theta) - total_penalty(theta, specs, data.rows());
}

double penalized_objective(const Dataset& data, const MixtureParams& theta, std::span<const PenaltySpec> specs,
                           std::span<const std::size_t> subset) {
    return penalized_objective(data, theta, specs, subset, subset.size());
}

double penalized_objective(const Dataset& data, const MixtureParams& theta, std::span<const PenaltySpec> specs,
                           std::span<const std::size_t> subset, std::size_t penalty_n) {
    return log_likelihood(data, theta, subset) - total_penalty(theta, specs, penalty_n);
}

}  // namespace trimfmr
