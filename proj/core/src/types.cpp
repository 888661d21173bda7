#include "trimfmr/types.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "trimfmr/error.hpp"

namespace trimfmr {

MixtureParams::MixtureParams(Vector pi, Matrix beta, Vector sigma2)
    : proportions(std::move(pi)), coefficients(std::move(beta)), variances(std::move(sigma2)) {
    if (coefficients.cols() != proportions.size() || variances.size() != proportions.size()) {
        throw DomainError("MixtureParams: proportions, coefficient columns and variances disagree on m");
    }
}

void MixtureParams::validate(double variance_floor) const {
    const auto m = proportions.size();
    if (m < 1) throw DomainError("MixtureParams: need at least one component");
    if (coefficients.cols() != m || variances.size() != m) {
        throw DomainError("MixtureParams: inconsistent component count");
    }
    if (coefficients.rows() < 1) throw DomainError("MixtureParams: empty coefficient vectors");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
        const double pj = proportions(j);
        if (!(pj >= kProportionFloor * (1.0 - 1e-9)) || !(pj <= 1.0 + 1e-12)) {
            throw DomainError("MixtureParams: proportion " + std::to_string(j) + " out of range");
        }
        sum += pj;
        if (!(variances(j) > 0.0) || variances(j) < variance_floor || !std::isfinite(variances(j))) {
            throw DomainError("MixtureParams: variance " + std::to_string(j) + " below floor");
        }
    }
    if (std::abs(sum - 1.0) > 1e-12) throw DomainError("MixtureParams: proportions do not sum to one");
    if (!coefficients.allFinite()) throw DomainError("MixtureParams: non-finite coefficient");
}

Vector MixtureParams::flatten() const {
    const auto m = proportions.size();
    const auto d = coefficients.rows();
    Vector out(m + m * d + m);
    out.head(m) = proportions;
    for (Eigen::Index j = 0; j < m; ++j) out.segment(m + j * d, d) = coefficients.col(j);
    out.tail(m) = variances;
    return out;
}

Dataset::Dataset(Vector y, Matrix x, std::optional<Truth> truth)
    : y_(std::move(y)), x_(std::move(x)), truth_(std::move(truth)) {
    if (x_.rows() != y_.size()) throw DomainError("Dataset: design and response row counts differ");
    if (x_.cols() < 1) throw DomainError("Dataset: design matrix needs an intercept column");
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
        if (x_(i, 0) != 1.0) throw DomainError("Dataset: first design column must be identically 1");
    }
    double var = 0.0;
    if (y_.size() > 1) {
        const double mean = y_.mean();
        var = (y_.array() - mean).square().sum() / static_cast<double>(y_.size() - 1);
    }
    // Constant responses leave no scale to borrow from.
    variance_floor_ = var > 0.0 ? kVarianceFloorFactor * var : kVarianceFloorFactor;
}

Dataset Dataset::from_covariates(Vector y, const Matrix& covariates) {
    Matrix x(covariates.rows(), covariates.cols() + 1);
    x.col(0).setOnes();
    x.rightCols(covariates.cols()) = covariates;
    return Dataset(std::move(y), std::move(x));
}

Dataset Dataset::take(std::span<const std::size_t> indices) const {
    const auto k = static_cast<Eigen::Index>(indices.size());
    Vector y(k);
    Matrix x(k, x_.cols());
    for (Eigen::Index r = 0; r < k; ++r) {
        const auto i = indices[static_cast<std::size_t>(r)];
        if (i >= rows()) throw DomainError("Dataset::take: row index out of range");
        y(r) = y_(static_cast<Eigen::Index>(i));
        x.row(r) = x_.row(static_cast<Eigen::Index>(i));
    }
    return Dataset(std::move(y), std::move(x));
}

IndexSet all_rows(std::size_t n) {
    IndexSet idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

}  // namespace trimfmr
