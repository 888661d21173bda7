#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace trimfmr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Sorted, duplicate-free row indices into a Dataset.
using IndexSet = std::vector<std::size_t>;

// Lower bound on every mixing proportion.
inline constexpr double kProportionFloor = 1e-6;
// Coefficients with magnitude below this are exact zeros and leave the LQA.
inline constexpr double kZeroThreshold = 1e-6;
// Variance floor as a fraction of the sample variance of the response.
inline constexpr double kVarianceFloorFactor = 1e-8;

/// Parameters of an m-component Gaussian mixture of linear regressions.
///
/// `coefficients` is (p+1) x m: column j holds (beta_0j, beta_1j, ..., beta_pj)
/// with the intercept first.
struct MixtureParams {
    Vector proportions;
    Matrix coefficients;
    Vector variances;

    MixtureParams() = default;
    MixtureParams(Vector pi, Matrix beta, Vector sigma2);

    std::size_t components() const { return static_cast<std::size_t>(proportions.size()); }
    // Number of columns of the design matrix, p+1.
    std::size_t dimension() const { return static_cast<std::size_t>(coefficients.rows()); }

    // Throws DomainError when the invariants do not hold.
    void validate(double variance_floor = 0.0) const;

    // pi, then beta column by column, then sigma^2.
    Vector flatten() const;
};

/// Reference information attached to simulated data.
struct Truth {
    MixtureParams theta;
    Matrix exx;                            // E(X X^T), (p+1) x (p+1)
    std::vector<std::uint8_t> contaminated;  // one flag per row
    std::vector<int> labels;                 // generating component per row
};

/// Response vector and design matrix whose first column is identically one.
class Dataset {
public:
    Dataset() = default;
    // Throws DomainError on shape mismatch or a non-unit first column.
    Dataset(Vector y, Matrix x, std::optional<Truth> truth = std::nullopt);

    // Prepends the intercept column to the covariates.
    static Dataset from_covariates(Vector y, const Matrix& covariates);

    std::size_t rows() const { return static_cast<std::size_t>(y_.size()); }
    std::size_t dimension() const { return static_cast<std::size_t>(x_.cols()); }
    std::size_t predictors() const { return dimension() - 1; }

    const Vector& y() const { return y_; }
    const Matrix& x() const { return x_; }
    double response(std::size_t i) const { return y_(static_cast<Eigen::Index>(i)); }
    auto row(std::size_t i) const { return x_.row(static_cast<Eigen::Index>(i)); }

    const std::optional<Truth>& truth() const { return truth_; }
    std::optional<Truth>& truth() { return truth_; }

    // kVarianceFloorFactor times the sample variance of y.
    double variance_floor() const { return variance_floor_; }

    // Rows gathered in the given order (duplicates allowed); truth dropped.
    Dataset take(std::span<const std::size_t> indices) const;


private:
    Vector y_;
    Matrix x_;
    std::optional<Truth> truth_;
    double variance_floor_ = 0.0;
};

IndexSet all_rows(std::size_t n);

}  // namespace trimfmr
