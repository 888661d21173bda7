#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "trimfmr/methods.hpp"
#include "trimfmr/types.hpp"

namespace trimfmr {

// A list of held-out row sets; every row is held out at most once per split.
using Partition = std::vector<std::vector<std::size_t>>;

struct CvResult {
    double mspe = 0.0;
    std::size_t held_out_rows = 0;
    std::size_t splits_used = 0;
    std::size_t splits_skipped = 0;
};

// Random near-equal k-fold partition (fold sizes differ by at most one).
Partition kfold_partition(std::size_t n, std::size_t k, std::uint64_t seed);

// reps independent uniformly drawn hold-out sets of size d.
Partition mccv_splits(std::size_t n, std::size_t d, std::size_t reps, std::uint64_t seed);

/// Fits on the complement of each hold-out set (rows kept in the order the
/// splits list them) and averages squared prediction errors over all held-out
/// rows. Failed fits are skipped; more than half skipped is a NumericalError.
CvResult cross_validate(const Dataset& data, std::size_t m, const MethodConfig& method, const Partition& splits);

CvResult kfold_cv_error(const Dataset& data, std::size_t m, const MethodConfig& method, std::size_t k,
                        std::uint64_t seed);

// Mean over reps of the hold-out MSPE (each split weighted equally).
CvResult mccv_error(const Dataset& data, std::size_t m, const MethodConfig& method, std::size_t d,
                    std::size_t reps, std::uint64_t seed);

}  // namespace trimfmr
