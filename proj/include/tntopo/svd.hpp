#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tntopo/dense_tensor.hpp"

namespace tntopo {

/// How many singular values an SVD split keeps.
///
/// With neither field set the full numerical rank is retained: singular
/// values above rows*cols*eps_machine*sigma_1. `rel_cutoff` keeps the
/// smallest count whose discarded Frobenius tail stays below
/// rel_cutoff*||A||_F; `max_rank` caps the count. The rules combine by
/// taking the minimum. At least one singular value is always kept.
struct TruncationPolicy {
    std::optional<double> rel_cutoff;
    std::optional<std::int64_t> max_rank;

    static TruncationPolicy exact() { return {}; }
    static TruncationPolicy eps(double cutoff) { return {cutoff, std::nullopt}; }
    static TruncationPolicy cap(std::int64_t rank) { return {std::nullopt, rank}; }

    TruncationPolicy with_cap(std::int64_t rank) const {
        TruncationPolicy p = *this;
        p.max_rank = rank;
        return p;
    }

    bool is_exact() const { return !rel_cutoff && !max_rank; }
};

/// Rank-revealing factorization A ~= left * right of a 2-mode tensor.
///
/// `left` is m x k with orthonormal columns; the singular values are folded
/// into `right` (k x n). `singular_values` holds the full descending
/// spectrum; `discarded_mass` = sqrt(sum of squares of the dropped ones),
/// which equals ||A - left*right||_F. Signs are fixed so that the
/// largest-magnitude entry of each left column (first occurrence on ties)
/// is positive. A zero matrix yields kept_rank 1 with zero factors.
struct SvdSplit {
    DenseTensor left;
    DenseTensor right;
    std::int64_t kept_rank = 0;
    double discarded_mass = 0.0;
    std::vector<double> singular_values;
};

/// Applies `policy` to a descending singular-value list. `rows`/`cols` feed
/// the numerical-rank threshold; pass 0 to default both to the list length.
std::int64_t stable_rank_decision(const std::vector<double>& singular_values,
                                  const TruncationPolicy& policy, std::int64_t rows = 0,
                                  std::int64_t cols = 0);

SvdSplit svd_split(const DenseTensor& a, const TruncationPolicy& policy);

} // namespace tntopo
