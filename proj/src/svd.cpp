#include "tntopo/svd.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

#include "tntopo/errors.hpp"

namespace tntopo {

std::int64_t stable_rank_decision(const std::vector<double>& singular_values,
                                  const TruncationPolicy& policy, std::int64_t rows,
                                  std::int64_t cols) {
    const std::int64_t count = static_cast<std::int64_t>(singular_values.size());
    if (count == 0) throw ArgumentError("stable_rank_decision: empty singular value list");
    for (std::int64_t i = 1; i < count; ++i)
        if (singular_values[i] > singular_values[i - 1])
            throw ArgumentError("stable_rank_decision: singular values not descending");
    if (rows <= 0) rows = count;
    if (cols <= 0) cols = count;

    const double sigma1 = singular_values[0];
    if (sigma1 <= 0.0) return 1; // zero matrix convention

    // Numerical rank: everything clearly above round-off relative to sigma_1.
    const double floor_thresh = static_cast<double>(rows) * static_cast<double>(cols) *
                                std::numeric_limits<double>::epsilon() * sigma1;
    std::int64_t kept = 0;
    while (kept < count && singular_values[kept] > floor_thresh) ++kept;

    if (policy.rel_cutoff) {
        // Backward suffix sums of squares for a stable tail comparison.
        std::vector<double> suffix(count + 1, 0.0);
        for (std::int64_t i = count; i-- > 0;)
            suffix[i] = suffix[i + 1] + singular_values[i] * singular_values[i];
        const double budget = (*policy.rel_cutoff) * (*policy.rel_cutoff) * suffix[0];
        std::int64_t k = 0;
        while (k < count && suffix[k] > budget) ++k;
        kept = std::min(kept, k);
    }
    if (policy.max_rank) {
        if (*policy.max_rank < 1) throw ArgumentError("stable_rank_decision: max_rank must be >= 1");
        kept = std::min(kept, *policy.max_rank);
    }
    return std::max<std::int64_t>(kept, 1);
}

SvdSplit svd_split(const DenseTensor& a, const TruncationPolicy& policy) {
    if (a.order() != 2) throw ArgumentError("svd_split: input must have exactly 2 modes");
    const std::int64_t m = a.shape()[0];
    const std::int64_t n = a.shape()[1];

    Eigen::MatrixXd A(m, n);
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j)
            A(i, j) = a.data()[static_cast<std::size_t>(i * n + j)];

    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();

    SvdSplit out;
    out.singular_values.assign(sv.data(), sv.data() + sv.size());

    const std::int64_t k = stable_rank_decision(out.singular_values, policy, m, n);
    out.kept_rank = k;

    double tail = 0.0;
    for (std::int64_t i = static_cast<std::int64_t>(out.singular_values.size()); i-- > k;)
        tail += out.singular_values[i] * out.singular_values[i];
    out.discarded_mass = std::sqrt(tail);

    Eigen::MatrixXd U = svd.matrixU().leftCols(k);
    Eigen::MatrixXd R = sv.head(k).asDiagonal() * svd.matrixV().leftCols(k).transpose();

    if (out.singular_values[0] <= 0.0) {
        U.setZero();
        R.setZero();
    } else {
        // Deterministic gauge: largest-magnitude entry of each left column
        // positive (first occurrence wins ties).
        for (std::int64_t c = 0; c < k; ++c) {
            std::int64_t arg = 0;
            double best = -1.0;
            for (std::int64_t r = 0; r < m; ++r) {
                const double mag = std::abs(U(r, c));
                if (mag > best) {
                    best = mag;
                    arg = r;
                }
            }
            if (U(arg, c) < 0.0) {
                U.col(c) = -U.col(c);
                R.row(c) = -R.row(c);
            }
        }
    }

    std::vector<double> left_data(static_cast<std::size_t>(m * k));
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < k; ++j)
            left_data[static_cast<std::size_t>(i * k + j)] = U(i, j);
    std::vector<double> right_data(static_cast<std::size_t>(k * n));
    for (std::int64_t i = 0; i < k; ++i)
        for (std::int64_t j = 0; j < n; ++j)
            right_data[static_cast<std::size_t>(i * n + j)] = R(i, j);

    out.left = DenseTensor({"rows", "split"}, {m, k}, std::move(left_data));
    out.right = DenseTensor({"split", "cols"}, {k, n}, std::move(right_data));
    return out;
}

} // namespace tntopo
