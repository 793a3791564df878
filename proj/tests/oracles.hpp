// Independent reference implementations used as ground truth. Everything here
// is written in the most literal way possible (nested loops over explicit
// index tuples) and deliberately shares no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tntopo/dense_tensor.hpp"
#include "tntopo/network.hpp"

namespace oracles {

using tntopo::DenseTensor;
using tntopo::TensorNetwork;

/// Entry of t at the positions the assignment gives for its labels.
inline double entry_at(const DenseTensor& t, const std::map<std::string, std::int64_t>& assign) {
    std::int64_t off = 0;
    for (std::size_t m = 0; m < t.order(); ++m)
        off = off * t.shape()[m] + assign.at(t.labels()[m]);
    return t.data()[static_cast<std::size_t>(off)];
}

/// Contracts a list of tensors by literal summation: labels held by two
/// tensors are summed over, labels held by one stay open (sorted order).
inline DenseTensor naive_network_tensor(const std::vector<DenseTensor>& tensors) {
    std::map<std::string, std::int64_t> extent;
    std::map<std::string, int> uses;
    for (const DenseTensor& t : tensors)
        for (std::size_t m = 0; m < t.order(); ++m) {
            extent[t.labels()[m]] = t.shape()[m];
            ++uses[t.labels()[m]];
        }
    std::vector<std::string> open;
    std::vector<std::string> summed;
    for (const auto& [l, c] : uses) {
        if (c == 1)
            open.push_back(l);
        else if (c == 2)
            summed.push_back(l);
        else
            throw std::runtime_error("naive oracle: label used more than twice");
    }

    std::vector<std::int64_t> open_shape;
    std::int64_t open_size = 1;
    for (const auto& l : open) {
        open_shape.push_back(extent[l]);
        open_size *= extent[l];
    }
    std::int64_t summed_size = 1;
    for (const auto& l : summed) summed_size *= extent[l];

    std::vector<double> out(static_cast<std::size_t>(open_size), 0.0);
    std::map<std::string, std::int64_t> assign;
    for (std::int64_t oi = 0; oi < open_size; ++oi) {
        std::int64_t rest = oi;
        for (std::size_t m = open.size(); m-- > 0;) {
            assign[open[m]] = rest % open_shape[m];
            rest /= open_shape[m];
        }
        double sum = 0.0;
        for (std::int64_t si = 0; si < summed_size; ++si) {
            std::int64_t srest = si;
            for (std::size_t m = summed.size(); m-- > 0;) {
                assign[summed[m]] = srest % extent[summed[m]];
                srest /= extent[summed[m]];
            }
            double prod = 1.0;
            for (const DenseTensor& t : tensors) prod *= entry_at(t, assign);
            sum += prod;
        }
        out[static_cast<std::size_t>(oi)] = sum;
    }
    if (open.empty()) return DenseTensor::scalar(out[0]);
    return DenseTensor(open, open_shape, std::move(out));
}

/// Full tensor of a network, modes sorted by label.
inline DenseTensor naive_full(const TensorNetwork& net) {
    std::vector<DenseTensor> work;
    for (const auto& [id, t] : net.nodes()) {
        (void)id;
        work.push_back(t);
    }
    return naive_network_tensor(work);
}

inline double naive_norm(const DenseTensor& t) {
    double s = 0.0;
    for (double v : t.data()) s += v * v;
    return std::sqrt(s);
}

/// Relative Frobenius distance, matching modes by label.
inline double naive_relative_error(const DenseTensor& a, const DenseTensor& b) {
    const DenseTensor bb = tntopo::transpose(b, a.labels());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double d = a.data()[i] - bb.data()[i];
        num += d * d;
        den += a.data()[i] * a.data()[i];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

inline double naive_relative_error(const TensorNetwork& a, const TensorNetwork& b) {
    return naive_relative_error(naive_full(a), naive_full(b));
}

/// Norm of the network with the given nodes deleted and their bonds left
/// open; severed bond modes stay open automatically (used only once).
inline double naive_env_norm(const TensorNetwork& net, const std::vector<tntopo::NodeId>& excluded) {
    std::vector<DenseTensor> work;
    for (const auto& [id, t] : net.nodes())
        if (std::find(excluded.begin(), excluded.end(), id) == excluded.end()) work.push_back(t);
    if (work.empty()) return 1.0;
    return naive_norm(naive_network_tensor(work));
}

/// Textbook three-loop matrix product of 2-mode tensors (row label kept from
/// a, column label from b; the shared label is a's second mode).
inline DenseTensor matmul3(const DenseTensor& a, const DenseTensor& b) {
    const std::int64_t m = a.shape()[0];
    const std::int64_t k = a.shape()[1];
    const std::int64_t n = b.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(m * n), 0.0);
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j)
            for (std::int64_t p = 0; p < k; ++p)
                out[static_cast<std::size_t>(i * n + j)] +=
                    a.data()[static_cast<std::size_t>(i * k + p)] *
                    b.data()[static_cast<std::size_t>(p * n + j)];
    return DenseTensor({a.labels()[0], b.labels()[1]}, {m, n}, std::move(out));
}

/// Singular values through the eigendecomposition of A^T A (a different
/// algorithm than any SVD routine), descending.
inline std::vector<double> singular_values_oracle(const DenseTensor& a) {
    const std::int64_t m = a.shape()[0];
    const std::int64_t n = a.shape()[1];
    Eigen::MatrixXd A(m, n);
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) A(i, j) = a.data()[static_cast<std::size_t>(i * n + j)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.transpose() * A);
    std::vector<double> sv;
    for (std::int64_t i = 0; i < n; ++i) sv.push_back(std::sqrt(std::max(es.eigenvalues()[i], 0.0)));
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

/// Best rank-k Frobenius error by alternating least squares, several random
/// restarts; reliable at <= 8x8 to certify Eckart-Young. Knows nothing
/// about singular value decompositions.
inline double best_rank_k_error(const DenseTensor& a, std::int64_t k) {
    const std::int64_t m = a.shape()[0];
    const std::int64_t n = a.shape()[1];
    Eigen::MatrixXd A(m, n);
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) A(i, j) = a.data()[static_cast<std::size_t>(i * n + j)];
    if (k >= std::min(m, n)) return 0.0;
    std::uint64_t state = 0x5eed;
    const auto draw = [&state] {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
    };
    double best = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < 9; ++restart) {
        Eigen::MatrixXd U(m, k);
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < k; ++j) U(i, j) = draw();
        Eigen::MatrixXd V(n, k);
        for (int it = 0; it < 400; ++it) {
            // re-orthonormalize so the normal equations stay well conditioned
            U = Eigen::HouseholderQR<Eigen::MatrixXd>(U).householderQ() *
                Eigen::MatrixXd::Identity(m, k);
            V = A.transpose() * U;
            U = A * V * (V.transpose() * V).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
        }
        best = std::min(best, (A - U * V.transpose()).norm());
    }
    return best;
}

/// The documented fill stream, reimplemented from its published constants.
class SplitMixRef {
public:
    explicit SplitMixRef(std::uint64_t seed) : state_(seed) {}

    double next_symmetric() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
    }

private:
    std::uint64_t state_;
};

} // namespace oracles
