#pragma once

#include <cstdint>
#include <vector>

#include "tntopo/network.hpp"

namespace tntopo {

/// Largest full-tensor entry count the brute-force helpers agree to touch.
inline constexpr std::int64_t kDefaultOracleCap = std::int64_t{1} << 20;

/// A double split into mantissa and a power-of-two exponent, for quantities
/// whose magnitude can leave the double range during long sweeps. Rescaling
/// by powers of two is exact, so results equal the unscaled ones bit for bit
/// whenever those fit.
struct ScaledValue {
    double mantissa = 0.0;
    std::int64_t exponent = 0;
    double value() const;
};

/// Contracts every bond by brute force and returns the full tensor with
/// modes ordered by owning node id (each node's physical labels in stored
/// order). Throws UnsupportedError, reporting the required size, when the
/// result would exceed `cap` entries.
DenseTensor oracle_contract(const TensorNetwork& net, std::int64_t cap = kDefaultOracleCap);

/// <a, b> via transfer sweeps along the node order of `a`. Both networks
/// must be structural paths, cycles, or single nodes, and carry the same
/// physical modes; nodes are paired by their physical labels. Linear in the
/// network length, no full tensor is ever formed.
double inner_product(const TensorNetwork& a, const TensorNetwork& b);
ScaledValue inner_product_scaled(const TensorNetwork& a, const TensorNetwork& b);

/// Frobenius norm of the represented tensor: sweep-based for paths, cycles
/// and single nodes, brute force (subject to `cap`) otherwise.
double network_norm(const TensorNetwork& net, std::int64_t cap = kDefaultOracleCap);

/// ||a - b|| / ||a|| over the represented tensors. Uses inner-product sweeps
/// when both networks support them, brute force within `cap` otherwise.
/// Radicands driven slightly negative by cancellation are clamped to zero.
double relative_error(const TensorNetwork& a, const TensorNetwork& b,
                      std::int64_t cap = kDefaultOracleCap);

/// One truncating step's contribution to the conversion error: the norm of
/// everything around the decomposed node pair times the singular mass that
/// was dropped. Entries sum into a rigorous overall bound by the triangle
/// inequality.
struct BudgetEntry {
    double env_norm = 0.0;
    double discarded_mass = 0.0;
    double bound = 0.0; // env_norm * discarded_mass
};

struct ErrorBudget {
    std::vector<BudgetEntry> entries;
    double cumulative = 0.0; // sum of entry bounds
    bool complete = true;    // false when an environment norm was unavailable
};

/// Norm of the network with the given nodes removed, their severed bonds
/// left as open modes. Factorizes over connected components; path-shaped
/// components are swept, anything else falls back to brute force under
/// `cap`. The empty remainder has norm 1.
double environment_norm(const TensorNetwork& net, const std::vector<NodeId>& excluded,
                        std::int64_t cap = kDefaultOracleCap);
double environment_norm(const TensorNetwork& net, NodeId x, NodeId y,
                        std::int64_t cap = kDefaultOracleCap);

} // namespace tntopo
