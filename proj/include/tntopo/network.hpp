#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tntopo/dense_tensor.hpp"

namespace tntopo {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Shared (contracted) index between two distinct nodes.
struct Bond {
    EdgeId id = 0;
    std::string label;
    NodeId a = 0;
    NodeId b = 0;
    std::int64_t rank = 1;

    NodeId other(NodeId n) const { return n == a ? b : a; }
    bool touches(NodeId n) const { return n == a || n == b; }
};

/// Open (free) index carried by a node. Exactly one per node in a valid
/// network; transient states produced by contraction carry several.
struct PhysicalMode {
    std::string label;
    std::int64_t dim = 1;
};

struct Topology {
    enum class Kind { Chain, Train, Grid, General };
    Kind kind = Kind::General;
    std::int64_t d = 0;    // Chain / Train node count
    std::int64_t rows = 0; // Grid
    std::int64_t cols = 0;

    static Topology chain(std::int64_t d) { return {Kind::Chain, d, 0, 0}; }
    static Topology train(std::int64_t d) { return {Kind::Train, d, 0, 0}; }
    static Topology grid(std::int64_t rows, std::int64_t cols) {
        return {Kind::Grid, 0, rows, cols};
    }
    static Topology general() { return {}; }

    bool operator==(const Topology&) const = default;
};

std::string to_string(const Topology& t);

/// Undirected multigraph of tensors. Parallel bonds are allowed, self-loops
/// are not. Every stored node tensor keeps its modes in canonical order:
/// incident bond labels sorted lexicographically, physical labels last.
class TensorNetwork {
public:
    const std::map<NodeId, DenseTensor>& nodes() const { return nodes_; }
    const std::vector<Bond>& bonds() const { return bonds_; }
    const std::map<NodeId, std::vector<PhysicalMode>>& physical() const { return physical_; }

    const DenseTensor& tensor(NodeId n) const;
    const std::vector<PhysicalMode>& physical_of(NodeId n) const;
    const Bond& bond(EdgeId e) const;
    Bond& bond(EdgeId e);
    const Bond* find_bond_by_label(const std::string& label) const;
    std::vector<EdgeId> bonds_at(NodeId n) const;
    std::vector<EdgeId> bonds_between(NodeId a, NodeId b) const;
    std::size_t degree(NodeId n) const; // bond count, parallels included

    /// Adds a node; the tensor is brought into canonical mode order.
    NodeId add_node(DenseTensor tensor, std::vector<PhysicalMode> physical);
    NodeId add_node_with_id(NodeId id, DenseTensor tensor, std::vector<PhysicalMode> physical);
    EdgeId add_bond(const std::string& label, NodeId a, NodeId b, std::int64_t rank);
    void remove_node(NodeId n); // must have no incident bonds
    void remove_bond(EdgeId e);
    void replace_tensor(NodeId n, DenseTensor tensor);
    void set_physical(NodeId n, std::vector<PhysicalMode> physical);

    /// Moves one endpoint of a bond (label and id survive); both the old and
    /// the new endpoint are re-canonicalized.
    void reattach_bond(EdgeId e, NodeId from, NodeId to);
    /// Repoints a bond at a new node pair with a new rank in one go.
    void rewire_bond(EdgeId e, NodeId a, NodeId b, std::int64_t rank);
    void set_bond_rank(EdgeId e, std::int64_t rank);

    std::string fresh_bond_label(const std::string& stem = "b");
    bool has_bond_label(const std::string& label) const;

    /// Canonical mode order for a node given its current bonds + physical modes.
    std::vector<std::string> canonical_labels(NodeId n) const;

private:
    void canonicalize(NodeId n);

    std::map<NodeId, DenseTensor> nodes_;
    std::vector<Bond> bonds_;
    std::map<NodeId, std::vector<PhysicalMode>> physical_;
    NodeId next_node_ = 1;
    EdgeId next_edge_ = 1;
    std::uint64_t label_counter_ = 0;
};

struct Violation {
    std::string code;
    std::string message;
};

/// Structural and metric consistency checks. Empty result = valid.
std::vector<Violation> validate(const TensorNetwork& net);

/// How the network should be filled when built.
struct Fill {
    enum class Kind { Zeros, SeededRandom };
    Kind kind = Kind::Zeros;
    std::uint64_t seed = 0;

    static Fill zeros() { return {}; }
    static Fill random(std::uint64_t seed) { return {Kind::SeededRandom, seed}; }
};

/// Constructs a network of the given topology. `phys_dims` has one entry per
/// node (row-major for grids); `ranks` one entry per bond in label order
/// (chain: j_1..j_d with j_d closing the ring; train: j_1..j_{d-1}; grid:
/// per row its horizontal bonds, then the verticals to the next row).
/// Random fills draw i.i.d. uniform [-1,1) entries from a splitmix64 stream,
/// node by node in id order, row-major within each tensor.
TensorNetwork build(const Topology& topology, const std::vector<std::int64_t>& phys_dims,
                    const std::vector<std::int64_t>& ranks, const Fill& fill);

/// Uniform-parameter convenience used by the CLI and benches.
TensorNetwork build_uniform(const Topology& topology, std::int64_t phys_dim, std::int64_t rank,
                            const Fill& fill);

/// Classifies by bond structure. Rank-1 bonds are neglected: they are
/// dropped first and re-added in label order only where needed to keep the
/// graph connected, so a train closed by a rank-1 bond still reads as Train.
Topology topology_of(const TensorNetwork& net);

/// Structural predicates on the full bond graph (ranks ignored).
bool is_cycle_graph(const TensorNetwork& net);
bool is_path_graph(const TensorNetwork& net);

/// Node order along a path graph (deterministic: starts at the smaller-id
/// endpoint) or along a cycle (starts at the smallest id, towards its
/// smaller-id neighbor).
std::vector<NodeId> path_node_order(const TensorNetwork& net);

/// Lattice reconstruction; empty if the bond graph is not a rows x cols grid
/// (2x2 cycles are accepted and oriented deterministically).
struct GridLayout {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<NodeId> node_at; // row-major, rows*cols entries

    NodeId at(std::int64_t r, std::int64_t c) const {
        return node_at[static_cast<std::size_t>(r * cols + c)];
    }
};
std::optional<GridLayout> detect_grid(const TensorNetwork& net);

/// JSON interchange. Tensor data is written base64 (little-endian doubles);
/// readers also accept plain number arrays. Ids survive a round trip.
std::string serialize(const TensorNetwork& net);
TensorNetwork deserialize(const std::string& text);

} // namespace tntopo
