#include "tntopo/network.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "tntopo/errors.hpp"
#include "tntopo/rng.hpp"

namespace tntopo {

std::string to_string(const Topology& t) {
    std::ostringstream s;
    switch (t.kind) {
        case Topology::Kind::Chain: s << "Chain(" << t.d << ")"; break;
        case Topology::Kind::Train: s << "Train(" << t.d << ")"; break;
        case Topology::Kind::Grid: s << "Grid(" << t.rows << "," << t.cols << ")"; break;
        case Topology::Kind::General: s << "General"; break;
    }
    return s.str();
}

const DenseTensor& TensorNetwork::tensor(NodeId n) const {
    auto it = nodes_.find(n);
    if (it == nodes_.end()) throw ArgumentError("network: unknown node id");
    return it->second;
}

const std::vector<PhysicalMode>& TensorNetwork::physical_of(NodeId n) const {
    auto it = physical_.find(n);
    if (it == physical_.end()) throw ArgumentError("network: unknown node id");
    return it->second;
}

const Bond& TensorNetwork::bond(EdgeId e) const {
    for (const Bond& b : bonds_)
        if (b.id == e) return b;
    throw ArgumentError("network: unknown bond id");
}

Bond& TensorNetwork::bond(EdgeId e) {
    for (Bond& b : bonds_)
        if (b.id == e) return b;
    throw ArgumentError("network: unknown bond id");
}

const Bond* TensorNetwork::find_bond_by_label(const std::string& label) const {
    for (const Bond& b : bonds_)
        if (b.label == label) return &b;
    return nullptr;
}

std::vector<EdgeId> TensorNetwork::bonds_at(NodeId n) const {
    std::vector<EdgeId> out;
    for (const Bond& b : bonds_)
        if (b.touches(n)) out.push_back(b.id);
    return out;
}

std::vector<EdgeId> TensorNetwork::bonds_between(NodeId a, NodeId b) const {
    std::vector<EdgeId> out;
    for (const Bond& bd : bonds_)
        if ((bd.a == a && bd.b == b) || (bd.a == b && bd.b == a)) out.push_back(bd.id);
    return out;
}

std::size_t TensorNetwork::degree(NodeId n) const { return bonds_at(n).size(); }

std::vector<std::string> TensorNetwork::canonical_labels(NodeId n) const {
    std::vector<std::string> bond_labels;
    for (const Bond& b : bonds_)
        if (b.touches(n)) bond_labels.push_back(b.label);
    std::sort(bond_labels.begin(), bond_labels.end());
    std::vector<std::string> phys_labels;
    for (const PhysicalMode& p : physical_of(n)) phys_labels.push_back(p.label);
    std::sort(phys_labels.begin(), phys_labels.end());
    bond_labels.insert(bond_labels.end(), phys_labels.begin(), phys_labels.end());
    return bond_labels;
}

void TensorNetwork::canonicalize(NodeId n) {
    const std::vector<std::string> want = canonical_labels(n);
    const DenseTensor& t = nodes_.at(n);
    if (t.labels() == want) return;
    // Mid-construction the tensor may not yet cover all incident modes;
    // leave it alone then, validate() reports any terminal mismatch.
    std::multiset<std::string> a(want.begin(), want.end());
    std::multiset<std::string> b(t.labels().begin(), t.labels().end());
    if (a == b) nodes_.at(n) = transpose(t, want);
}

NodeId TensorNetwork::add_node(DenseTensor tensor, std::vector<PhysicalMode> physical) {
    return add_node_with_id(next_node_, std::move(tensor), std::move(physical));
}

NodeId TensorNetwork::add_node_with_id(NodeId id, DenseTensor tensor,
                                       std::vector<PhysicalMode> physical) {
    if (nodes_.count(id)) throw ArgumentError("network: node id already in use");
    nodes_.emplace(id, std::move(tensor));
    physical_.emplace(id, std::move(physical));
    next_node_ = std::max(next_node_, id + 1);
    canonicalize(id);
    return id;
}

EdgeId TensorNetwork::add_bond(const std::string& label, NodeId a, NodeId b, std::int64_t rank) {
    if (a == b) throw ArgumentError("network: self-loop bond");
    if (!nodes_.count(a) || !nodes_.count(b)) throw ArgumentError("network: bond endpoint missing");
    if (has_bond_label(label)) throw ArgumentError("network: duplicate bond label '" + label + "'");
    if (rank < 1) throw ArgumentError("network: bond rank must be positive");
    bonds_.push_back(Bond{next_edge_++, label, a, b, rank});
    const EdgeId id = bonds_.back().id;
    canonicalize(a);
    canonicalize(b);
    return id;
}

void TensorNetwork::remove_node(NodeId n) {
    if (!nodes_.count(n)) throw ArgumentError("network: unknown node id");
    if (!bonds_at(n).empty()) throw ArgumentError("network: node still has incident bonds");
    nodes_.erase(n);
    physical_.erase(n);
}

void TensorNetwork::remove_bond(EdgeId e) {
    auto it = std::find_if(bonds_.begin(), bonds_.end(), [&](const Bond& b) { return b.id == e; });
    if (it == bonds_.end()) throw ArgumentError("network: unknown bond id");
    bonds_.erase(it);
}

void TensorNetwork::replace_tensor(NodeId n, DenseTensor tensor) {
    if (!nodes_.count(n)) throw ArgumentError("network: unknown node id");
    nodes_.at(n) = std::move(tensor);
    canonicalize(n);
}

void TensorNetwork::set_physical(NodeId n, std::vector<PhysicalMode> physical) {
    if (!nodes_.count(n)) throw ArgumentError("network: unknown node id");
    physical_.at(n) = std::move(physical);
    canonicalize(n);
}

void TensorNetwork::reattach_bond(EdgeId e, NodeId from, NodeId to) {
    Bond& b = bond(e);
    if (!b.touches(from)) throw ArgumentError("network: bond does not touch the node to detach");
    if (!nodes_.count(to)) throw ArgumentError("network: unknown node id");
    (b.a == from ? b.a : b.b) = to;
    if (nodes_.count(from)) canonicalize(from);
    canonicalize(to);
}

void TensorNetwork::rewire_bond(EdgeId e, NodeId a, NodeId b, std::int64_t rank) {
    Bond& bd = bond(e);
    if (!nodes_.count(a) || !nodes_.count(b)) throw ArgumentError("network: unknown node id");
    if (a == b) throw ArgumentError("network: bond endpoints must differ");
    if (rank < 1) throw ArgumentError("network: bond rank must be positive");
    NodeId old_a = bd.a;
    NodeId old_b = bd.b;
    bd.a = a;
    bd.b = b;
    bd.rank = rank;
    for (NodeId n : {old_a, old_b, a, b})
        if (nodes_.count(n)) canonicalize(n);
}

void TensorNetwork::set_bond_rank(EdgeId e, std::int64_t rank) {
    if (rank < 1) throw ArgumentError("network: bond rank must be positive");
    bond(e).rank = rank;
}

bool TensorNetwork::has_bond_label(const std::string& label) const {
    return find_bond_by_label(label) != nullptr;
}

std::string TensorNetwork::fresh_bond_label(const std::string& stem) {
    for (;;) {
        std::string candidate = stem + std::to_string(++label_counter_);
        if (!has_bond_label(candidate)) return candidate;
    }
}

namespace {

/// Union-find over node ids.
class Components {
public:
    explicit Components(const std::map<NodeId, DenseTensor>& nodes) {
        for (const auto& [id, t] : nodes) parent_[id] = id;
    }
    NodeId find(NodeId x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    bool unite(NodeId a, NodeId b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent_[b] = a;
        return true;
    }
    std::size_t count() {
        std::set<NodeId> roots;
        for (const auto& [id, p] : parent_) roots.insert(find(id));
        return roots.size();
    }

private:
    std::map<NodeId, NodeId> parent_;
};

bool connected(const TensorNetwork& net) {
    if (net.nodes().empty()) return false;
    Components c(net.nodes());
    for (const Bond& b : net.bonds()) c.unite(b.a, b.b);
    return c.count() == 1;
}

} // namespace

std::vector<Violation> validate(const TensorNetwork& net) {
    std::vector<Violation> out;
    auto flag = [&](const std::string& code, const std::string& msg) {
        out.push_back(Violation{code, msg});
    };

    if (net.nodes().empty()) {
        flag("empty", "network has no nodes");
        return out;
    }

    std::set<std::string> labels;
    for (const Bond& b : net.bonds()) {
        if (!labels.insert(b.label).second)
            flag("duplicate_bond_label", "bond label '" + b.label + "' used more than once");
        if (b.a == b.b)
            flag("self_loop", "bond '" + b.label + "' is a self-loop");
        if (!net.nodes().count(b.a) || !net.nodes().count(b.b))
            flag("bad_endpoint", "bond '" + b.label + "' references a missing node");
        if (b.rank < 1) {
            std::ostringstream msg;
            msg << "bond '" << b.label << "' has non-positive rank " << b.rank;
            flag("bad_rank", msg.str());
        }
    }

    for (const auto& [id, tensor] : net.nodes()) {
        const auto& phys = net.physical_of(id);
        if (phys.size() != 1) {
            std::ostringstream msg;
            msg << "node " << id << " carries " << phys.size() << " physical modes, expected 1";
            flag("physical_count", msg.str());
        }

        // Expected mode multiset: one per incident bond plus the physical modes.
        std::multiset<std::string> expected;
        std::map<std::string, std::int64_t> expected_extent;
        for (const Bond& b : net.bonds())
            if (b.touches(id)) {
                expected.insert(b.label);
                expected_extent[b.label] = b.rank;
            }
        for (const PhysicalMode& p : phys) {
            expected.insert(p.label);
            expected_extent[p.label] = p.dim;
        }
        std::multiset<std::string> actual(tensor.labels().begin(), tensor.labels().end());
        if (expected != actual) {
            std::ostringstream msg;
            msg << "node " << id << " tensor modes do not match incident bonds + physical mode";
            flag("mode_set", msg.str());
            continue;
        }
        for (std::size_t i = 0; i < tensor.order(); ++i) {
            const std::string& l = tensor.labels()[i];
            if (tensor.shape()[i] != expected_extent[l]) {
                std::ostringstream msg;
                msg << "node " << id << " mode '" << l << "' has extent " << tensor.shape()[i]
                    << ", expected " << expected_extent[l];
                flag("extent_mismatch", msg.str());
            }
        }
        if (tensor.labels() != net.canonical_labels(id)) {
            std::ostringstream msg;
            msg << "node " << id << " tensor modes are not in canonical order";
            flag("mode_order", msg.str());
        }
    }

    if (!connected(net)) flag("disconnected", "bond graph is not connected");
    return out;
}

namespace {

std::string bond_label_chain(std::int64_t i) { return "j_" + std::to_string(i); }

struct Edge {
    std::string label;
    std::int64_t a; // 1-based node positions
    std::int64_t b;
};

/// Bond list of an R x C grid in the fixed numbering: per row its horizontal
/// bonds left to right, then the verticals down to the next row.
std::vector<Edge> grid_edges(std::int64_t rows, std::int64_t cols) {
    std::vector<Edge> edges;
    std::int64_t counter = 0;
    auto pos = [&](std::int64_t r, std::int64_t c) { return r * cols + c + 1; };
    for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c + 1 < cols; ++c)
            edges.push_back({bond_label_chain(++counter), pos(r, c), pos(r, c + 1)});
        if (r + 1 < rows)
            for (std::int64_t c = 0; c < cols; ++c)
                edges.push_back({bond_label_chain(++counter), pos(r, c), pos(r + 1, c)});
    }
    return edges;
}

} // namespace

TensorNetwork build(const Topology& topology, const std::vector<std::int64_t>& phys_dims,
                    const std::vector<std::int64_t>& ranks, const Fill& fill) {
    std::int64_t node_count = 0;
    std::vector<Edge> edges;
    switch (topology.kind) {
        case Topology::Kind::Chain: {
            if (topology.d < 3) throw ArgumentError("build: chain needs d >= 3");
            node_count = topology.d;
            for (std::int64_t i = 1; i < topology.d; ++i)
                edges.push_back({bond_label_chain(i), i, i + 1});
            edges.push_back({bond_label_chain(topology.d), topology.d, 1});
            break;
        }
        case Topology::Kind::Train: {
            if (topology.d < 2) throw ArgumentError("build: train needs d >= 2");
            node_count = topology.d;
            for (std::int64_t i = 1; i < topology.d; ++i)
                edges.push_back({bond_label_chain(i), i, i + 1});
            break;
        }
        case Topology::Kind::Grid: {
            if (topology.rows < 2 || topology.cols < 2)
                throw ArgumentError("build: grid needs rows, cols >= 2");
            node_count = topology.rows * topology.cols;
            edges = grid_edges(topology.rows, topology.cols);
            break;
        }
        case Topology::Kind::General:
            throw ArgumentError("build: cannot build a General topology");
    }

    if (static_cast<std::int64_t>(phys_dims.size()) != node_count)
        throw ArgumentError("build: phys_dims must have one entry per node");
    if (ranks.size() != edges.size())
        throw ArgumentError("build: ranks must have one entry per bond");

    TensorNetwork net;
    for (std::int64_t i = 1; i <= node_count; ++i) {
        const std::string phys_label = "p" + std::to_string(i);
        const std::int64_t dim = phys_dims[static_cast<std::size_t>(i - 1)];
        // Placeholder tensor; resized once the incident bonds exist.
        net.add_node_with_id(static_cast<NodeId>(i), DenseTensor({phys_label}, {dim}),
                             {PhysicalMode{phys_label, dim}});
    }
    for (std::size_t e = 0; e < edges.size(); ++e)
        net.add_bond(edges[e].label, static_cast<NodeId>(edges[e].a),
                     static_cast<NodeId>(edges[e].b), ranks[e]);

    SplitMix64 rng(fill.seed);
    for (std::int64_t i = 1; i <= node_count; ++i) {
        const NodeId id = static_cast<NodeId>(i);
        const std::vector<std::string> labels = net.canonical_labels(id);
        std::vector<std::int64_t> shape;
        for (const std::string& l : labels) {
            if (const Bond* b = net.find_bond_by_label(l)) {
                shape.push_back(b->rank);
            } else {
                shape.push_back(net.physical_of(id)[0].dim);
            }
        }
        DenseTensor t(labels, shape);
        if (fill.kind == Fill::Kind::SeededRandom)
            for (double& v : t.data()) v = rng.next_symmetric();
        net.replace_tensor(id, std::move(t));
    }
    return net;
}

TensorNetwork build_uniform(const Topology& topology, std::int64_t phys_dim, std::int64_t rank,
                            const Fill& fill) {
    std::int64_t node_count = 0, bond_count = 0;
    switch (topology.kind) {
        case Topology::Kind::Chain: node_count = bond_count = topology.d; break;
        case Topology::Kind::Train:
            node_count = topology.d;
            bond_count = topology.d - 1;
            break;
        case Topology::Kind::Grid:
            node_count = topology.rows * topology.cols;
            bond_count = 2 * topology.rows * topology.cols - topology.rows - topology.cols;
            break;
        case Topology::Kind::General:
            throw ArgumentError("build: cannot build a General topology");
    }
    return build(topology, std::vector<std::int64_t>(static_cast<std::size_t>(node_count), phys_dim),
                 std::vector<std::int64_t>(static_cast<std::size_t>(bond_count), rank), fill);
}

bool is_cycle_graph(const TensorNetwork& net) {
    const std::size_t n = net.nodes().size();
    if (n < 3 || net.bonds().size() != n) return false;
    for (const auto& [id, t] : net.nodes())
        if (net.degree(id) != 2) return false;
    return connected(net);
}

bool is_path_graph(const TensorNetwork& net) {
    const std::size_t n = net.nodes().size();
    if (n < 2 || net.bonds().size() != n - 1) return false;
    std::size_t ends = 0;
    for (const auto& [id, t] : net.nodes()) {
        const std::size_t deg = net.degree(id);
        if (deg > 2 || deg == 0) return false;
        if (deg == 1) ++ends;
    }
    return ends == 2 && connected(net);
}

std::vector<NodeId> path_node_order(const TensorNetwork& net) {
    const bool cycle = is_cycle_graph(net);
    if (!cycle && !is_path_graph(net))
        throw ArgumentError("path_node_order: bond graph is neither a path nor a cycle");

    NodeId start = 0;
    if (cycle) {
        start = net.nodes().begin()->first; // smallest id
    } else {
        for (const auto& [id, t] : net.nodes())
            if (net.degree(id) == 1) {
                start = id;
                break; // smallest-id endpoint (map is ordered)
            }
    }

    std::vector<NodeId> order{start};
    std::set<NodeId> seen{start};
    NodeId current = start;
    for (;;) {
        std::vector<NodeId> next;
        for (EdgeId e : net.bonds_at(current)) {
            const NodeId o = net.bond(e).other(current);
            if (!seen.count(o)) next.push_back(o);
        }
        if (next.empty()) break;
        std::sort(next.begin(), next.end());
        current = next.front();
        order.push_back(current);
        seen.insert(current);
    }
    return order;
}

std::optional<GridLayout> detect_grid(const TensorNetwork& net) {
    const std::int64_t n = static_cast<std::int64_t>(net.nodes().size());
    if (n < 4 || !connected(net)) return std::nullopt;

    // Parallel bonds disqualify a lattice.
    std::set<std::pair<NodeId, NodeId>> seen_pairs;
    std::map<NodeId, std::set<NodeId>> adj;
    for (const Bond& b : net.bonds()) {
        auto key = std::minmax(b.a, b.b);
        if (!seen_pairs.insert(key).second) return std::nullopt;
        adj[b.a].insert(b.b);
        adj[b.b].insert(b.a);
    }

    if (n == 4 && is_cycle_graph(net)) {
        // A 2x2 lattice is a 4-cycle; orient it from the smallest id.
        const NodeId origin = net.nodes().begin()->first;
        std::vector<NodeId> nb(adj[origin].begin(), adj[origin].end());
        NodeId diag = 0;
        for (const auto& [id, t] : net.nodes())
            if (id != origin && id != nb[0] && id != nb[1]) diag = id;
        return GridLayout{2, 2, {origin, nb[0], nb[1], diag}};
    }

    std::vector<NodeId> corners;
    for (const auto& [id, t] : net.nodes()) {
        const std::size_t deg = adj[id].size();
        if (deg < 2 || deg > 4) return std::nullopt;
        if (deg == 2) corners.push_back(id);
    }
    if (corners.size() != 4) return std::nullopt;

    auto bfs = [&](NodeId src) {
        std::map<NodeId, std::int64_t> dist;
        dist[src] = 0;
        std::vector<NodeId> frontier{src};
        while (!frontier.empty()) {
            std::vector<NodeId> next;
            for (NodeId u : frontier)
                for (NodeId v : adj[u])
                    if (!dist.count(v)) {
                        dist[v] = dist[u] + 1;
                        next.push_back(v);
                    }
            frontier = std::move(next);
        }
        return dist;
    };

    std::sort(corners.begin(), corners.end());
    const NodeId o = corners[0];
    auto d0 = bfs(o);

    // Nearest other corner fixes the column count.
    NodeId c1 = 0;
    std::int64_t best = -1;
    for (std::size_t i = 1; i < corners.size(); ++i) {
        const std::int64_t d = d0[corners[i]];
        if (best < 0 || d < best) {
            best = d;
            c1 = corners[i];
        }
    }
    const std::int64_t cols = best + 1;
    if (cols < 2 || n % cols != 0) return std::nullopt;
    const std::int64_t rows = n / cols;
    if (rows < 2) return std::nullopt;
    if (static_cast<std::int64_t>(net.bonds().size()) != 2 * rows * cols - rows - cols)
        return std::nullopt;

    auto d1 = bfs(c1);
    GridLayout layout{rows, cols, std::vector<NodeId>(static_cast<std::size_t>(n), 0)};
    std::set<std::size_t> assigned;
    for (const auto& [id, t] : net.nodes()) {
        const std::int64_t s = d0[id]; // r + c
        // r + c = d0, r + (cols-1-c) = d1  =>  c = (d0 - d1 + cols - 1) / 2
        const std::int64_t twice_c = s - d1[id] + cols - 1;
        if (twice_c < 0 || twice_c % 2 != 0) return std::nullopt;
        const std::int64_t c = twice_c / 2;
        const std::int64_t r = s - c;
        if (c < 0 || c >= cols || r < 0 || r >= rows) return std::nullopt;
        const std::size_t slot = static_cast<std::size_t>(r * cols + c);
        if (!assigned.insert(slot).second) return std::nullopt;
        layout.node_at[slot] = id;
    }

    // Every bond must join lattice neighbours.
    std::map<NodeId, std::pair<std::int64_t, std::int64_t>> coord;
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < cols; ++c) coord[layout.at(r, c)] = {r, c};
    for (const Bond& b : net.bonds()) {
        const auto [ra, ca] = coord[b.a];
        const auto [rb, cb] = coord[b.b];
        if (std::abs(ra - rb) + std::abs(ca - cb) != 1) return std::nullopt;
    }
    return layout;
}

namespace {

/// Structural classification of an explicit edge list over the given nodes.
Topology classify_structure(const TensorNetwork& net, const std::vector<const Bond*>& edges) {
    const std::size_t n = net.nodes().size();
    std::map<NodeId, std::size_t> deg;
    for (const auto& [id, t] : net.nodes()) deg[id] = 0;
    Components comp(net.nodes());
    bool parallel = false;
    std::set<std::pair<NodeId, NodeId>> pairs;
    for (const Bond* b : edges) {
        ++deg[b->a];
        ++deg[b->b];
        comp.unite(b->a, b->b);
        if (!pairs.insert(std::minmax(b->a, b->b)).second) parallel = true;
    }
    if (comp.count() != 1) return Topology::general();

    std::size_t ends = 0;
    std::size_t deg_over_2 = 0;
    for (const auto& [id, d] : deg) {
        if (d == 1) ++ends;
        if (d > 2) ++deg_over_2;
    }
    if (!parallel && deg_over_2 == 0) {
        if (edges.size() == n && n >= 3 && ends == 0)
            return Topology::chain(static_cast<std::int64_t>(n));
        if (edges.size() == n - 1 && n >= 2 && ends == 2)
            return Topology::train(static_cast<std::int64_t>(n));
    }

    // Lattice check on a copy of the structure with exactly these edges.
    TensorNetwork skeleton;
    for (const auto& [id, t] : net.nodes())
        skeleton.add_node_with_id(id, DenseTensor({"p" + std::to_string(id)}, {1}),
                                  {PhysicalMode{"p" + std::to_string(id), 1}});
    for (const Bond* b : edges) skeleton.add_bond(b->label, b->a, b->b, 1);
    if (auto g = detect_grid(skeleton)) return Topology::grid(g->rows, g->cols);
    return Topology::general();
}

} // namespace

Topology topology_of(const TensorNetwork& net) {
    if (net.nodes().empty()) return Topology::general();

    // Neglect rank-1 bonds, but keep the graph connected: dropped bonds are
    // re-added in label order wherever they still join two components.
    std::vector<const Bond*> kept;
    std::vector<const Bond*> dropped;
    for (const Bond& b : net.bonds())
        (b.rank > 1 ? kept : dropped).push_back(&b);
    std::sort(dropped.begin(), dropped.end(),
              [](const Bond* x, const Bond* y) { return x->label < y->label; });

    Components comp(net.nodes());
    for (const Bond* b : kept) comp.unite(b->a, b->b);
    for (const Bond* b : dropped)
        if (comp.unite(b->a, b->b)) kept.push_back(b);

    return classify_structure(net, kept);
}

} // namespace tntopo
