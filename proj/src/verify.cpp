#include "tntopo/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "tntopo/errors.hpp"

namespace tntopo {
namespace {

std::vector<std::string> shared_labels(const DenseTensor& a, const DenseTensor& b) {
    std::vector<std::string> out;
    for (const auto& l : a.labels())
        if (b.has_label(l)) out.push_back(l);
    return out;
}

DenseTensor scaled_copy(const DenseTensor& t, double factor) {
    std::vector<double> d = t.data();
    for (double& v : d) v *= factor;
    return DenseTensor(t.labels(), t.shape(), std::move(d));
}

double max_abs(const DenseTensor& t) {
    double mx = 0.0;
    for (double v : t.data()) mx = std::max(mx, std::abs(v));
    return mx;
}

// Keeps magnitudes comfortably inside the double range; power-of-two factors
// leave every mantissa bit untouched.
void maybe_rescale(DenseTensor& t, std::int64_t& exponent) {
    const double mx = max_abs(t);
    if (mx == 0.0 || !std::isfinite(mx)) return;
    if (mx > 0x1p+256 || mx < 0x1p-256) {
        const int e = std::ilogb(mx) + 1;
        t = scaled_copy(t, std::ldexp(1.0, -e));
        exponent += e;
    }
}

// Greedy pairwise contraction, smallest intermediate first; pairs sharing a
// bond are preferred over outer products. Deterministic tie-breaking by
// position keeps oracle results reproducible.
DenseTensor contract_all(std::vector<DenseTensor> work) {
    if (work.empty()) return DenseTensor::scalar(1.0);
    while (work.size() > 1) {
        std::size_t bi = 0;
        std::size_t bj = 1;
        double best = std::numeric_limits<double>::infinity();
        bool best_shares = false;
        for (std::size_t i = 0; i + 1 < work.size(); ++i) {
            for (std::size_t j = i + 1; j < work.size(); ++j) {
                const std::vector<std::string> shared = shared_labels(work[i], work[j]);
                const bool shares = !shared.empty();
                if (best_shares && !shares) continue;
                double size = static_cast<double>(work[i].size()) * static_cast<double>(work[j].size());
                for (const auto& l : shared) {
                    const double e = static_cast<double>(work[i].extent(l));
                    size /= e * e;
                }
                if ((shares && !best_shares) || size < best) {
                    bi = i;
                    bj = j;
                    best = size;
                    best_shares = shares;
                }
            }
        }
        work[bi] = contract(work[bi], work[bj], shared_labels(work[bi], work[bj]));
        work.erase(work.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return std::move(work.front());
}

bool sweepable(const TensorNetwork& net) {
    return net.nodes().size() == 1 || is_path_graph(net) || is_cycle_graph(net);
}

/// Largest intermediate a sweep may materialize before it must defer to the
/// brute-force path (entries, so 128 MiB of doubles).
constexpr std::int64_t kSweepIntermediateCap = std::int64_t{1} << 24;

/// Tracks the open modes of a sweep accumulator symbolically; `absorb` toggles
/// a tensor's modes (shared ones close, new ones open) and records the peak.
struct SweepCostSim {
    std::map<std::string, double> open;
    double worst = 1.0;

    void absorb(const std::vector<std::pair<std::string, double>>& modes) {
        for (const auto& [label, rank] : modes) {
            const auto it = open.find(label);
            if (it != open.end())
                open.erase(it);
            else
                open[label] = rank;
        }
        double p = 1.0;
        for (const auto& [label, rank] : open) p *= rank;
        worst = std::max(worst, p);
    }
};

/// Contracts acc with a node and its sweep partner, slicing over the modes the
/// pair shares (physical or severed-open ones): those never enter an
/// intermediate, which keeps the peak at the product of the open bond ranks.
DenseTensor absorb_pair(const DenseTensor& acc, const DenseTensor& t, const DenseTensor& twin) {
    const std::vector<std::string> shared = shared_labels(t, twin);
    if (shared.empty()) {
        DenseTensor r = contract(acc, t, shared_labels(acc, t));
        return contract(r, twin, shared_labels(r, twin));
    }
    std::vector<std::string> la = shared;
    std::vector<std::string> lb = shared;
    for (const auto& l : t.labels())
        if (std::find(shared.begin(), shared.end(), l) == shared.end()) la.push_back(l);
    for (const auto& l : twin.labels())
        if (std::find(shared.begin(), shared.end(), l) == shared.end()) lb.push_back(l);
    const DenseTensor ta = transpose(t, la);
    const DenseTensor tb = transpose(twin, lb);

    std::int64_t joint = 1;
    for (const auto& l : shared) joint *= ta.extent(l);
    const std::vector<std::string> ra(la.begin() + static_cast<std::ptrdiff_t>(shared.size()), la.end());
    const std::vector<std::string> rb(lb.begin() + static_cast<std::ptrdiff_t>(shared.size()), lb.end());
    std::vector<std::int64_t> sa_shape;
    std::vector<std::int64_t> sb_shape;
    for (const auto& l : ra) sa_shape.push_back(ta.extent(l));
    for (const auto& l : rb) sb_shape.push_back(tb.extent(l));
    const std::int64_t block_a = ta.size() / joint;
    const std::int64_t block_b = tb.size() / joint;

    DenseTensor out;
    for (std::int64_t p = 0; p < joint; ++p) {
        const auto* da = ta.data().data() + p * block_a;
        const auto* db = tb.data().data() + p * block_b;
        DenseTensor sa(ra, sa_shape, std::vector<double>(da, da + block_a));
        DenseTensor sb(rb, sb_shape, std::vector<double>(db, db + block_b));
        DenseTensor c = contract(acc, sa, shared_labels(acc, sa));
        c = contract(c, sb, shared_labels(c, sb));
        if (p == 0) {
            out = std::move(c);
        } else {
            for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += c.data()[i];
        }
    }
    return out;
}

std::vector<NodeId> sweep_order(const TensorNetwork& net) {
    if (net.nodes().size() == 1) return {net.nodes().begin()->first};
    return path_node_order(net);
}

std::vector<std::string> phys_key(const TensorNetwork& net, NodeId n) {
    std::vector<std::string> key;
    for (const auto& pm : net.physical_of(n)) key.push_back(pm.label);
    std::sort(key.begin(), key.end());
    return key;
}

std::map<std::vector<std::string>, NodeId> phys_index(const TensorNetwork& net) {
    std::map<std::vector<std::string>, NodeId> index;
    for (const auto& [id, t] : net.nodes()) {
        (void)t;
        if (!index.emplace(phys_key(net, id), id).second)
            throw UnsupportedError("inner product: two nodes carry the same physical labels");
    }
    return index;
}

void check_same_space(const TensorNetwork& a, const TensorNetwork& b) {
    std::vector<std::pair<std::string, std::int64_t>> pa;
    std::vector<std::pair<std::string, std::int64_t>> pb;
    for (const auto& [id, modes] : a.physical())
        for (const auto& pm : modes) pa.emplace_back(pm.label, pm.dim);
    for (const auto& [id, modes] : b.physical())
        for (const auto& pm : modes) pb.emplace_back(pm.label, pm.dim);
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    if (pa != pb) throw ArgumentError("networks carry different physical modes");
}

DenseTensor with_prefixed_bonds(const TensorNetwork& net, NodeId n, const std::string& prefix) {
    const DenseTensor& t = net.tensor(n);
    std::vector<std::string> labels = t.labels();
    for (auto& l : labels)
        if (net.has_bond_label(l)) l = prefix + l;
    return DenseTensor(labels, t.shape(), t.data());
}

double scaled_sqrt(double mantissa, std::int64_t exponent) {
    double m = std::max(mantissa, 0.0);
    if (exponent % 2 != 0) {
        m *= 2.0;
        exponent -= 1;
    }
    return std::ldexp(std::sqrt(m), static_cast<int>(exponent / 2));
}

} // namespace

double ScaledValue::value() const {
    if (exponent > 4000) return mantissa * std::numeric_limits<double>::infinity();
    if (exponent < -4000) return mantissa * 0.0;
    return std::ldexp(mantissa, static_cast<int>(exponent));
}

DenseTensor oracle_contract(const TensorNetwork& net, std::int64_t cap) {
    if (net.nodes().empty()) return DenseTensor::scalar(1.0);
    double total = 1.0;
    std::vector<std::string> order;
    for (const auto& [id, modes] : net.physical()) {
        (void)id;
        for (const auto& pm : modes) {
            total *= static_cast<double>(pm.dim);
            order.push_back(pm.label);
        }
    }
    if (total > static_cast<double>(cap)) {
        std::ostringstream msg;
        msg << "oracle: full tensor needs " << total << " entries, cap is " << cap;
        throw UnsupportedError(msg.str());
    }
    std::vector<DenseTensor> work;
    work.reserve(net.nodes().size());
    for (const auto& [id, t] : net.nodes()) {
        (void)id;
        work.push_back(t);
    }
    DenseTensor r = contract_all(std::move(work));
    if (r.order() != order.size())
        throw UnsupportedError("oracle: non-physical modes remained open");
    return transpose(r, order);
}

namespace {

/// Bond modes of a node under the sweep prefix, as (label, rank) pairs.
std::vector<std::pair<std::string, double>> prefixed_bond_modes(const TensorNetwork& net, NodeId n,
                                                                const std::string& prefix) {
    std::vector<std::pair<std::string, double>> modes;
    for (EdgeId e : net.bonds_at(n))
        modes.emplace_back(prefix + net.bond(e).label, static_cast<double>(net.bond(e).rank));
    return modes;
}

} // namespace

ScaledValue inner_product_scaled(const TensorNetwork& a, const TensorNetwork& b) {
    if (!sweepable(a) || !sweepable(b))
        throw UnsupportedError("inner product sweeps need string or ring shaped networks");
    check_same_space(a, b);
    const auto b_by_phys = phys_index(b);
    (void)phys_index(a); // also reject ambiguous pairing on the left side
    const auto partner = [&](NodeId an) {
        const auto it = b_by_phys.find(phys_key(a, an));
        if (it == b_by_phys.end())
            throw UnsupportedError("inner product: no partner node for a physical mode");
        return it->second;
    };

    std::vector<NodeId> order = sweep_order(a);
    if (is_cycle_graph(a) && order.size() >= 3) {
        // The bonds at the cut stay open for the whole sweep; cut where their
        // rank product is smallest (first minimum on ties).
        std::size_t best = 0;
        double best_cost = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < order.size(); ++k) {
            const NodeId u = order[k];
            const NodeId v = order[(k + 1) % order.size()];
            double cost = 1.0;
            for (EdgeId e : a.bonds_between(u, v)) cost *= static_cast<double>(a.bond(e).rank);
            const auto bu = b_by_phys.find(phys_key(a, u));
            const auto bv = b_by_phys.find(phys_key(a, v));
            if (bu != b_by_phys.end() && bv != b_by_phys.end())
                for (EdgeId e : b.bonds_between(bu->second, bv->second))
                    cost *= static_cast<double>(b.bond(e).rank);
            if (cost < best_cost) {
                best = k;
                best_cost = cost;
            }
        }
        std::rotate(order.begin(), order.begin() + static_cast<std::ptrdiff_t>((best + 1) % order.size()),
                    order.end());
    }

    SweepCostSim sim;
    for (NodeId an : order) {
        sim.absorb(prefixed_bond_modes(a, an, "swA:"));
        sim.absorb(prefixed_bond_modes(b, partner(an), "swB:"));
    }
    if (sim.worst > static_cast<double>(kSweepIntermediateCap)) {
        std::ostringstream msg;
        msg << "inner product: sweep intermediate needs " << sim.worst << " entries, cap is "
            << kSweepIntermediateCap;
        throw UnsupportedError(msg.str());
    }

    DenseTensor acc = DenseTensor::scalar(1.0);
    std::int64_t exponent = 0;
    for (NodeId an : order) {
        const DenseTensor ta = with_prefixed_bonds(a, an, "swA:");
        const DenseTensor tb = with_prefixed_bonds(b, partner(an), "swB:");
        acc = absorb_pair(acc, ta, tb);
        maybe_rescale(acc, exponent);
    }
    if (acc.order() != 0) throw UnsupportedError("inner product sweep left modes open");
    return {acc.data()[0], exponent};
}

double inner_product(const TensorNetwork& a, const TensorNetwork& b) {
    return inner_product_scaled(a, b).value();
}

double network_norm(const TensorNetwork& net, std::int64_t cap) {
    if (sweepable(net)) {
        try {
            const ScaledValue s = inner_product_scaled(net, net);
            return scaled_sqrt(s.mantissa, s.exponent);
        } catch (const UnsupportedError&) {
            // sweep intermediates too large; the oracle may still fit
        }
    }
    return frobenius_norm(oracle_contract(net, cap));
}

double relative_error(const TensorNetwork& a, const TensorNetwork& b, std::int64_t cap) {
    check_same_space(a, b);
    if (sweepable(a) && sweepable(b)) {
        try {
            const ScaledValue aa = inner_product_scaled(a, a);
            const ScaledValue bb = inner_product_scaled(b, b);
            if (aa.mantissa <= 0.0)
                return bb.mantissa <= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
            const ScaledValue ab = inner_product_scaled(a, b);
            const auto ratio = [](const ScaledValue& x, const ScaledValue& y) {
                return std::ldexp(x.mantissa / y.mantissa, static_cast<int>(x.exponent - y.exponent));
            };
            // ||a-b||^2 / ||a||^2 = 1 - 2<a,b>/<a,a> + <b,b>/<a,a>
            const double radicand = 1.0 - 2.0 * ratio(ab, aa) + ratio(bb, aa);
            // the expanded form cannot resolve squared distances below the
            // fp cancellation floor; values that small mean exact agreement
            if (std::abs(radicand) <= 1e-14) return 0.0;
            return std::sqrt(std::max(radicand, 0.0));
        } catch (const UnsupportedError&) {
            // sweep intermediates too large; the oracle may still fit
        }
    }
    const DenseTensor ta = oracle_contract(a, cap);
    const DenseTensor tb = transpose(oracle_contract(b, cap), ta.labels());
    std::vector<double> diff(ta.data());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= tb.data()[i];
    const double nd = frobenius_norm(DenseTensor(ta.labels(), ta.shape(), std::move(diff)));
    const double na = frobenius_norm(ta);
    if (na == 0.0) return nd == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return nd / na;
}

namespace {

// ||C||_F of one connected remainder component.
double component_norm(const TensorNetwork& net, const std::vector<NodeId>& members,
                      std::int64_t cap) {
    if (members.size() == 1) return frobenius_norm(net.tensor(members.front()));

    const std::set<NodeId> inside(members.begin(), members.end());
    std::set<std::string> internal_labels;
    std::map<NodeId, std::vector<NodeId>> neighbours;
    std::size_t internal_edges = 0;
    for (const Bond& b : net.bonds()) {
        if (inside.count(b.a) && inside.count(b.b)) {
            internal_labels.insert(b.label);
            neighbours[b.a].push_back(b.b);
            neighbours[b.b].push_back(b.a);
            ++internal_edges;
        }
    }
    bool path_shaped = internal_edges + 1 == members.size();
    for (const auto& [n, adj] : neighbours)
        if (adj.size() > 2) path_shaped = false;

    if (path_shaped) {
        NodeId start = 0;
        for (NodeId n : members)
            if (neighbours[n].size() <= 1) {
                start = n;
                break;
            }
        std::vector<NodeId> walk;
        NodeId prev = 0;
        NodeId cur = start;
        for (std::size_t step = 0; step < members.size(); ++step) {
            walk.push_back(cur);
            NodeId next = 0;
            for (NodeId cand : neighbours[cur])
                if (cand != prev) next = cand;
            prev = cur;
            cur = next;
        }

        SweepCostSim sim;
        for (NodeId n : walk) {
            std::vector<std::pair<std::string, double>> raw;
            std::vector<std::pair<std::string, double>> doubled;
            for (EdgeId e : net.bonds_at(n)) {
                const Bond& b = net.bond(e);
                if (!internal_labels.count(b.label)) continue; // severed: sliced out
                raw.emplace_back(b.label, static_cast<double>(b.rank));
                doubled.emplace_back("env:" + b.label, static_cast<double>(b.rank));
            }
            sim.absorb(raw);
            sim.absorb(doubled);
        }
        if (sim.worst <= static_cast<double>(kSweepIntermediateCap)) {
            DenseTensor acc = DenseTensor::scalar(1.0);
            std::int64_t exponent = 0;
            for (NodeId n : walk) {
                const DenseTensor& t = net.tensor(n);
                std::vector<std::string> twin_labels = t.labels();
                for (auto& l : twin_labels)
                    if (internal_labels.count(l)) l = "env:" + l;
                const DenseTensor twin(twin_labels, t.shape(), t.data());
                acc = absorb_pair(acc, t, twin);
                maybe_rescale(acc, exponent);
            }
            if (acc.order() != 0) throw UnsupportedError("environment sweep left modes open");
            return scaled_sqrt(acc.data()[0], exponent);
        }
        // falls through to the capped brute-force evaluation
    }

    double open = 1.0;
    for (NodeId n : members) {
        for (const auto& pm : net.physical_of(n)) open *= static_cast<double>(pm.dim);
        for (EdgeId e : net.bonds_at(n)) {
            const Bond& b = net.bond(e);
            if (!inside.count(b.other(n))) open *= static_cast<double>(b.rank);
        }
    }
    if (open > static_cast<double>(cap)) {
        std::ostringstream msg;
        msg << "environment: component needs " << open << " open entries, cap is " << cap;
        throw UnsupportedError(msg.str());
    }
    std::vector<DenseTensor> work;
    for (NodeId n : members) work.push_back(net.tensor(n));
    return frobenius_norm(contract_all(std::move(work)));
}

} // namespace

double environment_norm(const TensorNetwork& net, const std::vector<NodeId>& excluded,
                        std::int64_t cap) {
    std::set<NodeId> out(excluded.begin(), excluded.end());
    if (out.size() != excluded.size())
        throw ArgumentError("environment_norm: excluded nodes must be distinct");
    for (NodeId n : excluded)
        if (!net.nodes().count(n)) throw ArgumentError("environment_norm: unknown node id");

    std::map<NodeId, NodeId> parent;
    for (const auto& [id, t] : net.nodes()) {
        (void)t;
        if (!out.count(id)) parent[id] = id;
    }
    if (parent.empty()) return 1.0;
    const std::function<NodeId(NodeId)> find = [&](NodeId n) {
        while (parent[n] != n) n = parent[n] = parent[parent[n]];
        return n;
    };
    for (const Bond& b : net.bonds())
        if (parent.count(b.a) && parent.count(b.b)) parent[find(b.a)] = find(b.b);

    std::map<NodeId, std::vector<NodeId>> components;
    for (const auto& [id, p] : parent) {
        (void)p;
        components[find(id)].push_back(id);
    }
    double total = 1.0;
    for (const auto& [root, members] : components) {
        (void)root;
        total *= component_norm(net, members, cap);
    }
    return total;
}

double environment_norm(const TensorNetwork& net, NodeId x, NodeId y, std::int64_t cap) {
    return environment_norm(net, std::vector<NodeId>{x, y}, cap);
}

} // namespace tntopo
