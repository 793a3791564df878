#include "tntopo/rewire.hpp"

#include <algorithm>
#include <utility>

#include "tntopo/errors.hpp"

namespace tntopo {
namespace {

std::vector<std::string> labels_minus(const std::vector<std::string>& all,
                                      const std::vector<std::string>& removed) {
    std::vector<std::string> out;
    out.reserve(all.size());
    for (const auto& l : all)
        if (std::find(removed.begin(), removed.end(), l) == removed.end()) out.push_back(l);
    return out;
}

std::vector<std::int64_t> extents_of(const DenseTensor& t, const std::vector<std::string>& labels) {
    std::vector<std::int64_t> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(t.extent(l));
    return out;
}

// The one node both bonds touch. Two shared endpoints means the bonds are
// parallel, which a move cannot handle.
NodeId shared_endpoint(const Bond& mover, const Bond& across) {
    NodeId u = 0;
    int count = 0;
    for (NodeId cand : {mover.a, mover.b})
        if (across.touches(cand)) {
            u = cand;
            ++count;
        }
    if (count == 0) throw ArgumentError("move_edge: bonds share no node");
    if (count == 2) throw ArgumentError("move_edge: bonds are parallel, merge them instead");
    return u;
}

} // namespace

NodeId contract_bond(TensorNetwork& net, EdgeId bond) {
    const Bond b = net.bond(bond);
    const NodeId u = b.a;
    const NodeId w = b.b;
    const std::vector<EdgeId> shared_ids = net.bonds_between(u, w);
    std::vector<std::string> shared;
    shared.reserve(shared_ids.size());
    for (EdgeId e : shared_ids) shared.push_back(net.bond(e).label);

    DenseTensor joint = contract(net.tensor(u), net.tensor(w), shared);
    std::vector<PhysicalMode> phys = net.physical_of(u);
    const auto& wp = net.physical_of(w);
    phys.insert(phys.end(), wp.begin(), wp.end());

    for (EdgeId e : shared_ids) net.remove_bond(e);
    const NodeId merged = net.add_node(std::move(joint), std::move(phys));
    for (EdgeId e : net.bonds_at(u)) net.reattach_bond(e, u, merged);
    for (EdgeId e : net.bonds_at(w)) net.reattach_bond(e, w, merged);
    net.remove_node(u);
    net.remove_node(w);
    return merged;
}

RewireKernelOut rewire_kernel(const DenseTensor& tu, const DenseTensor& tw,
                              const std::vector<std::string>& contracted,
                              const std::vector<std::string>& left_labels,
                              const std::string& bond_label, const TruncationPolicy& policy) {
    DenseTensor joint = contract(tu, tw, contracted);
    const std::vector<std::string> right_labels = labels_minus(joint.labels(), left_labels);
    if (left_labels.empty() || right_labels.empty())
        throw ArgumentError("rewire: split side without modes");
    for (const auto& l : left_labels)
        if (!joint.has_label(l)) throw ArgumentError("rewire: unknown split label '" + l + "'");

    const std::vector<std::int64_t> left_ext = extents_of(joint, left_labels);
    const std::vector<std::int64_t> right_ext = extents_of(joint, right_labels);
    const DenseTensor m = matricize(joint, left_labels, right_labels);
    SvdSplit s = svd_split(m, policy);

    RewireKernelOut out;
    out.rows = m.extent("rows");
    out.cols = m.extent("cols");
    out.kept = s.kept_rank;
    out.discarded = s.discarded_mass;
    out.left = unmatricize(s.left, left_labels, left_ext, {bond_label}, {s.kept_rank});
    out.right = unmatricize(s.right, {bond_label}, {s.kept_rank}, right_labels, right_ext);
    return out;
}

PendingRewire stage_move(const TensorNetwork& net, EdgeId mover, EdgeId across) {
    if (mover == across) throw ArgumentError("move_edge: mover and across must differ");
    const Bond& bm = net.bond(mover);
    const Bond& ba = net.bond(across);
    PendingRewire p;
    p.u = shared_endpoint(bm, ba);
    p.w = ba.other(p.u);
    if (net.bonds_between(p.u, p.w).size() > 1)
        throw ArgumentError("move_edge: merge the parallel bonds between the crossed nodes first");
    p.contracted = {ba.label};
    p.left_labels = labels_minus(net.tensor(p.u).labels(), {bm.label, ba.label});
    if (p.left_labels.empty())
        throw ArgumentError("move_edge: stripped node would keep no modes");
    p.bond_label = ba.label;
    return p;
}

PendingRewire stage_merge(const TensorNetwork& net, EdgeId e1, EdgeId e2) {
    if (e1 == e2) throw ArgumentError("merge_parallel_edges: bonds must differ");
    const Bond& b1 = net.bond(e1);
    const Bond& b2 = net.bond(e2);
    const bool same_pair = (b1.a == b2.a && b1.b == b2.b) || (b1.a == b2.b && b1.b == b2.a);
    if (!same_pair) throw ArgumentError("merge_parallel_edges: bonds are not parallel");
    PendingRewire p;
    p.u = std::min(b1.a, b1.b);
    p.w = std::max(b1.a, b1.b);
    for (EdgeId e : net.bonds_between(p.u, p.w)) p.contracted.push_back(net.bond(e).label);
    p.left_labels = labels_minus(net.tensor(p.u).labels(), p.contracted);
    if (p.left_labels.empty())
        throw ArgumentError("merge_parallel_edges: left node would keep no modes");
    p.bond_label = b2.label;
    return p;
}

MoveOutcome commit_move(TensorNetwork& net, EdgeId mover, EdgeId across, RewireKernelOut&& k) {
    const Bond bm = net.bond(mover);
    const Bond ba = net.bond(across);
    const NodeId u = shared_endpoint(bm, ba);
    const NodeId w = ba.other(u);

    MoveOutcome out;
    out.record.kind = StepKind::Move;
    out.record.nodes = {u, w};
    out.record.bonds = {bm.label, ba.label};
    out.record.rows = k.rows;
    out.record.cols = k.cols;
    out.record.kept_rank = k.kept;
    out.record.discarded_mass = k.discarded;

    out.stripped = net.add_node(std::move(k.left), net.physical_of(u));
    out.receiver = net.add_node(std::move(k.right), net.physical_of(w));
    for (EdgeId e : net.bonds_at(u))
        if (e != mover && e != across) net.reattach_bond(e, u, out.stripped);
    net.reattach_bond(mover, u, out.receiver);
    for (EdgeId e : net.bonds_at(w))
        if (e != across) net.reattach_bond(e, w, out.receiver);
    net.rewire_bond(across, out.stripped, out.receiver, k.kept);
    net.remove_node(u);
    net.remove_node(w);
    out.across = across;
    return out;
}

MergeOutcome commit_merge(TensorNetwork& net, EdgeId e1, EdgeId e2, RewireKernelOut&& k) {
    const Bond b1 = net.bond(e1);
    const NodeId u = std::min(b1.a, b1.b);
    const NodeId w = std::max(b1.a, b1.b);
    const std::vector<EdgeId> parallels = net.bonds_between(u, w);

    MergeOutcome out;
    out.record.kind = StepKind::Merge;
    out.record.nodes = {u, w};
    out.record.bonds = {net.bond(e1).label, net.bond(e2).label};
    for (EdgeId e : parallels)
        if (e != e1 && e != e2) out.record.bonds.push_back(net.bond(e).label);
    out.record.rows = k.rows;
    out.record.cols = k.cols;
    out.record.kept_rank = k.kept;
    out.record.discarded_mass = k.discarded;

    out.left = net.add_node(std::move(k.left), net.physical_of(u));
    out.right = net.add_node(std::move(k.right), net.physical_of(w));
    const auto is_parallel = [&](EdgeId e) {
        return std::find(parallels.begin(), parallels.end(), e) != parallels.end();
    };
    for (EdgeId e : net.bonds_at(u))
        if (!is_parallel(e)) net.reattach_bond(e, u, out.left);
    for (EdgeId e : net.bonds_at(w))
        if (!is_parallel(e)) net.reattach_bond(e, w, out.right);
    net.rewire_bond(e2, out.left, out.right, k.kept);
    for (EdgeId e : parallels)
        if (e != e2) net.remove_bond(e);
    net.remove_node(u);
    net.remove_node(w);
    out.bond = e2;
    return out;
}

MoveOutcome move_edge(TensorNetwork& net, EdgeId mover, EdgeId across,
                      const TruncationPolicy& policy) {
    PendingRewire p = stage_move(net, mover, across);
    RewireKernelOut k =
        rewire_kernel(net.tensor(p.u), net.tensor(p.w), p.contracted, p.left_labels, p.bond_label, policy);
    return commit_move(net, mover, across, std::move(k));
}

MergeOutcome merge_parallel_edges(TensorNetwork& net, EdgeId e1, EdgeId e2,
                                  const TruncationPolicy& policy) {
    PendingRewire p = stage_merge(net, e1, e2);
    RewireKernelOut k =
        rewire_kernel(net.tensor(p.u), net.tensor(p.w), p.contracted, p.left_labels, p.bond_label, policy);
    return commit_merge(net, e1, e2, std::move(k));
}

SplitOutcome split_node(TensorNetwork& net, NodeId node,
                        const std::vector<std::string>& left_labels,
                        const TruncationPolicy& policy) {
    const DenseTensor& t = net.tensor(node);
    if (left_labels.empty()) throw ArgumentError("split_node: left side needs at least one mode");
    for (std::size_t i = 0; i < left_labels.size(); ++i) {
        if (!t.has_label(left_labels[i]))
            throw ArgumentError("split_node: unknown mode '" + left_labels[i] + "'");
        for (std::size_t j = i + 1; j < left_labels.size(); ++j)
            if (left_labels[i] == left_labels[j])
                throw ArgumentError("split_node: duplicate mode '" + left_labels[i] + "'");
    }
    const std::vector<std::string> right_labels = labels_minus(t.labels(), left_labels);
    if (right_labels.empty()) throw ArgumentError("split_node: right side needs at least one mode");

    const std::string bond_label = net.fresh_bond_label("s");
    const std::vector<std::int64_t> left_ext = extents_of(t, left_labels);
    const std::vector<std::int64_t> right_ext = extents_of(t, right_labels);
    const DenseTensor m = matricize(t, left_labels, right_labels);
    SvdSplit s = svd_split(m, policy);

    SplitOutcome out;
    out.record.kind = StepKind::Split;
    out.record.nodes = {node};
    out.record.bonds = {bond_label};
    out.record.rows = m.extent("rows");
    out.record.cols = m.extent("cols");
    out.record.kept_rank = s.kept_rank;
    out.record.discarded_mass = s.discarded_mass;

    DenseTensor lt = unmatricize(s.left, left_labels, left_ext, {bond_label}, {s.kept_rank});
    DenseTensor rt = unmatricize(s.right, {bond_label}, {s.kept_rank}, right_labels, right_ext);
    std::vector<PhysicalMode> lphys;
    std::vector<PhysicalMode> rphys;
    for (const auto& pm : net.physical_of(node)) {
        const bool on_left =
            std::find(left_labels.begin(), left_labels.end(), pm.label) != left_labels.end();
        (on_left ? lphys : rphys).push_back(pm);
    }
    out.left = net.add_node(std::move(lt), std::move(lphys));
    out.right = net.add_node(std::move(rt), std::move(rphys));
    for (EdgeId e : net.bonds_at(node)) {
        const bool on_left = std::find(left_labels.begin(), left_labels.end(),
                                       net.bond(e).label) != left_labels.end();
        net.reattach_bond(e, node, on_left ? out.left : out.right);
    }
    out.bond = net.add_bond(bond_label, out.left, out.right, s.kept_rank);
    net.remove_node(node);
    return out;
}

EdgeId insert_artificial_edge(TensorNetwork& net, EdgeId bond, const RankSplit& split,
                              IndexPairing pairing, const std::string& new_label) {
    const Bond b = net.bond(bond);
    if (split.moving_rank < 1 || split.residual_rank < 1)
        throw ArgumentError("insert_artificial_edge: factor ranks must be positive");
    if (split.moving_rank * split.residual_rank < b.rank)
        throw ArgumentError("insert_artificial_edge: factor product " +
                            std::to_string(split.moving_rank * split.residual_rank) +
                            " is below the bond rank " + std::to_string(b.rank));
    if (new_label.empty() || net.has_bond_label(new_label))
        throw ArgumentError("insert_artificial_edge: label '" + new_label + "' empty or taken");
    for (NodeId n : {b.a, b.b})
        for (const auto& pm : net.physical_of(n))
            if (pm.label == new_label)
                throw ArgumentError("insert_artificial_edge: label '" + new_label +
                                    "' collides with a physical mode");

    const std::int64_t padded = split.moving_rank * split.residual_rank;
    std::vector<DenseTensor> staged;
    for (NodeId n : {b.a, b.b}) {
        const DenseTensor& t = net.tensor(n);
        const std::vector<std::string> others = labels_minus(t.labels(), {b.label});
        if (others.empty())
            throw ArgumentError("insert_artificial_edge: endpoint has no other modes");
        const std::vector<std::int64_t> others_ext = extents_of(t, others);
        const DenseTensor m = matricize(t, others, {b.label});
        const std::int64_t rows = m.extent("rows");

        // Zero-pad the bond index up to moving*residual, then read it as the
        // index pair. Pairing picks which factor runs fastest.
        std::vector<double> data(static_cast<std::size_t>(rows * padded), 0.0);
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < b.rank; ++c)
                data[static_cast<std::size_t>(r * padded + c)] =
                    m.data()[static_cast<std::size_t>(r * b.rank + c)];
        const DenseTensor pm({"rows", "cols"}, {rows, padded}, std::move(data));
        staged.push_back(pairing == IndexPairing::ResidualFast
                             ? unmatricize(pm, others, others_ext, {new_label, b.label},
                                           {split.moving_rank, split.residual_rank})
                             : unmatricize(pm, others, others_ext, {b.label, new_label},
                                           {split.residual_rank, split.moving_rank}));
    }

    net.set_bond_rank(bond, split.residual_rank);
    const EdgeId artificial = net.add_bond(new_label, b.a, b.b, split.moving_rank);
    net.replace_tensor(b.a, std::move(staged[0]));
    net.replace_tensor(b.b, std::move(staged[1]));
    return artificial;
}

} // namespace tntopo
