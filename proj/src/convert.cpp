#include "tntopo/convert.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <future>
#include <set>

#include "tntopo/errors.hpp"

namespace tntopo {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// "j_2" before "j_10": digit runs compare numerically, the rest bytewise.
bool natural_less(const std::string& a, const std::string& b) {
    std::size_t i = 0;
    std::size_t j = 0;
    const auto digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
    while (i < a.size() && j < b.size()) {
        if (digit(a[i]) && digit(b[j])) {
            std::size_t i2 = i;
            std::size_t j2 = j;
            while (i2 < a.size() && digit(a[i2])) ++i2;
            while (j2 < b.size() && digit(b[j2])) ++j2;
            std::string da = a.substr(i, i2 - i);
            std::string db = b.substr(j, j2 - j);
            da.erase(0, std::min(da.find_first_not_of('0'), da.size() - 1));
            db.erase(0, std::min(db.find_first_not_of('0'), db.size() - 1));
            if (da.size() != db.size()) return da.size() < db.size();
            if (da != db) return da < db;
            i = i2;
            j = j2;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    return a.size() - i < b.size() - j;
}

struct PlanStep {
    enum class Op { Move, Merge, Insert };
    Op op = Op::Move;
    std::string first;  // moved bond / absorbed bond / bond being factored
    std::string second; // crossed bond / surviving bond / artificial label
    std::int64_t moving = 0;   // Insert only
    std::int64_t residual = 0; // Insert only
};

struct Plan {
    std::string name;
    std::vector<PlanStep> steps;
    std::int64_t moving = 0;
    std::int64_t residual = 0;
};

std::string sole_bond_label(const TensorNetwork& net, NodeId a, NodeId b) {
    const auto ids = net.bonds_between(a, b);
    if (ids.size() != 1) throw ArgumentError("convert: expected exactly one bond between nodes");
    return net.bond(ids.front()).label;
}

// Ring positions v_1..v_d and the labels of the bonds (v_i, v_{i+1}): the
// moving bond closes the ring between v_d and v_1, and v_1 is its smaller
// endpoint, so the first move happens at the smaller-id end.
struct RingOrder {
    std::vector<NodeId> v;             // v[i] = v_{i+1}
    std::vector<std::string> bond;     // bond[i] joins v[i] and v[i+1]
    std::string mover;
};

RingOrder ring_order(const TensorNetwork& net) {
    RingOrder out;
    const Bond* mover = nullptr;
    for (const Bond& b : net.bonds())
        if (!mover || natural_less(mover->label, b.label)) mover = &b;
    out.mover = mover->label;

    NodeId cur = std::min(mover->a, mover->b);
    EdgeId via = mover->id;
    const std::size_t d = net.nodes().size();
    for (std::size_t i = 0; i < d; ++i) {
        out.v.push_back(cur);
        EdgeId next_edge = 0;
        for (EdgeId e : net.bonds_at(cur))
            if (e != via) next_edge = e;
        if (i + 1 < d) {
            out.bond.push_back(net.bond(next_edge).label);
            cur = net.bond(next_edge).other(cur);
            via = next_edge;
        }
    }
    return out;
}

Plan plan_chain_to_train(const TensorNetwork& net) {
    if (!is_cycle_graph(net))
        throw ArgumentError("tc_to_tt: input network is not ring shaped");
    const RingOrder ring = ring_order(net);
    const std::int64_t d = static_cast<std::int64_t>(ring.v.size());
    const std::int64_t c = (d + 1) / 2;

    Plan plan;
    plan.name = "chain->train";
    std::int64_t next_left = 1;                 // move at v_i across bond[i-1]
    std::int64_t next_right = 1;                // move at v_{d+1-k} across bond[d-k-1]
    bool left_turn = true;
    while (next_left <= c - 1 || next_right <= d - c - 1) {
        if (left_turn && next_left <= c - 1) {
            plan.steps.push_back({PlanStep::Op::Move, ring.mover,
                                  ring.bond[static_cast<std::size_t>(next_left - 1)], 0, 0});
            ++next_left;
        } else if (!left_turn && next_right <= d - c - 1) {
            plan.steps.push_back({PlanStep::Op::Move, ring.mover,
                                  ring.bond[static_cast<std::size_t>(d - next_right - 1)], 0, 0});
            ++next_right;
        }
        left_turn = !left_turn;
    }
    plan.steps.push_back(
        {PlanStep::Op::Merge, ring.mover, ring.bond[static_cast<std::size_t>(c - 1)], 0, 0});
    return plan;
}

bool label_free(const TensorNetwork& net, const std::string& l) {
    if (net.has_bond_label(l)) return false;
    for (const auto& [id, modes] : net.physical()) {
        (void)id;
        for (const auto& pm : modes)
            if (pm.label == l) return false;
    }
    return true;
}

Plan plan_train_to_chain(const TensorNetwork& net, const RankSplitStrategy& split) {
    if (!is_path_graph(net))
        throw ArgumentError("tt_to_tc: input network is not string shaped");
    const std::vector<NodeId> v = path_node_order(net);
    const std::int64_t d = static_cast<std::int64_t>(v.size());
    if (d < 3) throw ArgumentError("tt_to_tc: a ring needs at least 3 nodes");
    const std::int64_t c = (d + 1) / 2;

    const auto bond_at = [&](std::int64_t i) { // joins v_i and v_{i+1}, 1-based
        return sole_bond_label(net, v[static_cast<std::size_t>(i - 1)],
                               v[static_cast<std::size_t>(i)]);
    };
    const std::string center = bond_at(c);
    const RankSplit rs = split.resolve(net.find_bond_by_label(center)->rank);

    std::string art = "j_" + std::to_string(d);
    for (int k = 2; !label_free(net, art); ++k) art = "ring" + std::to_string(k);

    Plan plan;
    plan.name = "train->chain";
    plan.moving = rs.moving_rank;
    plan.residual = rs.residual_rank;
    plan.steps.push_back({PlanStep::Op::Insert, center, art, rs.moving_rank, rs.residual_rank});
    std::int64_t next_right = 1; // strip v_{c+k}, crossing bond (v_{c+k}, v_{c+k+1})
    std::int64_t next_left = 1;  // strip v_{c+1-k}, crossing bond (v_{c-k}, v_{c+1-k})
    bool right_turn = true;
    while (next_right <= d - c - 1 || next_left <= c - 1) {
        if (right_turn && next_right <= d - c - 1) {
            plan.steps.push_back({PlanStep::Op::Move, art, bond_at(c + next_right), 0, 0});
            ++next_right;
        } else if (!right_turn && next_left <= c - 1) {
            plan.steps.push_back({PlanStep::Op::Move, art, bond_at(c - next_left), 0, 0});
            ++next_left;
        }
        right_turn = !right_turn;
    }
    return plan;
}

Plan plan_grid_to_train(const TensorNetwork& net) {
    const auto layout = detect_grid(net);
    if (!layout) throw ArgumentError("peps_to_tt: input network is not grid shaped");
    const std::int64_t R = layout->rows;
    const std::int64_t C = layout->cols;
    const auto vertical = [&](std::int64_t r, std::int64_t c) {
        return sole_bond_label(net, layout->at(r, c), layout->at(r + 1, c));
    };
    const auto horizontal = [&](std::int64_t r, std::int64_t c) {
        return sole_bond_label(net, layout->at(r, c), layout->at(r, c + 1));
    };

    Plan plan;
    plan.name = "grid->train";
    // One elimination absorbs vertical v into its neighbour: a move across
    // the upper-row horizontal, a move across the lower-row horizontal, then
    // the parallel merge (survivor keeps the neighbour's label).
    const auto eliminate = [&](std::int64_t r, std::int64_t c, std::int64_t hcol,
                               std::int64_t into) {
        plan.steps.push_back({PlanStep::Op::Move, vertical(r, c), horizontal(r, hcol), 0, 0});
        plan.steps.push_back({PlanStep::Op::Move, vertical(r, c), horizontal(r + 1, hcol), 0, 0});
        plan.steps.push_back({PlanStep::Op::Merge, vertical(r, c), vertical(r, into), 0, 0});
    };
    for (std::int64_t r = 0; r + 1 < R; r += 2)          // sweep right, keep column C
        for (std::int64_t c = 0; c + 1 < C; ++c) eliminate(r, c, c, c + 1);
    for (std::int64_t r = 1; r + 1 < R; r += 2)          // sweep left, keep column 1
        for (std::int64_t c = C - 1; c > 0; --c) eliminate(r, c, c - 1, c - 1);
    return plan;
}

Plan make_plan(const TensorNetwork& net, Topology::Kind target, const RankSplitStrategy& split) {
    switch (target) {
        case Topology::Kind::Train:
            if (is_cycle_graph(net)) return plan_chain_to_train(net);
            if (detect_grid(net)) return plan_grid_to_train(net);
            throw ArgumentError("convert: input is neither ring nor grid shaped");
        case Topology::Kind::Chain:
            if (is_path_graph(net)) return plan_train_to_chain(net, split);
            throw ArgumentError("convert: input is not string shaped");
        default:
            throw ArgumentError("convert: no conversion reaches the requested topology");
    }
}

// ---- symbolic execution on ranks only -----------------------------------

constexpr std::int64_t kSatCap = std::int64_t{1} << 62;

std::int64_t sat_mul(std::int64_t a, std::int64_t b) {
    return a > kSatCap / b ? kSatCap : a * b;
}

struct SymBond {
    std::string label;
    NodeId a = 0;
    NodeId b = 0;
    std::int64_t rank = 1;
};

struct SymNet {
    std::map<NodeId, std::map<std::string, std::int64_t>> modes; // bonds + physical
    std::vector<SymBond> bonds;

    SymBond& by_label(const std::string& l) {
        for (SymBond& b : bonds)
            if (b.label == l) return b;
        throw ArgumentError("convert: plan refers to missing bond '" + l + "'");
    }
    std::int64_t product_except(NodeId n, const std::set<std::string>& skip) const {
        std::int64_t p = 1;
        for (const auto& [label, extent] : modes.at(n))
            if (!skip.count(label)) p = sat_mul(p, extent);
        return p;
    }
};

SymNet sym_from(const TensorNetwork& net) {
    SymNet s;
    for (const auto& [id, modes] : net.physical())
        for (const auto& pm : modes) s.modes[id][pm.label] = pm.dim;
    for (const Bond& b : net.bonds()) {
        s.bonds.push_back({b.label, b.a, b.b, b.rank});
        s.modes[b.a][b.label] = b.rank;
        s.modes[b.b][b.label] = b.rank;
    }
    return s;
}

PlannedSvd sym_move(SymNet& s, const PlanStep& st) {
    SymBond& mover = s.by_label(st.first);
    SymBond& across = s.by_label(st.second);
    const NodeId u = (mover.a == across.a || mover.a == across.b) ? mover.a : mover.b;
    const NodeId w = across.a == u ? across.b : across.a;

    const std::int64_t rows = s.product_except(u, {st.first, st.second});
    const std::int64_t cols = sat_mul(mover.rank, s.product_except(w, {st.second}));
    const std::int64_t bound = std::min({rows, cols, sat_mul(mover.rank, across.rank)});

    s.modes[u].erase(st.first);
    s.modes[u][st.second] = bound;
    s.modes[w][st.second] = bound;
    s.modes[w][st.first] = mover.rank;
    (mover.a == u ? mover.a : mover.b) = w;
    across.rank = bound;
    return {StepKind::Move, st.second, rows, cols, bound};
}

PlannedSvd sym_merge(SymNet& s, const PlanStep& st) {
    SymBond& e2 = s.by_label(st.second);
    const NodeId u = std::min(e2.a, e2.b);
    const NodeId w = std::max(e2.a, e2.b);
    std::set<std::string> parallel;
    std::int64_t rank_product = 1;
    for (const SymBond& b : s.bonds)
        if ((b.a == u && b.b == w) || (b.a == w && b.b == u)) {
            parallel.insert(b.label);
            rank_product = sat_mul(rank_product, b.rank);
        }

    const std::int64_t rows = s.product_except(u, parallel);
    const std::int64_t cols = s.product_except(w, parallel);
    const std::int64_t bound = std::min({rows, cols, rank_product});

    for (const auto& l : parallel) {
        s.modes[u].erase(l);
        s.modes[w].erase(l);
    }
    s.modes[u][st.second] = bound;
    s.modes[w][st.second] = bound;
    s.bonds.erase(std::remove_if(s.bonds.begin(), s.bonds.end(),
                                 [&](const SymBond& b) {
                                     return parallel.count(b.label) && b.label != st.second;
                                 }),
                  s.bonds.end());
    s.by_label(st.second).rank = bound;
    return {StepKind::Merge, st.second, rows, cols, bound};
}

void sym_insert(SymNet& s, const PlanStep& st) {
    SymBond& bond = s.by_label(st.first);
    bond.rank = st.residual;
    s.modes[bond.a][st.first] = st.residual;
    s.modes[bond.b][st.first] = st.residual;
    s.modes[bond.a][st.second] = st.moving;
    s.modes[bond.b][st.second] = st.moving;
    s.bonds.push_back({st.second, bond.a, bond.b, st.moving});
}

RankBoundPlan run_symbolic(const TensorNetwork& net, const Plan& plan) {
    SymNet s = sym_from(net);
    RankBoundPlan out;
    out.conversion = plan.name;
    out.moving_rank = plan.moving;
    out.residual_rank = plan.residual;
    for (const PlanStep& st : plan.steps) {
        switch (st.op) {
            case PlanStep::Op::Move: out.steps.push_back(sym_move(s, st)); break;
            case PlanStep::Op::Merge: out.steps.push_back(sym_merge(s, st)); break;
            case PlanStep::Op::Insert: sym_insert(s, st); break;
        }
    }
    for (const SymBond& b : s.bonds) out.bond_bounds[b.label] = b.rank;
    return out;
}

// ---- numeric execution ---------------------------------------------------

ConversionResult run_plan(const TensorNetwork& input, const Plan& plan,
                          const ConvertOptions& opts) {
    ConversionResult res{input, {}};
    TensorNetwork& net = res.network;
    ConversionReport& rep = res.report;
    rep.conversion = plan.name;
    rep.moving_rank = plan.moving;
    rep.residual_rank = plan.residual;
    const bool budgeting = opts.error_budget && !opts.policy.is_exact();
    if (budgeting) {
        try {
            rep.input_norm = network_norm(input, opts.oracle_cap);
        } catch (const UnsupportedError&) {
            rep.input_norm = -1.0;
        }
    }
    const auto t_total = Clock::now();

    const auto find_edge = [&](const std::string& l) {
        const Bond* b = net.find_bond_by_label(l);
        if (!b) throw ArgumentError("convert: plan refers to missing bond '" + l + "'");
        return b->id;
    };
    const auto env_for = [&](NodeId u, NodeId w) {
        if (!budgeting) return -1.0;
        try {
            return environment_norm(net, u, w, opts.oracle_cap);
        } catch (const UnsupportedError&) {
            rep.budget.complete = false;
            return -1.0;
        }
    };
    const auto book = [&](StepRecord&& r, double env) {
        if (budgeting) {
            r.env_norm = env;
            if (env >= 0.0) {
                const double bound = env * r.discarded_mass;
                rep.budget.entries.push_back({env, r.discarded_mass, bound});
                rep.budget.cumulative += bound;
            } else {
                rep.budget.complete = false;
            }
        }
        rep.steps.push_back(std::move(r));
    };

    std::size_t i = 0;
    while (i < plan.steps.size()) {
        const PlanStep& st = plan.steps[i];
        if (st.op == PlanStep::Op::Insert) {
            insert_artificial_edge(net, find_edge(st.first), {st.moving, st.residual},
                                   opts.pairing, st.second);
            ++i;
            continue;
        }

        // Two adjacent moves at opposite ends touch disjoint node pairs and
        // may be computed concurrently; committing in plan order keeps the
        // result bit-identical to the sequential run.
        if (opts.parallel && i + 1 < plan.steps.size() && st.op == PlanStep::Op::Move &&
            plan.steps[i + 1].op == PlanStep::Op::Move) {
            const PlanStep& st2 = plan.steps[i + 1];
            const EdgeId m1 = find_edge(st.first);
            const EdgeId a1 = find_edge(st.second);
            const EdgeId m2 = find_edge(st2.first);
            const EdgeId a2 = find_edge(st2.second);
            const PendingRewire p1 = stage_move(net, m1, a1);
            const PendingRewire p2 = stage_move(net, m2, a2);
            const bool disjoint = p1.u != p2.u && p1.u != p2.w && p1.w != p2.u && p1.w != p2.w;
            if (disjoint) {
                const auto t0 = Clock::now();
                auto f1 = std::async(std::launch::async, [&] {
                    return rewire_kernel(net.tensor(p1.u), net.tensor(p1.w), p1.contracted,
                                         p1.left_labels, p1.bond_label, opts.policy);
                });
                auto f2 = std::async(std::launch::async, [&] {
                    return rewire_kernel(net.tensor(p2.u), net.tensor(p2.w), p2.contracted,
                                         p2.left_labels, p2.bond_label, opts.policy);
                });
                RewireKernelOut k1 = f1.get();
                RewireKernelOut k2 = f2.get();
                const double env1 = env_for(p1.u, p1.w);
                MoveOutcome o1 = commit_move(net, m1, a1, std::move(k1));
                o1.record.wall_ms = ms_since(t0);
                book(std::move(o1.record), env1);
                const auto t1 = Clock::now();
                const double env2 = env_for(p2.u, p2.w);
                MoveOutcome o2 = commit_move(net, m2, a2, std::move(k2));
                o2.record.wall_ms = ms_since(t1);
                book(std::move(o2.record), env2);
                i += 2;
                continue;
            }
        }

        if (st.op == PlanStep::Op::Move) {
            const EdgeId m = find_edge(st.first);
            const EdgeId a = find_edge(st.second);
            const PendingRewire p = stage_move(net, m, a);
            const double env = env_for(p.u, p.w);
            const auto t0 = Clock::now();
            MoveOutcome o = move_edge(net, m, a, opts.policy);
            o.record.wall_ms = ms_since(t0);
            book(std::move(o.record), env);
        } else {
            const EdgeId e1 = find_edge(st.first);
            const EdgeId e2 = find_edge(st.second);
            const PendingRewire p = stage_merge(net, e1, e2);
            const double env = env_for(p.u, p.w);
            const auto t0 = Clock::now();
            MergeOutcome o = merge_parallel_edges(net, e1, e2, opts.policy);
            o.record.wall_ms = ms_since(t0);
            book(std::move(o.record), env);
        }
        ++i;
    }

    rep.cumulative_error_bound = rep.budget.cumulative;
    if (budgeting && rep.input_norm > 0.0)
        rep.relative_error_bound = rep.cumulative_error_bound / rep.input_norm;
    std::int64_t sum = 0;
    for (const Bond& b : net.bonds()) {
        rep.final_ranks[b.label] = b.rank;
        rep.max_rank = std::max(rep.max_rank, b.rank);
        sum += b.rank;
    }
    if (!net.bonds().empty())
        rep.avg_rank = static_cast<double>(sum) / static_cast<double>(net.bonds().size());
    rep.total_wall_ms = ms_since(t_total);
    return res;
}

} // namespace

RankSplit RankSplitStrategy::resolve(std::int64_t closing_rank) const {
    if (closing_rank < 1) throw ArgumentError("rank split: closing rank must be positive");
    if (kind == Kind::Fixed) {
        if (moving < 1 || residual < 1)
            throw ArgumentError("rank split: fixed factors must be positive");
        if (moving * residual < closing_rank)
            throw ArgumentError("rank split: factor product " + std::to_string(moving * residual) +
                                " is below the closing rank " + std::to_string(closing_rank));
        return {moving, residual};
    }
    std::int64_t m = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(closing_rank))));
    while (m * m < closing_rank) ++m; // guard against fp rounding
    return {m, (closing_rank + m - 1) / m};
}

ConversionResult tc_to_tt(const TensorNetwork& ring, const ConvertOptions& opts) {
    return run_plan(ring, plan_chain_to_train(ring), opts);
}

ConversionResult tc_to_tt(const TensorNetwork& ring, const TruncationPolicy& policy) {
    ConvertOptions opts;
    opts.policy = policy;
    return tc_to_tt(ring, opts);
}

ConversionResult tt_to_tc(const TensorNetwork& string, const ConvertOptions& opts) {
    return run_plan(string, plan_train_to_chain(string, opts.split), opts);
}

ConversionResult tt_to_tc(const TensorNetwork& string, const RankSplitStrategy& split,
                          const TruncationPolicy& policy) {
    ConvertOptions opts;
    opts.policy = policy;
    opts.split = split;
    return tt_to_tc(string, opts);
}

ConversionResult peps_to_tt(const TensorNetwork& grid, const ConvertOptions& opts) {
    return run_plan(grid, plan_grid_to_train(grid), opts);
}

ConversionResult peps_to_tt(const TensorNetwork& grid, const TruncationPolicy& policy) {
    ConvertOptions opts;
    opts.policy = policy;
    return peps_to_tt(grid, opts);
}

ConversionResult convert_to(const TensorNetwork& net, Topology::Kind target,
                            const ConvertOptions& opts) {
    return run_plan(net, make_plan(net, target, opts.split), opts);
}

RankBoundPlan predict_rank_bounds(const TensorNetwork& net, const Topology& target,
                                  const std::optional<RankSplitStrategy>& split) {
    return run_symbolic(net, make_plan(net, target.kind, split.value_or(RankSplitStrategy{})));
}

double conversion_cost_model(const TensorNetwork& net, const Topology& target,
                             const std::optional<RankSplitStrategy>& split) {
    const RankBoundPlan plan = predict_rank_bounds(net, target, split);
    double cost = 0.0;
    for (const PlannedSvd& s : plan.steps)
        cost += static_cast<double>(s.rows) * static_cast<double>(s.cols) *
                static_cast<double>(s.bound);
    return cost;
}

} // namespace tntopo
