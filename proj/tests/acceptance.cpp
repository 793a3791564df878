// Acceptance gate: every release-blocking behavior of the converter, one
// pass/fail line each. Exits nonzero if any check fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "tntopo/convert.hpp"
#include "tntopo/errors.hpp"
#include "tntopo/network.hpp"
#include "tntopo/rewire.hpp"
#include "tntopo/rng.hpp"
#include "tntopo/verify.hpp"

using namespace tntopo;
using Clock = std::chrono::steady_clock;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
    if (!ok) throw Failure(what);
}

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// Relative Frobenius distance via full tensors; resolves far below the
/// inner-product sweep floor. Desk scale only.
double oracle_rel(const TensorNetwork& a, const TensorNetwork& b) {
    const DenseTensor fa = oracle_contract(a);
    const DenseTensor fb = transpose(oracle_contract(b), fa.labels());
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < fa.data().size(); ++i) {
        const double d = fa.data()[i] - fb.data()[i];
        diff += d * d;
        ref += fa.data()[i] * fa.data()[i];
    }
    return std::sqrt(diff) / std::sqrt(ref);
}

std::string fmt_ranks(const TensorNetwork& net) {
    std::vector<std::int64_t> r;
    for (const Bond& b : net.bonds()) r.push_back(b.rank);
    std::sort(r.begin(), r.end());
    std::ostringstream s;
    s << "(";
    for (std::size_t i = 0; i < r.size(); ++i) s << (i ? "," : "") << r[i];
    s << ")";
    return s.str();
}

// 1. Exact ring opening at d=4, extent 10, rank 6: the pinned rank profile.
void criterion_1() {
    const TensorNetwork ring = build_uniform(Topology::chain(4), 10, 6, Fill::random(42));
    const auto t0 = Clock::now();
    const ConversionResult r = tc_to_tt(ring, TruncationPolicy::exact());
    const double wall = ms_since(t0);

    std::vector<std::int64_t> ranks;
    for (const Bond& b : r.network.bonds()) ranks.push_back(b.rank);
    std::sort(ranks.begin(), ranks.end());
    expect(ranks == std::vector<std::int64_t>{10, 10, 36},
           "final ranks " + fmt_ranks(r.network) + ", wanted (10,10,36)");
    expect(std::abs(r.report.avg_rank - 56.0 / 3.0) < 1e-9, "avg rank off 18.67");
    expect(r.report.max_rank == 36, "max rank != 36");
    const double err = oracle_rel(ring, r.network);
    expect(err <= 1e-11, "oracle relative error " + std::to_string(err) + " > 1e-11");
    expect(wall < 10000.0, "conversion took " + std::to_string(wall) + " ms, limit 10 s");
}

// 2. Tight-cutoff ring opening at d=10 and d=100: bounded ranks, small error.
void criterion_2() {
    for (const std::int64_t d : {std::int64_t{10}, std::int64_t{100}}) {
        const TensorNetwork ring =
            build_uniform(Topology::chain(d), 10, 6, Fill::random(1000 + static_cast<std::uint64_t>(d)));
        ConvertOptions opts;
        opts.policy = TruncationPolicy::eps(1e-10);
        opts.error_budget = false;
        const ConversionResult r = tc_to_tt(ring, opts);
        expect(r.report.max_rank <= 36,
               "d=" + std::to_string(d) + ": max rank " + std::to_string(r.report.max_rank) + " > 36");
        const double err = relative_error(ring, r.network);
        expect(err <= 1e-6,
               "d=" + std::to_string(d) + ": relative error " + std::to_string(err) + " > 1e-6");
    }
}

struct SuiteCase {
    TensorNetwork net;
    Topology target;
};

std::vector<SuiteCase> random_suite(int count) {
    std::vector<SuiteCase> out;
    SplitMix64 rng(2024);
    int i = 0;
    while (static_cast<int>(out.size()) < count) {
        const int shape = i++ % 12;
        const std::int64_t n = 2 + static_cast<std::int64_t>(rng.next_u64() % 3);
        const std::int64_t r = 1 + static_cast<std::int64_t>(rng.next_u64() % 3);
        const std::uint64_t seed = rng.next_u64();
        SuiteCase c;
        if (shape < 4) {
            const std::int64_t d = 3 + shape;
            c.net = build_uniform(Topology::chain(d), n, r, Fill::random(seed));
            c.target = Topology::train(d);
        } else if (shape < 8) {
            const std::int64_t d = 3 + (shape - 4);
            c.net = build_uniform(Topology::train(d), n, r, Fill::random(seed));
            c.target = Topology::chain(d);
        } else {
            const std::int64_t rows = 2 + (shape - 8) / 2;
            const std::int64_t cols = 2 + (shape - 8) % 2;
            c.net = build_uniform(Topology::grid(rows, cols), n, r, Fill::random(seed));
            c.target = Topology::train(rows * cols);
        }
        out.push_back(std::move(c));
    }
    return out;
}

// 3. Exactness across 100 random ring/string/grid instances.
void criterion_3() {
    int worst_idx = -1;
    double worst = 0.0;
    const std::vector<SuiteCase> suite = random_suite(100);
    for (std::size_t i = 0; i < suite.size(); ++i) {
        ConvertOptions opts;
        opts.error_budget = false;
        const ConversionResult r = convert_to(suite[i].net, suite[i].target.kind, opts);
        const double err = oracle_rel(suite[i].net, r.network);
        if (err > worst) {
            worst = err;
            worst_idx = static_cast<int>(i);
        }
    }
    expect(worst <= 1e-11, "instance " + std::to_string(worst_idx) + " oracle error " +
                               std::to_string(worst) + " > 1e-11");
}

// 4. Predicted rank bounds dominate observed ranks on the same suite.
void criterion_4() {
    const std::vector<SuiteCase> suite = random_suite(100);
    for (std::size_t i = 0; i < suite.size(); ++i) {
        ConvertOptions opts;
        opts.error_budget = false;
        const RankBoundPlan plan = predict_rank_bounds(suite[i].net, suite[i].target);
        const ConversionResult r = convert_to(suite[i].net, suite[i].target.kind, opts);
        for (const auto& [label, rank] : r.report.final_ranks) {
            const auto it = plan.bond_bounds.find(label);
            expect(it != plan.bond_bounds.end(),
                   "instance " + std::to_string(i) + ": bond '" + label + "' missing from plan");
            expect(rank <= it->second, "instance " + std::to_string(i) + ": bond '" + label +
                                           "' rank " + std::to_string(rank) + " > bound " +
                                           std::to_string(it->second));
        }
    }
}

// 5. Per-step error bound, then the summed bound on whole conversions.
void criterion_5() {
    SplitMix64 rng(31337);
    int checked = 0;
    while (checked < 100) {
        const std::int64_t d = 4 + static_cast<std::int64_t>(rng.next_u64() % 2);
        const std::int64_t n = 2 + static_cast<std::int64_t>(rng.next_u64() % 2);
        TensorNetwork net = build_uniform(Topology::chain(d), n, 3, Fill::random(rng.next_u64()));
        const DenseTensor before = oracle_contract(net);

        const EdgeId mover = net.find_bond_by_label("j_" + std::to_string(d))->id;
        const EdgeId across = net.find_bond_by_label("j_1")->id;
        const double env = environment_norm(net, 1, net.bond(across).other(1));
        const std::int64_t cap = 1 + static_cast<std::int64_t>(rng.next_u64() % 2);
        const MoveOutcome out = move_edge(net, mover, across, TruncationPolicy::cap(cap));
        if (out.record.discarded_mass <= 0.0) continue;

        const DenseTensor after = transpose(oracle_contract(net), before.labels());
        double diff = 0.0;
        for (std::size_t i = 0; i < after.data().size(); ++i) {
            const double dv = after.data()[i] - before.data()[i];
            diff += dv * dv;
        }
        diff = std::sqrt(diff);
        expect(diff <= env * out.record.discarded_mass * (1.0 + 1e-10),
               "step " + std::to_string(checked) + ": error " + std::to_string(diff) +
                   " > bound " + std::to_string(env * out.record.discarded_mass));
        ++checked;
    }

    // summed bound on full truncated conversions
    SplitMix64 seeds(97);
    for (int i = 0; i < 8; ++i) {
        const TensorNetwork ring =
            build_uniform(Topology::chain(5), 3, 3, Fill::random(seeds.next_u64()));
        ConvertOptions opts;
        opts.policy = TruncationPolicy::exact().with_cap(i % 2 == 0 ? 2 : 4);
        const ConversionResult r = tc_to_tt(ring, opts);
        expect(r.report.budget.complete, "error budget incomplete on a desk-scale run");
        const double err = oracle_rel(ring, r.network);
        expect(r.report.relative_error_bound >= 0.0, "missing relative bound");
        expect(err <= r.report.relative_error_bound + 1e-11,
               "conversion " + std::to_string(i) + ": error " + std::to_string(err) +
                   " > cumulative bound " + std::to_string(r.report.relative_error_bound));
    }
}

// 6. Roundtrip ring->string->ring: tight-cutoff error, exact rank growth.
void criterion_6() {
    for (const std::int64_t d : {4, 6, 8, 10}) {
        const TensorNetwork ring =
            build_uniform(Topology::chain(d), 10, 6, Fill::random(2000 + static_cast<std::uint64_t>(d)));
        ConvertOptions opts;
        opts.policy = TruncationPolicy::eps(1e-10);
        opts.error_budget = false;
        const ConversionResult to_tt = tc_to_tt(ring, opts);
        const ConversionResult back = tt_to_tc(to_tt.network, opts);
        const double err = relative_error(ring, back.network);
        expect(err <= 1e-6, "d=" + std::to_string(d) + ": roundtrip error " +
                                std::to_string(err) + " > 1e-6");
    }

    const TensorNetwork small = build_uniform(Topology::chain(4), 4, 6, Fill::random(4242));
    double original_avg = 0.0;
    for (const Bond& b : small.bonds()) original_avg += static_cast<double>(b.rank);
    original_avg /= static_cast<double>(small.bonds().size());

    ConvertOptions exact;
    exact.error_budget = false;
    const ConversionResult tt = tc_to_tt(small, exact);
    const ConversionResult ring2 = tt_to_tc(tt.network, exact);
    expect(oracle_rel(small, ring2.network) <= 1e-11, "exact roundtrip drifted");
    expect(ring2.report.avg_rank > original_avg,
           "re-converted avg rank " + std::to_string(ring2.report.avg_rank) +
               " did not exceed the original " + std::to_string(original_avg));
}

// 7. Doubling d at fixed extent/rank: bounded wall-time ratio, exactly
// linear symbolic cost.
void criterion_7() {
    const auto median_ms = [](std::int64_t d) {
        std::vector<double> times;
        for (int run = 0; run < 5; ++run) {
            const TensorNetwork ring =
                build_uniform(Topology::chain(d), 6, 4, Fill::random(3000 + static_cast<std::uint64_t>(run)));
            ConvertOptions opts;
            opts.policy = TruncationPolicy::eps(1e-10);
            opts.error_budget = false; // timing runs carry no bookkeeping
            const auto t0 = Clock::now();
            const ConversionResult r = tc_to_tt(ring, opts);
            times.push_back(ms_since(t0));
            (void)r;
        }
        std::sort(times.begin(), times.end());
        return times[times.size() / 2];
    };
    const double t16 = median_ms(16);
    const double t32 = median_ms(32);
    const double ratio = t32 / t16;
    expect(ratio <= 3.0, "wall ratio d=32 vs d=16 is " + std::to_string(ratio) + " > 3.0");

    const auto cost = [](std::int64_t d) {
        return conversion_cost_model(build_uniform(Topology::chain(d), 6, 4, Fill::zeros()),
                                     Topology::train(d));
    };
    const double d1 = cost(24) - cost(16);
    const double d2 = cost(32) - cost(24);
    expect(d1 > 0.0 && d1 == d2, "cost model is not exactly linear in d");
}

// 8. Grid flattening eliminates (R-1)^2 bonds and leaves a path of R^2 nodes.
void criterion_8() {
    for (const std::int64_t R : {2, 3, 4}) {
        const TensorNetwork grid =
            build_uniform(Topology::grid(R, R), 2, 2, Fill::random(4000 + static_cast<std::uint64_t>(R)));
        const ConversionResult r = peps_to_tt(grid, TruncationPolicy::exact());
        const std::int64_t eliminated =
            static_cast<std::int64_t>(grid.bonds().size()) -
            static_cast<std::int64_t>(r.network.bonds().size());
        expect(eliminated == (R - 1) * (R - 1),
               "R=" + std::to_string(R) + ": eliminated " + std::to_string(eliminated) +
                   " bonds, wanted " + std::to_string((R - 1) * (R - 1)));
        expect(static_cast<std::int64_t>(r.network.nodes().size()) == R * R,
               "R=" + std::to_string(R) + ": node count changed");
        expect(is_path_graph(r.network), "R=" + std::to_string(R) + ": result is not a path");
    }
}

// 9. Two fresh runs of the same seeded conversion agree byte for byte.
void criterion_9() {
    const auto once = [] {
        const TensorNetwork ring = build_uniform(Topology::chain(6), 3, 3, Fill::random(777));
        const ConversionResult tt = tc_to_tt(ring, TruncationPolicy::eps(1e-8));
        const ConversionResult back =
            tt_to_tc(tt.network, RankSplitStrategy::balanced(), TruncationPolicy::eps(1e-8));
        return serialize(tt.network) + "\n---\n" + serialize(back.network);
    };
    const std::string a = once();
    const std::string b = once();
    expect(a == b, "serialized outputs differ between runs");
}

} // namespace

int main() {
    struct Entry {
        const char* what;
        std::function<void()> fn;
    };
    const std::vector<Entry> entries = {
        {"exact d=4 ring opening hits ranks (10,36,10), avg 18.67, max 36, oracle error <= 1e-11, under 10 s",
         criterion_1},
        {"eps=1e-10 ring opening at d=10 and d=100 keeps max rank <= 36 and relative error <= 1e-6",
         criterion_2},
        {"100 random ring/string/grid instances convert exactly (oracle error <= 1e-11)", criterion_3},
        {"observed ranks never exceed the symbolic bounds on the same 100 instances", criterion_4},
        {"100 truncated single steps obey ||v - v~|| <= env * discarded; summed bounds dominate full conversions",
         criterion_5},
        {"eps=1e-10 roundtrips at d in {4,6,8,10} stay under 1e-6; the exact d=4 roundtrip grows the avg rank",
         criterion_6},
        {"doubling d (16 -> 32) keeps the wall-time ratio <= 3.0 and the cost model exactly linear",
         criterion_7},
        {"flattening an RxR grid eliminates (R-1)^2 bonds into an R^2-node path, R in {2,3,4}",
         criterion_8},
        {"a fixed seed reproduces byte-identical converted networks across two runs", criterion_9},
    };

    int failures = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto t0 = Clock::now();
        try {
            entries[i].fn();
            std::printf("[PASS] %zu. %s  (%.1f ms)\n", i + 1, entries[i].what, ms_since(t0));
        } catch (const std::exception& e) {
            ++failures;
            std::printf("[FAIL] %zu. %s: %s\n", i + 1, entries[i].what, e.what());
        }
        std::fflush(stdout);
    }
    if (failures > 0) std::printf("%d of %zu acceptance checks failed\n", failures, entries.size());
    return failures == 0 ? 0 : 1;
}
