// Command line front end: generate networks, convert between topologies,
// verify conversions, run bench sweeps, print rank-bound plans.
//
// Exit codes: 0 success, 1 validation or bound violation, 2 usage error.
#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "tntopo/convert.hpp"
#include "tntopo/errors.hpp"
#include "tntopo/network.hpp"
#include "tntopo/verify.hpp"

namespace {

using nlohmann::json;
using namespace tntopo;

/// Config problems detected after CLI11 parsing; mapped to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Violated invariant or error bound; mapped to exit code 1.
struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

TruncationPolicy parse_policy(const std::string& text) {
    if (text == "exact") return TruncationPolicy::exact();
    if (text.rfind("eps:", 0) == 0) {
        try {
            std::size_t used = 0;
            const double v = std::stod(text.substr(4), &used);
            if (used == text.size() - 4 && v > 0.0) return TruncationPolicy::eps(v);
        } catch (const std::exception&) {
        }
    } else if (text.rfind("maxrank:", 0) == 0) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(text.substr(8), &used);
            if (used == text.size() - 8 && v >= 1) return TruncationPolicy::cap(v);
        } catch (const std::exception&) {
        }
    }
    throw UsageError("--policy must be exact, eps:<float> or maxrank:<int>, got '" + text + "'");
}

std::string policy_text(const TruncationPolicy& p) {
    if (p.is_exact()) return "exact";
    std::string out;
    if (p.rel_cutoff) out = fmt::format("eps:{:g}", *p.rel_cutoff);
    if (p.max_rank) out += fmt::format("{}maxrank:{}", out.empty() ? "" : "+", *p.max_rank);
    return out;
}

RankSplitStrategy parse_split(const std::string& text) {
    if (text.empty() || text == "balanced") return RankSplitStrategy::balanced();
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        try {
            std::size_t ua = 0;
            std::size_t ub = 0;
            const long long moving = std::stoll(text.substr(0, colon), &ua);
            const long long residual = std::stoll(text.substr(colon + 1), &ub);
            if (ua == colon && colon + 1 + ub == text.size() && moving >= 1 && residual >= 1)
                return RankSplitStrategy::fixed(moving, residual);
        } catch (const std::exception&) {
        }
    }
    throw UsageError("--split must be balanced or <moving>:<residual>, got '" + text + "'");
}

Topology::Kind parse_target(const std::string& text) {
    if (text == "tt") return Topology::Kind::Train;
    if (text == "tc") return Topology::Kind::Chain;
    throw UsageError("--to must be tt or tc, got '" + text + "'");
}

TensorNetwork load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckFailure("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

void save_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckFailure("cannot write '" + path + "'");
    out << text;
}

std::string derived_path(const std::string& input, const std::string& suffix) {
    std::string stem = input;
    if (stem.size() > 5 && stem.compare(stem.size() - 5, 5, ".json") == 0)
        stem.resize(stem.size() - 5);
    return stem + suffix;
}

const char* kind_name(StepKind k) {
    switch (k) {
        case StepKind::Move: return "move";
        case StepKind::Merge: return "merge";
        case StepKind::Split: return "split";
    }
    return "?";
}

json report_json(const ConversionReport& rep, const std::string& policy, bool parallel) {
    json steps = json::array();
    for (const StepRecord& s : rep.steps)
        steps.push_back({{"kind", kind_name(s.kind)},
                         {"nodes", s.nodes},
                         {"bonds", s.bonds},
                         {"rows", s.rows},
                         {"cols", s.cols},
                         {"kept_rank", s.kept_rank},
                         {"discarded_mass", s.discarded_mass},
                         {"env_norm", s.env_norm},
                         {"wall_ms", s.wall_ms}});
    json entries = json::array();
    for (const BudgetEntry& e : rep.budget.entries)
        entries.push_back({{"env_norm", e.env_norm},
                           {"discarded_mass", e.discarded_mass},
                           {"bound", e.bound}});
    return {{"schema", "tntopo-report-v1"},
            {"conversion", rep.conversion},
            {"policy", policy},
            {"parallel", parallel},
            {"steps", steps},
            {"final_ranks", rep.final_ranks},
            {"avg_rank", rep.avg_rank},
            {"max_rank", rep.max_rank},
            {"error_budget",
             {{"entries", entries}, {"cumulative", rep.budget.cumulative}, {"complete", rep.budget.complete}}},
            {"cumulative_error_bound", rep.cumulative_error_bound},
            {"input_norm", rep.input_norm},
            {"relative_error_bound", rep.relative_error_bound},
            {"moving_rank", rep.moving_rank},
            {"residual_rank", rep.residual_rank},
            {"total_wall_ms", rep.total_wall_ms}};
}

// ---- generate ------------------------------------------------------------

struct GenerateArgs {
    std::string topology;
    std::int64_t d = 4;
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::int64_t n = 2;
    std::int64_t rank = 2;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_generate(const GenerateArgs& a) {
    Topology topo;
    if (a.topology == "tc") {
        topo = Topology::chain(a.d);
    } else if (a.topology == "tt") {
        topo = Topology::train(a.d);
    } else if (a.topology == "peps") {
        if (a.rows < 2 || a.cols < 2) throw UsageError("peps needs --rows and --cols, both >= 2");
        topo = Topology::grid(a.rows, a.cols);
    } else {
        throw UsageError("--topology must be tc, tt or peps, got '" + a.topology + "'");
    }
    const TensorNetwork net = build_uniform(topo, a.n, a.rank, Fill::random(a.seed));
    const auto violations = validate(net);
    for (const Violation& v : violations)
        fmt::print(stderr, "violation [{}] {}\n", v.code, v.message);
    if (!violations.empty()) throw CheckFailure("generated network failed validation");
    save_text(a.out, serialize(net));
    fmt::print("wrote {}: {} nodes, {} bonds, topology {}, seed {}\n", a.out, net.nodes().size(),
               net.bonds().size(), to_string(topology_of(net)), a.seed);
    return 0;
}

// ---- convert -------------------------------------------------------------

struct ConvertArgs {
    std::string input;
    std::string to;
    std::string policy = "exact";
    std::string split = "balanced";
    bool parallel = false;
    bool no_budget = false;
    std::string out;
    std::string report;
};

int cmd_convert(const ConvertArgs& a) {
    const Topology::Kind target = parse_target(a.to);
    ConvertOptions opts;
    opts.policy = parse_policy(a.policy);
    opts.split = parse_split(a.split);
    opts.parallel = a.parallel;
    opts.error_budget = !a.no_budget;

    const TensorNetwork net = load_network(a.input);
    const ConversionResult res = convert_to(net, target, opts);

    const std::string out = a.out.empty() ? derived_path(a.input, "." + a.to + ".json") : a.out;
    const std::string report =
        a.report.empty() ? derived_path(a.input, "." + a.to + ".report.json") : a.report;
    save_text(out, serialize(res.network));
    save_text(report, report_json(res.report, policy_text(opts.policy), a.parallel).dump(2) + "\n");

    fmt::print("{}: {} steps, wrote {} and {}\n", res.report.conversion, res.report.steps.size(),
               out, report);
    fmt::print("CPU-time {:.1f} ms | Avg. rank {:.2f} | Max. rank {} | rel. error bound {}\n",
               res.report.total_wall_ms, res.report.avg_rank, res.report.max_rank,
               res.report.relative_error_bound >= 0.0
                   ? fmt::format("{:.3e}", res.report.relative_error_bound)
                   : std::string("n/a"));
    return 0;
}

// ---- verify --------------------------------------------------------------

struct VerifyArgs {
    std::string a;
    std::string b;
    std::string mode = "auto";
    std::string report;
    std::int64_t cap = kDefaultOracleCap;
};

double oracle_mode_error(const TensorNetwork& a, const TensorNetwork& b, std::int64_t cap) {
    const DenseTensor ta = oracle_contract(a, cap);
    const DenseTensor tb = transpose(oracle_contract(b, cap), ta.labels());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < ta.data().size(); ++i) {
        const double d = ta.data()[i] - tb.data()[i];
        num += d * d;
        den += ta.data()[i] * ta.data()[i];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

double inner_mode_error(const TensorNetwork& a, const TensorNetwork& b) {
    const ScaledValue aa = inner_product_scaled(a, a);
    const ScaledValue ab = inner_product_scaled(a, b);
    const ScaledValue bb = inner_product_scaled(b, b);
    if (aa.mantissa <= 0.0)
        return bb.mantissa == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    const auto ratio = [&](const ScaledValue& x) {
        return std::ldexp(x.mantissa / aa.mantissa, static_cast<int>(x.exponent - aa.exponent));
    };
    const double radicand = 1.0 - 2.0 * ratio(ab) + ratio(bb);
    return std::sqrt(std::max(radicand, 0.0));
}

int cmd_verify(const VerifyArgs& a) {
    const TensorNetwork na = load_network(a.a);
    const TensorNetwork nb = load_network(a.b);

    double err = 0.0;
    double floor = 1e-7; // expanded-form radicand clamp resolves nothing below this
    if (a.mode == "oracle") {
        err = oracle_mode_error(na, nb, a.cap);
        floor = 1e-11;
    } else if (a.mode == "inner") {
        err = inner_mode_error(na, nb);
    } else if (a.mode == "auto") {
        err = relative_error(na, nb, a.cap);
    } else {
        throw UsageError("--mode must be auto, oracle or inner, got '" + a.mode + "'");
    }
    fmt::print("relative error {:.6e} ({} mode)\n", err, a.mode);

    if (!a.report.empty()) {
        std::ifstream in(a.report);
        if (!in) throw CheckFailure("cannot open '" + a.report + "'");
        json rep = json::parse(in);
        double bound = rep.value("relative_error_bound", -1.0);
        if (bound < 0.0) bound = 0.0; // exact conversion carries no budget
        fmt::print("relative error bound {:.6e}\n", bound);
        if (err > bound + floor)
            throw CheckFailure(fmt::format("error {:.6e} exceeds bound {:.6e}", err, bound));
        fmt::print("bound holds\n");
    }
    return 0;
}

// ---- bounds --------------------------------------------------------------

struct BoundsArgs {
    std::string input;
    std::string to;
    std::string split = "balanced";
    std::string out;
};

int cmd_bounds(const BoundsArgs& a) {
    const TensorNetwork net = load_network(a.input);
    const RankSplitStrategy split = parse_split(a.split);
    const RankBoundPlan plan = predict_rank_bounds(net, Topology{parse_target(a.to)}, split);
    json steps = json::array();
    for (const PlannedSvd& s : plan.steps)
        steps.push_back({{"kind", kind_name(s.kind)},
                         {"bond", s.bond},
                         {"rows", s.rows},
                         {"cols", s.cols},
                         {"bound", s.bound}});
    const json out = {{"schema", "tntopo-bounds-v1"},
                      {"conversion", plan.conversion},
                      {"bond_bounds", plan.bond_bounds},
                      {"steps", steps},
                      {"moving_rank", plan.moving_rank},
                      {"residual_rank", plan.residual_rank},
                      {"cost_flops", conversion_cost_model(net, Topology{parse_target(a.to)}, split)}};
    if (a.out.empty())
        fmt::print("{}\n", out.dump(2));
    else
        save_text(a.out, out.dump(2) + "\n");
    return 0;
}

// ---- bench ---------------------------------------------------------------

struct BenchArgs {
    std::string table;
    std::vector<std::int64_t> ds;
    std::int64_t n = 10;
    std::int64_t rank = 6;
    double eps = 1e-10;
    int seeds = 3;
    std::uint64_t seed = 42;
    bool parallel = false;
    std::string out;
};

constexpr double kMatrixBudget = 1e6; // entries per intermediate matrix, exact tables

struct Stats {
    std::vector<double> xs;
    void add(double x) { xs.push_back(x); }
    double mean() const {
        double s = 0.0;
        for (double x : xs) s += x;
        return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
    }
    double stddev() const {
        if (xs.size() < 2) return 0.0;
        const double m = mean();
        double s = 0.0;
        for (double x : xs) s += (x - m) * (x - m);
        return std::sqrt(s / static_cast<double>(xs.size() - 1));
    }
};

struct StageStats {
    Stats time_ms, avg_rank, max_rank, rel_error;
};

double planned_matrix_entries(const RankBoundPlan& plan) {
    double worst = 0.0;
    for (const PlannedSvd& s : plan.steps)
        worst = std::max(worst, static_cast<double>(s.rows) * static_cast<double>(s.cols));
    return worst;
}

void check_rank_dominance(const RankBoundPlan& plan, const ConversionReport& rep) {
    for (const auto& [label, rank] : rep.final_ranks) {
        const auto it = plan.bond_bounds.find(label);
        if (it == plan.bond_bounds.end() || rank > it->second)
            throw CheckFailure(fmt::format("bench invariant: observed rank {} of bond {} exceeds bound",
                                           rank, label));
    }
}

int cmd_bench(const BenchArgs& a) {
    static const std::vector<std::string> kTables = {"tc2tt-exact", "tc2tt-approx", "tt2tc-approx",
                                                     "tc2tt2tc-exact", "tc2tt2tc-approx"};
    if (std::find(kTables.begin(), kTables.end(), a.table) == kTables.end()) {
        std::string names;
        for (const auto& t : kTables) names += (names.empty() ? "" : ", ") + t;
        throw UsageError("--table must be one of " + names);
    }
    const bool exact = a.table.find("-exact") != std::string::npos;
    const bool roundtrip = a.table.rfind("tc2tt2tc", 0) == 0;
    const bool from_train = a.table.rfind("tt2tc", 0) == 0;
    const TruncationPolicy policy = exact ? TruncationPolicy::exact() : TruncationPolicy::eps(a.eps);

    std::vector<std::int64_t> ds = a.ds;
    if (ds.empty()) ds = exact ? std::vector<std::int64_t>{4, 6} : std::vector<std::int64_t>{4, 6, 8, 10};

    std::ostringstream csv;
    csv << fmt::format("# tntopo-bench-v1 table={} n={} rank={} policy={} seeds={}\n", a.table, a.n,
                       a.rank, policy_text(policy), a.seeds);
    csv << "stage,d,time_ms_mean,time_ms_std,avg_rank_mean,avg_rank_std,max_rank_mean,max_rank_std,"
           "rel_error_mean,rel_error_std\n";

    ConvertOptions opts;
    opts.policy = policy;
    opts.parallel = a.parallel;
    opts.error_budget = false; // bench reports measured error, not the budget

    bool truncated = false;
    for (std::int64_t d : ds) {
        const Topology topo = from_train ? Topology::train(d) : Topology::chain(d);
        StageStats first, second;
        for (int s = 0; s < a.seeds && !truncated; ++s) {
            const TensorNetwork net =
                build_uniform(topo, a.n, a.rank, Fill::random(a.seed + static_cast<std::uint64_t>(s)));
            const Topology target1 = from_train ? Topology::train(0) /*unused*/ : Topology::train(d);
            const RankBoundPlan plan1 = from_train
                                            ? predict_rank_bounds(net, Topology{Topology::Kind::Chain})
                                            : predict_rank_bounds(net, target1);
            if (exact && planned_matrix_entries(plan1) > kMatrixBudget) {
                csv << fmt::format("# truncated: d={} planned matrix {:.0f} entries exceeds budget {:.0f}\n",
                                   d, planned_matrix_entries(plan1), kMatrixBudget);
                truncated = true;
                break;
            }
            const ConversionResult r1 = from_train ? tt_to_tc(net, opts) : tc_to_tt(net, opts);
            check_rank_dominance(plan1, r1.report);
            first.time_ms.add(r1.report.total_wall_ms);
            first.avg_rank.add(r1.report.avg_rank);
            first.max_rank.add(static_cast<double>(r1.report.max_rank));
            first.rel_error.add(relative_error(net, r1.network));

            if (roundtrip) {
                const RankBoundPlan plan2 =
                    predict_rank_bounds(r1.network, Topology{Topology::Kind::Chain});
                if (exact && planned_matrix_entries(plan2) > kMatrixBudget) {
                    csv << fmt::format(
                        "# truncated: d={} stage=tt2tc planned matrix {:.0f} entries exceeds budget {:.0f}\n",
                        d, planned_matrix_entries(plan2), kMatrixBudget);
                    truncated = true;
                    break;
                }
                const ConversionResult r2 = tt_to_tc(r1.network, opts);
                check_rank_dominance(plan2, r2.report);
                second.time_ms.add(r2.report.total_wall_ms);
                second.avg_rank.add(r2.report.avg_rank);
                second.max_rank.add(static_cast<double>(r2.report.max_rank));
                second.rel_error.add(relative_error(net, r2.network));
            }
        }
        if (truncated) break;
        const auto emit = [&](const std::string& stage, const StageStats& st) {
            csv << fmt::format("{},{},{:.3f},{:.3f},{:.4f},{:.4f},{:.1f},{:.1f},{:.6e},{:.6e}\n", stage,
                               d, st.time_ms.mean(), st.time_ms.stddev(), st.avg_rank.mean(),
                               st.avg_rank.stddev(), st.max_rank.mean(), st.max_rank.stddev(),
                               st.rel_error.mean(), st.rel_error.stddev());
        };
        emit(from_train ? "tt2tc" : "tc2tt", first);
        if (roundtrip) emit("tt2tc", second);
    }

    if (a.out.empty())
        fmt::print("{}", csv.str());
    else
        save_text(a.out, csv.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tensor network topology converter"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("generate", "build a random network file");
    cmd_gen->add_option("--topology", gen.topology, "tc | tt | peps")->required();
    cmd_gen->add_option("--d", gen.d, "node count for tc/tt");
    cmd_gen->add_option("--rows", gen.rows, "grid rows (peps)");
    cmd_gen->add_option("--cols", gen.cols, "grid cols (peps)");
    cmd_gen->add_option("--n", gen.n, "physical dimension");
    cmd_gen->add_option("--rank", gen.rank, "uniform bond rank");
    cmd_gen->add_option("--seed", gen.seed, "fill seed");
    cmd_gen->add_option("-o,--out", gen.out, "output network file")->required();

    ConvertArgs conv;
    CLI::App* cmd_conv = app.add_subcommand("convert", "convert a network between topologies");
    cmd_conv->add_option("input", conv.input, "network file")->required();
    cmd_conv->add_option("--to", conv.to, "target topology: tt | tc")->required();
    cmd_conv->add_option("--policy", conv.policy, "exact | eps:<float> | maxrank:<int>");
    cmd_conv->add_option("--split", conv.split, "closing-bond rank split: balanced | <moving>:<residual>");
    cmd_conv->add_flag("--parallel", conv.parallel, "compute independent end moves concurrently");
    cmd_conv->add_flag("--no-budget", conv.no_budget, "skip error budget bookkeeping");
    cmd_conv->add_option("-o,--out", conv.out, "output network file");
    cmd_conv->add_option("--report", conv.report, "output report file");

    VerifyArgs ver;
    CLI::App* cmd_ver = app.add_subcommand("verify", "measure the relative error between two networks");
    cmd_ver->add_option("a", ver.a, "reference network file")->required();
    cmd_ver->add_option("b", ver.b, "comparison network file")->required();
    cmd_ver->add_option("--mode", ver.mode, "auto | oracle | inner");
    cmd_ver->add_option("--report", ver.report, "conversion report; checks error <= bound");
    cmd_ver->add_option("--cap", ver.cap, "oracle size cap (entries)");

    BoundsArgs bnd;
    CLI::App* cmd_bnd = app.add_subcommand("bounds", "print the symbolic rank-bound plan");
    cmd_bnd->add_option("input", bnd.input, "network file")->required();
    cmd_bnd->add_option("--to", bnd.to, "target topology: tt | tc")->required();
    cmd_bnd->add_option("--split", bnd.split, "closing-bond rank split: balanced | <moving>:<residual>");
    cmd_bnd->add_option("-o,--out", bnd.out, "output file (default: stdout)");

    BenchArgs ben;
    CLI::App* cmd_ben = app.add_subcommand("bench", "run a named sweep and emit CSV");
    cmd_ben->add_option("--table", ben.table,
                        "tc2tt-exact | tc2tt-approx | tt2tc-approx | tc2tt2tc-exact | tc2tt2tc-approx")
        ->required();
    cmd_ben->add_option("--d", ben.ds, "node counts (comma separated)")->delimiter(',');
    cmd_ben->add_option("--n", ben.n, "physical dimension");
    cmd_ben->add_option("--rank", ben.rank, "uniform bond rank");
    cmd_ben->add_option("--eps", ben.eps, "relative cutoff for approx tables");
    cmd_ben->add_option("--seeds", ben.seeds, "seeds per point")->check(CLI::PositiveNumber);
    cmd_ben->add_option("--seed", ben.seed, "base seed");
    cmd_ben->add_flag("--parallel", ben.parallel, "compute independent end moves concurrently");
    cmd_ben->add_option("-o,--out", ben.out, "output CSV file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cmd_gen) return cmd_generate(gen);
        if (*cmd_conv) return cmd_convert(conv);
        if (*cmd_ver) return cmd_verify(ver);
        if (*cmd_bnd) return cmd_bounds(bnd);
        if (*cmd_ben) return cmd_bench(ben);
    } catch (const UsageError& e) {
        fmt::print(stderr, "usage error: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 2;
}
