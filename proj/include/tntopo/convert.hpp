#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tntopo/network.hpp"
#include "tntopo/rewire.hpp"
#include "tntopo/svd.hpp"
#include "tntopo/verify.hpp"

namespace tntopo {

/// How the closing rank r_c is factored into (moving, residual) when a
/// string grows its ring-closing bond. Balanced picks moving =
/// ceil(sqrt(r_c)) and residual = ceil(r_c / moving); what the best split is
/// remains an open problem, so the strategy is pluggable.
struct RankSplitStrategy {
    enum class Kind { Balanced, Fixed };
    Kind kind = Kind::Balanced;
    std::int64_t moving = 0;   // Fixed only
    std::int64_t residual = 0; // Fixed only

    static RankSplitStrategy balanced() { return {}; }
    static RankSplitStrategy fixed(std::int64_t moving, std::int64_t residual) {
        return {Kind::Fixed, moving, residual};
    }
    RankSplit resolve(std::int64_t closing_rank) const;
};

struct ConvertOptions {
    TruncationPolicy policy = TruncationPolicy::exact();
    RankSplitStrategy split{};                      // string -> ring only
    IndexPairing pairing = IndexPairing::ResidualFast;
    /// Compute independent end-move pairs concurrently. Commits stay in plan
    /// order, so results are bit-identical to the sequential run.
    bool parallel = false;
    /// Attach environment norms and the cumulative error bound to the report
    /// (skipped under an exact policy, where the bound is zero). Costs one
    /// environment sweep per step; turn off for pure timing runs.
    bool error_budget = true;
    std::int64_t oracle_cap = kDefaultOracleCap;    // for non-path environments
};

struct ConversionReport {
    std::string conversion;                          // "chain->train" etc.
    std::vector<StepRecord> steps;                   // one per SVD, in order
    std::map<std::string, std::int64_t> final_ranks; // bond label -> rank
    double avg_rank = 0.0;
    std::int64_t max_rank = 0;
    ErrorBudget budget;
    double cumulative_error_bound = 0.0;  // = budget.cumulative; 0 when exact
    double input_norm = -1.0;             // -1 when not computed
    double relative_error_bound = -1.0;   // bound / input_norm when both known
    std::int64_t moving_rank = 0;         // string -> ring: artificial bond
    std::int64_t residual_rank = 0;       //   and what the center bond kept
    double total_wall_ms = 0.0;
};

struct ConversionResult {
    TensorNetwork network;
    ConversionReport report;
};

/// Ring to string: the moving bond (naturally greatest label, j_d on built
/// rings) walks inward from both ends, alternating and starting at the
/// smaller-id end, then one merge at the center fuses it with the bond it
/// came to rest against. d-2 moves + 1 merge.
ConversionResult tc_to_tt(const TensorNetwork& ring, const ConvertOptions& opts = {});
ConversionResult tc_to_tt(const TensorNetwork& ring, const TruncationPolicy& policy);

/// String to ring: insert an artificial bond at the center bond via index
/// pairing, then move it outward, first toward the far end, alternating,
/// until it closes the ring between the two end nodes. d-2 moves.
ConversionResult tt_to_tc(const TensorNetwork& string, const ConvertOptions& opts = {});
ConversionResult tt_to_tc(const TensorNetwork& string, const RankSplitStrategy& split,
                          const TruncationPolicy& policy);

/// Grid to string: eliminate the verticals of row pairs (1,2), (3,4), ...
/// sweeping left to right (keeping the last column's vertical), then of
/// pairs (2,3), (4,5), ... right to left (keeping the first column's); each
/// elimination is two moves across the flanking horizontals plus one merge.
/// The result is the boustrophedon path over all rows*cols nodes.
ConversionResult peps_to_tt(const TensorNetwork& grid, const ConvertOptions& opts = {});
ConversionResult peps_to_tt(const TensorNetwork& grid, const TruncationPolicy& policy);

/// Dispatch by structure: rings (2x2 grids included) and grids convert to
/// trains, paths to chains. Unreachable targets raise ArgumentError.
ConversionResult convert_to(const TensorNetwork& net, Topology::Kind target,
                            const ConvertOptions& opts = {});

/// One planned SVD with its dimensions and rank bound, data untouched.
struct PlannedSvd {
    StepKind kind = StepKind::Move;
    std::string bond;        // the re-ranked bond's label
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::int64_t bound = 0;  // min(rows, cols, product of participating ranks)
};

struct RankBoundPlan {
    std::string conversion;
    std::map<std::string, std::int64_t> bond_bounds; // post-conversion bonds
    std::vector<PlannedSvd> steps;
    std::int64_t moving_rank = 0;   // string -> ring only
    std::int64_t residual_rank = 0;
};

/// Runs the conversion plan on ranks only: every SVD's kept rank is bounded
/// by min(row dimension, column dimension, product of the ranks entering the
/// decomposition), and bounds propagate through subsequent steps. Observed
/// ranks of the actual conversion never exceed these, since both follow the
/// identical plan.
RankBoundPlan predict_rank_bounds(const TensorNetwork& net, const Topology& target,
                                  const std::optional<RankSplitStrategy>& split = {});

/// Work estimate for the same symbolic plan: sum of rows*cols*bound over all
/// planned decompositions. Exactly linear in the node count beyond the point
/// where the propagated bounds saturate.
double conversion_cost_model(const TensorNetwork& net, const Topology& target,
                             const std::optional<RankSplitStrategy>& split = {});

} // namespace tntopo
