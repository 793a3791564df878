#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tntopo/network.hpp"
#include "tntopo/svd.hpp"

namespace tntopo {

enum class StepKind { Move, Merge, Split };

/// One SVD-backed rewiring step, as recorded in conversion reports.
struct StepRecord {
    StepKind kind = StepKind::Move;
    std::vector<NodeId> nodes;        // pre-step ids of the touched nodes
    std::vector<std::string> bonds;   // touched bond labels (mover first)
    std::int64_t rows = 0;            // decomposed matrix shape
    std::int64_t cols = 0;
    std::int64_t kept_rank = 0;
    double discarded_mass = 0.0;
    double env_norm = -1.0;           // filled by budgeting callers; -1 = not computed
    double wall_ms = 0.0;
};

/// Contracts the given bond (and any parallel bonds between the same two
/// nodes, summed simultaneously) into a single node carrying the union of
/// the endpoints' remaining modes. Returns the merged node id.
NodeId contract_bond(TensorNetwork& net, EdgeId bond);

struct SplitOutcome {
    NodeId left = 0;       // orthonormal factor
    NodeId right = 0;      // carries the singular values
    EdgeId bond = 0;       // fresh bond joining the two
    StepRecord record;
};

/// Splits a node in two by SVD. `left_labels` selects the modes of the left
/// factor; both sides must be non-empty. The left factor has orthonormal
/// columns. A side without a physical mode is permitted here (transient
/// states during conversions); validate() flags it if it survives.
SplitOutcome split_node(TensorNetwork& net, NodeId node,
                        const std::vector<std::string>& left_labels,
                        const TruncationPolicy& policy);

struct MoveOutcome {
    NodeId stripped = 0;   // mover's former host, now without it
    NodeId receiver = 0;   // mover's new host
    EdgeId across = 0;     // same label as before, re-ranked by the SVD
    StepRecord record;
};

/// Relocates `mover` across `across`: the two bonds must share exactly one
/// node u, and `across` must be the only bond between u and its other
/// endpoint w (merge parallels first). Contract-then-split; afterwards the
/// mover hangs off w's successor and `across` carries the SVD kept rank.
MoveOutcome move_edge(TensorNetwork& net, EdgeId mover, EdgeId across,
                      const TruncationPolicy& policy);

struct MergeOutcome {
    NodeId left = 0;
    NodeId right = 0;
    EdgeId bond = 0;       // survivor, keeps e2's label
    StepRecord record;
};

/// Fuses parallel bonds between one node pair into a single bond of the
/// joint numerical rank: contract over all of them, re-split with the two
/// nodes' own modes as the partition. The surviving bond keeps e2's label.
MergeOutcome merge_parallel_edges(TensorNetwork& net, EdgeId e1, EdgeId e2,
                                  const TruncationPolicy& policy);

/// How an artificial bond factors an existing rank r_c: the moving bond gets
/// `moving_rank`, the original keeps `residual_rank`, with
/// moving_rank * residual_rank >= r_c (zero-padded when strict).
struct RankSplit {
    std::int64_t moving_rank = 1;
    std::int64_t residual_rank = 1;
};

/// Which of the two factor indices runs fastest through the original bond
/// index: k = moving * residual_rank + residual for ResidualFast (the
/// default), k = residual * moving_rank + moving for MovingFast.
enum class IndexPairing { ResidualFast, MovingFast };

/// Replaces `bond` by two parallel bonds via index pairing + zero padding.
/// Exact: the represented tensor is unchanged. Returns the artificial bond.
EdgeId insert_artificial_edge(TensorNetwork& net, EdgeId bond, const RankSplit& split,
                              IndexPairing pairing, const std::string& new_label);

/// Pure compute phase shared by move_edge and merge_parallel_edges: contract
/// the two node tensors over `contracted`, then split with `left_labels` on
/// the left and everything else (any relocated bond included) on the right.
/// The new bond is labelled `bond_label` in both factors. Exposed so that
/// independent steps can be computed concurrently and committed in order.
struct RewireKernelOut {
    DenseTensor left;
    DenseTensor right;
    std::int64_t kept = 0;
    double discarded = 0.0;
    std::int64_t rows = 0;
    std::int64_t cols = 0;
};
RewireKernelOut rewire_kernel(const DenseTensor& tu, const DenseTensor& tw,
                              const std::vector<std::string>& contracted,
                              const std::vector<std::string>& left_labels,
                              const std::string& bond_label, const TruncationPolicy& policy);

/// Commit phase for a move whose kernel already ran. Returns the outcome
/// with record fields (rows/cols/kept/discarded) filled from the kernel.
MoveOutcome commit_move(TensorNetwork& net, EdgeId mover, EdgeId across, RewireKernelOut&& k);
MergeOutcome commit_merge(TensorNetwork& net, EdgeId e1, EdgeId e2, RewireKernelOut&& k);

/// Kernel inputs for a pending move/merge, resolved against the current net.
struct PendingRewire {
    NodeId u = 0;
    NodeId w = 0;
    std::vector<std::string> contracted;
    std::vector<std::string> left_labels;
    std::string bond_label;
};
PendingRewire stage_move(const TensorNetwork& net, EdgeId mover, EdgeId across);
PendingRewire stage_merge(const TensorNetwork& net, EdgeId e1, EdgeId e2);

} // namespace tntopo
