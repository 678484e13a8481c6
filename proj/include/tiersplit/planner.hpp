// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tiersplit/graph.hpp"
#include "tiersplit/latency_model.hpp"
#include "tiersplit/tier.hpp"

namespace tiersplit {

/// Tier per vertex while planning; unassigned vertices are empty.
using Assignment = std::vector<std::optional<Tier>>;

enum class Provenance { full, incremental };

struct PartitionPlan {
    std::vector<Tier> tiers;  // indexed by vertex id
    double theta = 0.0;       // total latency in seconds
    Provenance provenance = Provenance::full;

    bool operator==(const PartitionPlan&) const = default;
};

struct HpaOptions {
    /// When set, a vertex may never sit on an earlier tier than any of its
    /// predecessors. The default only requires it not to sit earlier than all of them.
    bool strict_potential = false;
};

/// Relative bounds (new / planned) inside which a change is ignored.
struct Thresholds {
    struct Range {
        double lower = 1.0;
        double upper = 1.0;
        bool contains(double ratio) const { return ratio >= lower && ratio <= upper; }
    };
    Range vertex_time;
    Range bandwidth;

    void validate() const;
};

/// Tiers a vertex may occupy given the tiers of its direct predecessors.
TierSet potential_tiers(std::span<const Tier> pred_tiers, bool strict = false);

/// True when tiers[0] is the device and every other vertex respects potential_tiers().
bool is_valid_assignment(const DnnGraph& g, std::span<const Tier> tiers, bool strict = false);

/// One charged transfer: the output of `source` shipped from tier `from` to `to`.
struct Transfer {
    VertexId source = 0;
    Tier from = Tier::device;
    Tier to = Tier::device;
    std::size_t link = 0;  // the consumer link whose weight is charged
    double seconds = 0.0;
};

/// Transfers under deduplicated accounting: one charge per (source vertex,
/// destination tier) that has at least one assigned consumer. Ordered by source
/// id, then by the first consumer that needs the tier. Unassigned vertices are skipped.
std::vector<Transfer> dedup_transfers(const WeightedGraph& wg, const Assignment& assignment);

/// Total latency: processing time of every vertex plus deduplicated transfers.
/// Throws incomplete_assignment when a vertex has no tier.
double total_latency(const WeightedGraph& wg, std::span<const Tier> tiers);
double total_latency(const WeightedGraph& wg, const Assignment& assignment);

/// Same objective restricted to the assigned vertices and the transfers they need.
double partial_latency(const WeightedGraph& wg, const Assignment& assignment);

/// Processing time of v at t plus the transfers its inputs would newly need;
/// a transfer already paid for another consumer on tier t is free. Every
/// predecessor of v must be assigned; v's own entry is ignored.
double candidate_latency(const WeightedGraph& wg, VertexId v, Tier t, const Assignment& assignment);

/// Direct successor with the longest edge-tier processing time (lowest id on ties).
std::optional<VertexId> largest_direct_successor(const WeightedGraph& wg, VertexId v);

/// Evaluates the six (v, succ) placements (d,d) (d,e) (e,e) (e,c) (c,c) (d,c)
/// whose v-tier lies in gamma and returns the v-tier of the cheapest pair.
Tier lookahead_select(const WeightedGraph& wg, VertexId v, VertexId succ, TierSet gamma, const Assignment& assignment);

enum class SelectionRule { input, forced_cloud, local_argmin, lookahead };

/// Picks v's tier: forced to the cloud when gamma = {c}; the local argmin of
/// candidate_latency when v's input is larger than its output or v is a sink;
/// otherwise the lookahead over its largest direct successor.
Tier select_optimal_tier(const WeightedGraph& wg, VertexId v, TierSet gamma, const Assignment& assignment,
                         SelectionRule* rule = nullptr);

/// Moves every SIS vertex that sits on an earlier tier than its superset
/// sibling onto that sibling's tier, repeating in id order until nothing moves.
/// Returns the number of moves.
std::size_t sis_update(const WeightedGraph& wg, std::span<const VertexId> layer, Assignment& assignment);
PartitionPlan sis_update(const WeightedGraph& wg, std::span<const VertexId> layer, const PartitionPlan& plan);

struct HpaDecision {
    VertexId vertex = 0;
    TierSet gamma;
    SelectionRule rule = SelectionRule::input;
    Tier chosen = Tier::device;
    Assignment snapshot;  // tiers before the decision; filled only when requested
};

struct HpaTrace {
    bool keep_snapshots = false;
    std::vector<HpaDecision> decisions;
    std::size_t sis_moves = 0;
};

/// Layered greedy partitioning over the longest-distance layers of the graph.
PartitionPlan hpa(const WeightedGraph& wg, const HpaOptions& options = {}, HpaTrace* trace = nullptr);

inline constexpr std::size_t kBruteForceMaxVertices = 16;

struct OptimalPlan {
    PartitionPlan plan;
    std::uint64_t evaluated = 0;  // valid assignments scored
};

/// Exhaustive search over valid assignments; the lexicographically first
/// minimizer wins. Throws size_guard above kBruteForceMaxVertices vertices.
OptimalPlan brute_force_optimal(const WeightedGraph& wg, const HpaOptions& options = {});

struct IncrementalOptions {
    HpaOptions hpa;
    /// Replace the result by a full hpa() run when it is more than this many
    /// percent slower. Disabled when empty.
    std::optional<double> escalate_above_gap_pct;
    /// Compute gap_vs_full even without escalation.
    bool measure_gap = false;
};

struct IncrementalResult {
    PartitionPlan plan;
    bool triggered = false;             // some change fell outside the thresholds
    std::vector<VertexId> recomputed;   // local scope, in processing order
    std::vector<VertexId> repaired;     // vertices re-selected to restore validity
    std::optional<double> gap_vs_full;  // theta / theta(full hpa) - 1
    bool escalated = false;
};

/// Vertices whose processing times or outgoing link delays differ between two weightings.
std::vector<VertexId> changed_vertices(const WeightedGraph& before, const WeightedGraph& after);

/// Re-plans locally after weights moved from `planned_with` to `current`.
/// When every change is inside the thresholds the plan comes back untouched
/// (theta still refers to `planned_with`). Otherwise the changed vertices, their
/// SIS vertices, their direct successors and those successors' SIS vertices are
/// re-selected in ascending layer order against the existing tiers.
IncrementalResult incremental_update(const PartitionPlan& plan, const WeightedGraph& planned_with,
                                     const WeightedGraph& current, std::span<const VertexId> changed,
                                     const Thresholds& thresholds, const IncrementalOptions& options = {});

}  // namespace tiersplit
