// SPDX-License-Identifier: Apache-2.0

#include "tiersplit/planner.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <string>

#include "tiersplit/error.hpp"

namespace tiersplit {

namespace {

std::string vname(VertexId v) { return "v" + std::to_string(v); }

Tier require(const Assignment& a, VertexId v) {
    if (v >= a.size() || !a[v]) throw Error(ErrorCode::incomplete_assignment, vname(v) + " has no tier");
    return *a[v];
}

Assignment to_assignment(std::span<const Tier> tiers) { return {tiers.begin(), tiers.end()}; }

std::vector<Tier> to_tiers(const Assignment& a) {
    std::vector<Tier> out;
    out.reserve(a.size());
    for (VertexId v = 0; v < a.size(); ++v) out.push_back(require(a, v));
    return out;
}

TierSet gamma_for(const DnnGraph& g, VertexId v, const Assignment& a, bool strict) {
    if (v == 0) return {Tier::device};
    std::vector<Tier> pred_tiers;
    for (VertexId p : g.predecessors(v)) pred_tiers.push_back(require(a, p));
    return potential_tiers(pred_tiers, strict);
}

bool valid_at(const DnnGraph& g, VertexId v, std::span<const Tier> tiers, bool strict) {
    if (v == 0) return tiers[0] == Tier::device;
    int lo = 3;
    int hi = -1;
    for (VertexId p : g.predecessors(v)) {
        lo = std::min(lo, rank(tiers[p]));
        hi = std::max(hi, rank(tiers[p]));
    }
    return rank(tiers[v]) >= (strict ? hi : lo);
}

// Sum of per-vertex processing times followed by the deduplicated transfers.
// Shared by total_latency and partial_latency so both add in the same order.
double objective(const WeightedGraph& wg, const Assignment& a) {
    double processing = 0.0;
    for (VertexId v = 0; v < a.size(); ++v) {
        if (a[v]) processing += wg.time(v, *a[v]);
    }
    double transfer = 0.0;
    for (const Transfer& t : dedup_transfers(wg, a)) transfer += t.seconds;
    return processing + transfer;
}

}  // namespace

void Thresholds::validate() const {
    for (const Range& r : {vertex_time, bandwidth}) {
        if (!(r.lower >= 0.0 && r.lower <= 1.0 && r.upper >= 1.0)) {
            throw Error(ErrorCode::parse, "thresholds must satisfy 0 <= lower <= 1 <= upper");
        }
    }
}

TierSet potential_tiers(std::span<const Tier> pred_tiers, bool strict) {
    if (pred_tiers.empty()) return {Tier::device};
    int bound = strict ? -1 : 3;
    for (Tier t : pred_tiers) bound = strict ? std::max(bound, rank(t)) : std::min(bound, rank(t));
    TierSet out;
    for (Tier t : kTiers) {
        if (rank(t) >= bound) out.insert(t);
    }
    return out;
}

bool is_valid_assignment(const DnnGraph& g, std::span<const Tier> tiers, bool strict) {
    if (tiers.size() != g.size()) return false;
    for (VertexId v = 0; v < g.size(); ++v) {
        if (!valid_at(g, v, tiers, strict)) return false;
    }
    return true;
}

std::vector<Transfer> dedup_transfers(const WeightedGraph& wg, const Assignment& a) {
    const DnnGraph& g = wg.graph;
    std::vector<Transfer> out;
    for (VertexId h = 0; h < g.size() && h < a.size(); ++h) {
        if (!a[h]) continue;
        const Tier from = *a[h];
        TierSet charged;
        for (std::size_t li : g.out_links(h)) {
            const VertexId consumer = g.links()[li].to;
            if (consumer >= a.size() || !a[consumer]) continue;
            const Tier to = *a[consumer];
            if (to == from || charged.contains(to)) continue;
            charged.insert(to);
            out.push_back({h, from, to, li, wg.delay(li, from, to)});
        }
    }
    return out;
}

double total_latency(const WeightedGraph& wg, std::span<const Tier> tiers) {
    if (tiers.size() != wg.graph.size()) {
        throw Error(ErrorCode::incomplete_assignment, "assignment covers " + std::to_string(tiers.size()) + " of " +
                                                          std::to_string(wg.graph.size()) + " vertices");
    }
    return objective(wg, to_assignment(tiers));
}

double total_latency(const WeightedGraph& wg, const Assignment& assignment) {
    return total_latency(wg, to_tiers(assignment));
}

double partial_latency(const WeightedGraph& wg, const Assignment& assignment) { return objective(wg, assignment); }

double candidate_latency(const WeightedGraph& wg, VertexId v, Tier t, const Assignment& a) {
    const DnnGraph& g = wg.graph;
    double total = wg.time(v, t);
    for (VertexId h : g.predecessors(v)) {
        const Tier from = require(a, h);
        if (from == t) continue;
        bool already_shipped = false;
        for (VertexId u : g.successors(h)) {
            if (u != v && u < a.size() && a[u] == t) {
                already_shipped = true;
                break;
            }
        }
        if (!already_shipped) total += wg.delay(g.link_index(h, v), from, t);
    }
    return total;
}

std::optional<VertexId> largest_direct_successor(const WeightedGraph& wg, VertexId v) {
    std::optional<VertexId> best;
    for (VertexId s : wg.graph.successors(v)) {
        if (!best || wg.time(s, Tier::edge) > wg.time(*best, Tier::edge)) best = s;
    }
    return best;
}

Tier lookahead_select(const WeightedGraph& wg, VertexId v, VertexId succ, TierSet gamma, const Assignment& a) {
    static constexpr std::array<std::pair<Tier, Tier>, 6> kPairs{{
        {Tier::device, Tier::device},
        {Tier::device, Tier::edge},
        {Tier::edge, Tier::edge},
        {Tier::edge, Tier::cloud},
        {Tier::cloud, Tier::cloud},
        {Tier::device, Tier::cloud},
    }};
    const std::size_t link = wg.graph.link_index(v, succ);
    std::optional<Tier> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& [vt, st] : kPairs) {
        if (!gamma.contains(vt)) continue;
        const double cost = candidate_latency(wg, v, vt, a) + wg.time(succ, st) + wg.delay(link, vt, st);
        if (!best || cost < best_cost || (cost == best_cost && rank(vt) < rank(*best))) {
            best = vt;
            best_cost = cost;
        }
    }
    if (!best) throw Error(ErrorCode::invalid_scenario, vname(v) + ": empty potential tier set");
    return *best;
}

Tier select_optimal_tier(const WeightedGraph& wg, VertexId v, TierSet gamma, const Assignment& a,
                         SelectionRule* rule) {
    auto set_rule = [rule](SelectionRule r) {
        if (rule) *rule = r;
    };
    if (v == 0) {
        set_rule(SelectionRule::input);
        return Tier::device;
    }
    if (gamma.empty()) throw Error(ErrorCode::invalid_scenario, vname(v) + ": empty potential tier set");
    if (gamma == TierSet{Tier::cloud}) {
        set_rule(SelectionRule::forced_cloud);
        return Tier::cloud;
    }
    const auto succ = largest_direct_successor(wg, v);
    if (wg.input_bytes(v) > wg.output_bytes(v) || !succ) {
        set_rule(SelectionRule::local_argmin);
        std::optional<Tier> best;
        double best_cost = std::numeric_limits<double>::infinity();
        for (Tier t : kTiers) {
            if (!gamma.contains(t)) continue;
            const double cost = candidate_latency(wg, v, t, a);
            if (!best || cost < best_cost) {
                best = t;
                best_cost = cost;
            }
        }
        return *best;
    }
    set_rule(SelectionRule::lookahead);
    return lookahead_select(wg, v, *succ, gamma, a);
}

std::size_t sis_update(const WeightedGraph& wg, std::span<const VertexId> layer, Assignment& a) {
    std::vector<std::vector<VertexId>> sis(layer.size());
    for (std::size_t i = 0; i < layer.size(); ++i) sis[i] = sis_vertices(wg.graph, layer[i], layer);

    std::size_t moves = 0;
    bool moved = true;
    while (moved) {
        moved = false;
        for (std::size_t i = 0; i < layer.size(); ++i) {
            const Tier target = require(a, layer[i]);
            for (VertexId u : sis[i]) {
                if (rank(require(a, u)) < rank(target)) {
                    a[u] = target;
                    ++moves;
                    moved = true;
                }
            }
        }
    }
    return moves;
}

PartitionPlan sis_update(const WeightedGraph& wg, std::span<const VertexId> layer, const PartitionPlan& plan) {
    Assignment a = to_assignment(plan.tiers);
    sis_update(wg, layer, a);
    PartitionPlan out{to_tiers(a), 0.0, plan.provenance};
    out.theta = total_latency(wg, out.tiers);
    return out;
}

PartitionPlan hpa(const WeightedGraph& wg, const HpaOptions& options, HpaTrace* trace) {
    const DnnGraph& g = wg.graph;
    const GraphLayering layering = longest_distances(g);
    Assignment a(g.size());
    a[0] = Tier::device;
    if (trace) trace->decisions.push_back({0, TierSet{Tier::device}, SelectionRule::input, Tier::device, {}});

    for (std::size_t q = 1; q < layering.layers.size(); ++q) {
        const auto& layer = layering.layers[q];
        for (VertexId v : layer) {
            const TierSet gamma = gamma_for(g, v, a, options.strict_potential);
            SelectionRule rule{};
            const Tier chosen = select_optimal_tier(wg, v, gamma, a, &rule);
            if (trace) {
                trace->decisions.push_back({v, gamma, rule, chosen, trace->keep_snapshots ? a : Assignment{}});
            }
            a[v] = chosen;
        }
        const std::size_t moves = sis_update(wg, layer, a);
        if (trace) trace->sis_moves += moves;
    }

    PartitionPlan plan{to_tiers(a), 0.0, Provenance::full};
    plan.theta = total_latency(wg, plan.tiers);
    return plan;
}

OptimalPlan brute_force_optimal(const WeightedGraph& wg, const HpaOptions& options) {
    const DnnGraph& g = wg.graph;
    const std::size_t n = g.size();
    if (n > kBruteForceMaxVertices) {
        throw Error(ErrorCode::size_guard, "exhaustive search is limited to " + std::to_string(kBruteForceMaxVertices) +
                                               " vertices, graph has " + std::to_string(n));
    }

    // A vertex's validity can be checked once it and all of its predecessors
    // are assigned; with index-order enumeration that is at max(v, preds).
    std::vector<std::vector<VertexId>> check_at(n);
    for (VertexId v = 1; v < n; ++v) {
        VertexId last = v;
        for (VertexId p : g.predecessors(v)) last = std::max(last, p);
        check_at[last].push_back(v);
    }

    std::vector<Tier> tiers(n, Tier::device);
    OptimalPlan best;
    best.plan.theta = std::numeric_limits<double>::infinity();
    bool found = false;

    // Position 1 is the most significant digit, so the first minimizer met is
    // the lexicographically smallest one.
    auto recurse = [&](auto&& self, VertexId v) -> void {
        if (v == n) {
            const double theta = total_latency(wg, tiers);
            ++best.evaluated;
            if (!found || theta < best.plan.theta) {
                best.plan.tiers = tiers;
                best.plan.theta = theta;
                found = true;
            }
            return;
        }
        for (Tier t : kTiers) {
            tiers[v] = t;
            bool ok = true;
            for (VertexId w : check_at[v]) {
                if (!valid_at(g, w, tiers, options.strict_potential)) {
                    ok = false;
                    break;
                }
            }
            if (ok) self(self, v + 1);
        }
        tiers[v] = Tier::device;
    };
    recurse(recurse, 1);
    best.plan.provenance = Provenance::full;
    return best;
}

std::vector<VertexId> changed_vertices(const WeightedGraph& before, const WeightedGraph& after) {
    std::vector<VertexId> out;
    const DnnGraph& g = after.graph;
    for (VertexId v = 0; v < g.size(); ++v) {
        bool changed = before.vertex_times.at(v) != after.vertex_times.at(v);
        for (std::size_t li : g.out_links(v)) changed = changed || before.link_delays.at(li) != after.link_delays.at(li);
        if (changed) out.push_back(v);
    }
    return out;
}

namespace {

bool ratio_within(double before, double after, const Thresholds::Range& range) {
    if (before == after) return true;
    if (before == 0.0) return false;
    return range.contains(after / before);
}

bool changes_within(const WeightedGraph& before, const WeightedGraph& after, std::span<const VertexId> changed,
                    const Thresholds& th) {
    const BandwidthConfig& b0 = before.bandwidth;
    const BandwidthConfig& b1 = after.bandwidth;
    if (!ratio_within(b0.sigma_de, b1.sigma_de, th.bandwidth) || !ratio_within(b0.sigma_ec, b1.sigma_ec, th.bandwidth) ||
        !ratio_within(b0.sigma_dc, b1.sigma_dc, th.bandwidth)) {
        return false;
    }
    for (VertexId v : changed) {
        for (Tier t : kTiers) {
            if (!ratio_within(before.time(v, t), after.time(v, t), th.vertex_time)) return false;
        }
        // Link delays scale with 1 / bandwidth, so compare the inverse ratio.
        for (std::size_t li : after.graph.out_links(v)) {
            const LinkDelays& d0 = before.link_delays.at(li);
            const LinkDelays& d1 = after.link_delays.at(li);
            if (!ratio_within(d1.de, d0.de, th.bandwidth) || !ratio_within(d1.ec, d0.ec, th.bandwidth) ||
                !ratio_within(d1.dc, d0.dc, th.bandwidth)) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace

IncrementalResult incremental_update(const PartitionPlan& plan, const WeightedGraph& planned_with,
                                     const WeightedGraph& current, std::span<const VertexId> changed,
                                     const Thresholds& thresholds, const IncrementalOptions& options) {
    const DnnGraph& g = current.graph;
    thresholds.validate();
    if (plan.tiers.size() != g.size() || planned_with.graph.size() != g.size()) {
        throw Error(ErrorCode::incomplete_assignment, "plan and weightings must cover the same graph");
    }
    for (VertexId v : changed) {
        if (v >= g.size()) throw Error(ErrorCode::unknown_vertex, "changed vertex " + vname(v) + " is not in the graph");
    }

    IncrementalResult result;
    result.plan = plan;
    if (changes_within(planned_with, current, changed, thresholds)) return result;
    result.triggered = true;

    const GraphLayering layering = longest_distances(g);
    const auto& delta = layering.delta;
    std::vector<char> in_scope(g.size(), 0);
    auto add_with_sis = [&](VertexId v) {
        in_scope[v] = 1;
        for (VertexId u : sis_vertices(g, v, layering.layers[delta[v]])) in_scope[u] = 1;
    };
    for (VertexId v : changed) {
        add_with_sis(v);
        for (VertexId s : g.successors(v)) add_with_sis(s);
    }
    in_scope[0] = 0;
    for (VertexId v = 0; v < g.size(); ++v) {
        if (in_scope[v]) result.recomputed.push_back(v);
    }
    std::stable_sort(result.recomputed.begin(), result.recomputed.end(),
                     [&](VertexId x, VertexId y) { return delta[x] < delta[y]; });

    const bool strict = options.hpa.strict_potential;
    Assignment a = to_assignment(plan.tiers);
    for (VertexId v : result.recomputed) {
        const TierSet gamma = gamma_for(g, v, a, strict);
        a[v].reset();
        a[v] = select_optimal_tier(current, v, gamma, a);
    }

    // Moving a vertex can strand a successor outside its potential tiers.
    std::vector<Tier> tiers = to_tiers(a);
    for (VertexId v : g.topological_order()) {
        if (valid_at(g, v, tiers, strict)) continue;
        const TierSet gamma = gamma_for(g, v, a, strict);
        a[v].reset();
        a[v] = select_optimal_tier(current, v, gamma, a);
        tiers[v] = *a[v];
        result.repaired.push_back(v);
    }

    result.plan = PartitionPlan{std::move(tiers), 0.0, Provenance::incremental};
    result.plan.theta = total_latency(current, result.plan.tiers);

    if (options.measure_gap || options.escalate_above_gap_pct) {
        const PartitionPlan full = hpa(current, options.hpa);
        result.gap_vs_full = full.theta > 0.0 ? result.plan.theta / full.theta - 1.0 : 0.0;
        if (options.escalate_above_gap_pct && *result.gap_vs_full * 100.0 > *options.escalate_above_gap_pct) {
            result.plan = full;
            result.escalated = true;
        }
    }
    return result;
}

}  // namespace tiersplit
