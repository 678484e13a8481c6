// SPDX-License-Identifier: Apache-2.0

#include "tiersplit/simulator.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "tiersplit/error.hpp"

namespace tiersplit {

namespace {

std::string vname(VertexId v) { return "v" + std::to_string(v); }

bool spatial(const LayerConfig& cfg) { return cfg.is_sliding_window() || cfg.is_volume_preserving(); }

bool same_layer(const LayerConfig& a, const LayerConfig& b) {
    return a.kind == b.kind && a.filter == b.filter && a.stride == b.stride && a.padding == b.padding &&
           a.input_dims == b.input_dims && a.output_dims == b.output_dims;
}

// Crop-area fractions of the slowest cell, one per chain layer.
std::vector<double> chain_fractions(const Scenario& s, const ParallelStats& stats) {
    const TilePlan& plan = s.edge_parallel->tiles;
    const FusedTileStack& cell = plan.cells.at(static_cast<std::size_t>(stats.slowest_cell));
    std::vector<double> out;
    for (std::size_t i = 0; i < plan.depth(); ++i) {
        out.push_back(static_cast<double>(cell.tiles[i].area()) / static_cast<double>(plan.level_dims(i).area()));
    }
    return out;
}

}  // namespace

void validate_scenario(const Scenario& s) {
    const DnnGraph& g = s.wg.graph;
    if (s.plan.tiers.size() != g.size()) {
        throw Error(ErrorCode::invalid_scenario, "plan covers " + std::to_string(s.plan.tiers.size()) + " of " +
                                                     std::to_string(g.size()) + " vertices");
    }
    if (!is_valid_assignment(g, s.plan.tiers)) {
        throw Error(ErrorCode::invalid_scenario, "plan violates the potential-tier rule");
    }
    if (s.input_bytes != s.wg.output_bytes(0)) {
        throw Error(ErrorCode::invalid_scenario, "input size " + std::to_string(s.input_bytes) +
                                                     " differs from the input vertex size " +
                                                     std::to_string(s.wg.output_bytes(0)));
    }
    if (!s.edge_parallel) return;
    const EdgeParallel& ep = *s.edge_parallel;
    if (ep.chain.empty() || ep.chain.size() != ep.tiles.depth()) {
        throw Error(ErrorCode::invalid_scenario, "edge chain length differs from the tile plan depth");
    }
    if (static_cast<std::int64_t>(ep.tiles.cells.size()) != ep.tiles.grid.cells()) {
        throw Error(ErrorCode::invalid_scenario, "tile plan cell count differs from its grid");
    }
    for (std::size_t i = 0; i < ep.chain.size(); ++i) {
        const VertexId v = ep.chain[i];
        if (v >= g.size()) throw Error(ErrorCode::unknown_vertex, vname(v) + " is not in the graph");
        if (s.plan.tiers[v] != Tier::edge) throw Error(ErrorCode::invalid_scenario, vname(v) + " is not on the edge");
        if (!same_layer(g.config(v), ep.tiles.layers[i])) {
            throw Error(ErrorCode::invalid_scenario, vname(v) + " does not match tile plan layer " + std::to_string(i));
        }
        if (i > 0) {
            const auto preds = g.predecessors(v);
            if (preds.size() != 1 || preds.front() != ep.chain[i - 1]) {
                throw Error(ErrorCode::invalid_scenario, vname(v) + " is not fed only by " + vname(ep.chain[i - 1]));
            }
        }
    }
}

Baselines baselines(const WeightedGraph& wg, std::int64_t input_bytes) {
    Baselines b;
    double d = 0.0;
    double e = 0.0;
    double c = 0.0;
    for (VertexId v = 0; v < wg.graph.size(); ++v) {
        d += wg.time(v, Tier::device);
        e += wg.time(v, Tier::edge);
        c += wg.time(v, Tier::cloud);
    }
    b.device = d;
    b.edge = link_delay(input_bytes, wg.bandwidth.sigma_de) + e;
    b.cloud = link_delay(input_bytes, wg.bandwidth.sigma_dc) + c;
    return b;
}

std::int64_t comm_overhead(const Scenario& s) {
    validate_scenario(s);
    const Assignment a(s.plan.tiers.begin(), s.plan.tiers.end());
    std::int64_t bytes = 0;
    for (const Transfer& t : dedup_transfers(s.wg, a)) {
        if (t.to == Tier::cloud) bytes += s.wg.output_bytes(t.source);
    }
    return bytes;
}

ParallelStats edge_parallel_stats(const Scenario& s) {
    validate_scenario(s);
    if (!s.edge_parallel) throw Error(ErrorCode::invalid_scenario, "scenario has no edge-parallel section");
    const EdgeParallel& ep = *s.edge_parallel;
    const TilePlan& plan = ep.tiles;

    ParallelStats stats;
    for (VertexId v : ep.chain) stats.sequential_seconds += s.wg.time(v, Tier::edge);
    stats.parallel_seconds = -1.0;
    for (std::size_t c = 0; c < plan.cells.size(); ++c) {
        double cost = 0.0;
        for (std::size_t i = 0; i < plan.depth(); ++i) {
            const double frac =
                static_cast<double>(plan.cells[c].tiles[i].area()) / static_cast<double>(plan.level_dims(i).area());
            cost += s.wg.time(ep.chain[i], Tier::edge) * frac;
        }
        if (cost > stats.parallel_seconds) {
            stats.parallel_seconds = cost;
            stats.slowest_cell = static_cast<std::int64_t>(c);
        }
    }
    stats.speedup = stats.parallel_seconds > 0.0 ? stats.sequential_seconds / stats.parallel_seconds : 1.0;
    return stats;
}

double edge_parallel_speedup(const Scenario& s) { return edge_parallel_stats(s).speedup; }

SimReport simulate(const Scenario& s) {
    validate_scenario(s);
    const WeightedGraph& wg = s.wg;
    const DnnGraph& g = wg.graph;

    SimReport r;
    std::vector<double> scale(g.size(), 1.0);
    if (s.edge_parallel) {
        r.parallel = edge_parallel_stats(s);
        const auto fractions = chain_fractions(s, *r.parallel);
        for (std::size_t i = 0; i < fractions.size(); ++i) scale[s.edge_parallel->chain[i]] = fractions[i];
    }

    // Same summation order as total_latency so the two agree bit for bit.
    double processing = 0.0;
    for (VertexId v = 0; v < g.size(); ++v) {
        const Tier t = s.plan.tiers[v];
        const double sec = wg.time(v, t) * scale[v];
        processing += sec;
        r.processing[rank(t)] += sec;
    }
    double transfer = 0.0;
    const Assignment a(s.plan.tiers.begin(), s.plan.tiers.end());
    for (const Transfer& t : dedup_transfers(wg, a)) {
        transfer += t.seconds;
        const std::int64_t bytes = wg.output_bytes(t.source);
        const int lo = std::min(rank(t.from), rank(t.to));
        const int hi = std::max(rank(t.from), rank(t.to));
        BoundaryTraffic& b = lo == 0 ? (hi == 1 ? r.de : r.dc) : r.ec;
        b.seconds += t.seconds;
        b.bytes += bytes;
        if (t.to == Tier::cloud) r.backbone_bytes += bytes;
    }
    r.theta = processing + transfer;

    r.baselines = baselines(wg, s.input_bytes);
    auto ratio = [&](double base) {
        if (r.theta > 0.0) return base / r.theta;
        return base > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    };
    r.speedups = {ratio(r.baselines.device), ratio(r.baselines.edge), ratio(r.baselines.cloud)};
    return r;
}

std::vector<VertexId> find_edge_chain(const DnnGraph& g, const PartitionPlan& plan) {
    if (plan.tiers.size() != g.size()) throw Error(ErrorCode::invalid_scenario, "plan does not cover the graph");
    auto member = [&](VertexId v) { return plan.tiers[v] == Tier::edge && spatial(g.config(v)); };
    auto continues = [&](VertexId from, VertexId to) {
        return g.successors(from).size() == 1 && g.predecessors(to).size() == 1 && member(to);
    };

    std::vector<VertexId> best;
    for (VertexId v : g.topological_order()) {
        if (!member(v)) continue;
        const auto preds = g.predecessors(v);
        if (preds.size() == 1 && member(preds.front()) && continues(preds.front(), v)) continue;
        std::vector<VertexId> chain{v};
        while (g.successors(chain.back()).size() == 1 && continues(chain.back(), g.successors(chain.back()).front())) {
            chain.push_back(g.successors(chain.back()).front());
        }
        bool windowed = false;
        for (VertexId u : chain) windowed = windowed || g.config(u).is_sliding_window();
        if (windowed && chain.size() > best.size()) best = std::move(chain);
    }
    return best;
}

EdgeParallel make_edge_parallel(const DnnGraph& g, std::vector<VertexId> chain, GridSize grid, ShapeMode mode) {
    std::vector<LayerConfig> layers;
    for (VertexId v : chain) layers.push_back(g.config(v));
    return {plan_tiles(layers, grid, mode), std::move(chain)};
}

}  // namespace tiersplit
