// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "tiersplit/graph.hpp"
#include "tiersplit/latency_model.hpp"
#include "tiersplit/planner.hpp"
#include "tiersplit/tier.hpp"
#include "tiersplit/tiler.hpp"

namespace tiersplit {

/// An edge-resident chain of spatial layers split across a_grid x b_grid edge nodes.
/// chain[i] is the vertex executing plan.layers[i].
struct EdgeParallel {
    TilePlan tiles;
    std::vector<VertexId> chain;
};

struct Scenario {
    WeightedGraph wg;
    PartitionPlan plan;
    std::optional<EdgeParallel> edge_parallel;
    std::int64_t input_bytes = 0;  // raw input held by the device
};

/// Transfers between one pair of tiers, in either direction.
struct BoundaryTraffic {
    double seconds = 0.0;
    std::int64_t bytes = 0;
    bool operator==(const BoundaryTraffic&) const = default;
};

struct Baselines {
    double device = 0.0;
    double edge = 0.0;
    double cloud = 0.0;
    bool operator==(const Baselines&) const = default;
};

struct ParallelStats {
    double sequential_seconds = 0.0;  // edge chain on one node
    double parallel_seconds = 0.0;    // slowest cell
    double speedup = 1.0;
    std::int64_t slowest_cell = 0;    // index into tiles.cells
    bool operator==(const ParallelStats&) const = default;
};

struct SimReport {
    double theta = 0.0;
    std::array<double, 3> processing{};  // seconds per tier, indexed by rank
    BoundaryTraffic de;
    BoundaryTraffic ec;
    BoundaryTraffic dc;
    std::int64_t backbone_bytes = 0;  // bytes entering the cloud tier
    Baselines baselines;
    Baselines speedups;  // baseline / theta
    std::optional<ParallelStats> parallel;
    bool operator==(const SimReport&) const = default;
};

/// Single-tier references: device-only, edge-only and cloud-only, where the
/// latter two first ship the raw input from the device.
Baselines baselines(const WeightedGraph& wg, std::int64_t input_bytes);

/// Bytes shipped into the cloud tier under deduplicated accounting.
std::int64_t comm_overhead(const Scenario& s);

/// Edge chain time on one node over the slowest cell's time. A cell's cost is
/// the sum of its layers' edge times scaled by the crop area over the layer's input area.
ParallelStats edge_parallel_stats(const Scenario& s);
double edge_parallel_speedup(const Scenario& s);

/// Evaluates the plan for one image. Without edge parallelism theta equals
/// total_latency(wg, plan.tiers).
SimReport simulate(const Scenario& s);

/// Longest run of edge-resident spatial layers linked one-to-one (each layer
/// the only consumer of the previous and the previous its only producer).
/// Empty when the plan puts no convolution or pooling layer on the edge.
std::vector<VertexId> find_edge_chain(const DnnGraph& g, const PartitionPlan& plan);

/// Tiles the chain's layers with the given grid.
EdgeParallel make_edge_parallel(const DnnGraph& g, std::vector<VertexId> chain, GridSize grid,
                                ShapeMode mode = ShapeMode::exact);

/// Checks that the chain matches the tile plan layer by layer and sits on the edge.
void validate_scenario(const Scenario& s);

}  // namespace tiersplit
