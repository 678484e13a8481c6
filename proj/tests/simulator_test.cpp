// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "builders.hpp"
#include "oracles.hpp"
#include "tiersplit/documents.hpp"
#include "tiersplit/randomized.hpp"
#include "tiersplit/simulator.hpp"

using namespace tiersplit;

namespace {

nlohmann::json doc(const std::string& name) { return read_json_file(oracle::data_path(name)); }

WeightedGraph alexnet(const std::string& bandwidth) {
    const DnnGraph g = load_graph(oracle::data_path("alexnet.graph.json"), ShapeMode::floor);
    return weight_graph(g, profile_from_json(doc("alexnet.profile.json")), bandwidth_from_json(doc(bandwidth)));
}

PartitionPlan uniform(const DnnGraph& g, Tier t) {
    PartitionPlan p;
    p.tiers.assign(g.size(), t);
    p.tiers[0] = Tier::device;
    return p;
}

using fixture::stack_scenario;

LayerConfig conv(Dims3 in, std::int64_t f, std::int64_t s, std::int64_t p, std::int64_t count = 1) {
    LayerConfig c;
    c.kind = LayerKind::convolution;
    c.input_dims = in;
    c.filter = FilterShape{f, f, in.depth, count};
    c.stride = Extent2{s, s};
    c.padding = Extent2{p, p};
    return infer_layer_shape(c);
}

}  // namespace

TEST(Simulate, AlexNetSplitMatchesStageSum) {
    const WeightedGraph wg = alexnet("free.bandwidth.json");
    const Scenario s{wg, plan_from_json(doc("alexnet.plan.json")), std::nullopt, 150528};
    const SimReport r = simulate(s);
    EXPECT_EQ(r.theta, 0.0072);
    EXPECT_EQ(r.processing, (std::array<double, 3>{0.0022, 0.0036, 0.0014}));
    EXPECT_EQ(r.theta, total_latency(wg, s.plan.tiers));
}

TEST(Simulate, CloudOnlyOverWifi) {
    const WeightedGraph wg = alexnet("wifi.bandwidth.json");
    const Scenario s{wg, uniform(wg.graph, Tier::cloud), std::nullopt, 150528};
    const SimReport r = simulate(s);
    EXPECT_NEAR(r.dc.seconds, 0.06422528, 1e-12);
    EXPECT_EQ(r.dc.bytes, 150528);
    EXPECT_EQ(r.de, BoundaryTraffic{});
    EXPECT_EQ(r.backbone_bytes, 150528);
    EXPECT_EQ(r.theta, r.baselines.cloud);
}

TEST(Simulate, CloudBaselineOver4g) {
    const WeightedGraph wg = alexnet("4g.bandwidth.json");
    double compute = 0.0;
    for (VertexId v = 0; v < wg.graph.size(); ++v) compute += wg.time(v, Tier::cloud);
    const Baselines b = baselines(wg, 150528);
    EXPECT_NEAR(b.cloud - compute, 0.19676863, 1e-8);
}

TEST(Simulate, SingleCellParallelismChangesNothing) {
    const DnnGraph g = load_graph(oracle::data_path("vgg_mini.graph.json"));
    const WeightedGraph wg = weight_graph(g, profile_from_json(doc("vgg_mini.profile.json")),
                                          bandwidth_from_json(doc("wifi.bandwidth.json")));
    Scenario s{wg, plan_from_json(doc("vgg_mini.plan.json")), std::nullopt, g.config(0).output_bytes};
    const SimReport plain = simulate(s);
    const std::vector<VertexId> chain = find_edge_chain(g, s.plan);
    EXPECT_EQ(chain, (std::vector<VertexId>{4, 5, 6, 7, 8, 9}));
    s.edge_parallel = make_edge_parallel(g, chain, {1, 1});
    const SimReport split = simulate(s);
    EXPECT_EQ(split.theta, plain.theta);
    ASSERT_TRUE(split.parallel.has_value());
    EXPECT_EQ(split.parallel->speedup, 1.0);
}

TEST(CommOverhead, Examples) {
    const WeightedGraph wg = alexnet("wifi.bandwidth.json");
    EXPECT_EQ(comm_overhead({wg, uniform(wg.graph, Tier::cloud), std::nullopt, 150528}), 150528);
    EXPECT_EQ(comm_overhead({wg, uniform(wg.graph, Tier::edge), std::nullopt, 150528}), 0);
    EXPECT_EQ(comm_overhead({wg, uniform(wg.graph, Tier::device), std::nullopt, 150528}), 0);

    const DnnGraph g = load_graph(oracle::data_path("vgg_mini.graph.json"));
    const WeightedGraph v = weight_graph(g, profile_from_json(doc("vgg_mini.profile.json")),
                                         bandwidth_from_json(doc("wifi.bandwidth.json")));
    const std::int64_t input = g.config(0).output_bytes;
    const double split = static_cast<double>(comm_overhead({v, plan_from_json(doc("vgg_mini.plan.json")), std::nullopt, input}));
    const double cloud = static_cast<double>(comm_overhead({v, uniform(g, Tier::cloud), std::nullopt, input}));
    EXPECT_EQ(split / cloud, 0.25);
}

TEST(EdgeParallel, Speedups) {
    const LayerConfig tiny = conv({2, 2, 3}, 3, 1, 1, 2);
    EXPECT_EQ(edge_parallel_speedup(stack_scenario({tiny}, {1, 1}, {{1, 1, 1}})), 1.0);
    EXPECT_EQ(edge_parallel_speedup(stack_scenario({tiny}, {2, 2}, {{1, 1, 1}})), 1.0);
    const LayerConfig wide = conv({6, 6, 1}, 3, 1, 1);
    const ParallelStats st = edge_parallel_stats(stack_scenario({wide}, {2, 1}, {{1, 1, 1}}));
    EXPECT_EQ(st.speedup, 1.5);
    EXPECT_EQ(st.slowest_cell, 0);
}

TEST(EdgeParallel, ScenarioValidation) {
    const LayerConfig wide = conv({6, 6, 1}, 3, 1, 1);
    Scenario s = stack_scenario({wide}, {2, 1}, {{1, 1, 1}});
    Scenario device = s;
    device.plan.tiers[1] = Tier::device;
    EXPECT_THROW(simulate(device), Error);
    Scenario longer = s;
    longer.edge_parallel->chain.push_back(1);
    EXPECT_THROW(simulate(longer), Error);
    Scenario missing = s;
    missing.edge_parallel->chain = {7};
    EXPECT_THROW(simulate(missing), Error);
    Scenario short_plan = s;
    short_plan.plan.tiers.pop_back();
    EXPECT_THROW(simulate(short_plan), Error);
    Scenario bytes = s;
    bytes.input_bytes += 1;
    EXPECT_THROW(simulate(bytes), Error);
    Scenario invalid = s;
    invalid.edge_parallel.reset();
    invalid.plan.tiers = {Tier::cloud, Tier::edge};
    EXPECT_THROW(simulate(invalid), Error);
}

TEST(Simulate, AgreesWithTotalLatency) {
    Rng rng(kDefaultSeed);
    for (int trial = 0; trial < 300; ++trial) {
        const WeightedGraph wg = random_weights(rng, random_dag(rng));
        const PartitionPlan plan = hpa(wg);
        const SimReport r = simulate({wg, plan, std::nullopt, wg.output_bytes(0)});
        ASSERT_EQ(r.theta, total_latency(wg, plan.tiers));
        ASSERT_EQ(r.theta, oracle::theta_from_scratch(wg, plan.tiers));
        ASSERT_NEAR(r.processing[0] + r.processing[1] + r.processing[2] + r.de.seconds + r.ec.seconds + r.dc.seconds,
                    r.theta, 1e-12);
        ASSERT_NEAR(r.speedups.device * r.theta, r.baselines.device, 1e-12);
    }
}

TEST(EdgeParallel, SpeedupBounds) {
    Rng rng(kDefaultSeed + 5);
    std::uniform_real_distribution<double> ms(0.1, 5.0);
    for (int trial = 0; trial < 300; ++trial) {
        const auto stack = random_stack(rng);
        const GridSize grid = random_grid(rng, *stack.back().output_dims);
        std::vector<TierTimes> times;
        for (std::size_t i = 0; i < stack.size(); ++i) times.push_back({{ms(rng), ms(rng), ms(rng)}});
        const Scenario s = stack_scenario(stack, grid, times);
        const double speedup = edge_parallel_speedup(s);
        ASSERT_GE(speedup, 1.0 - 1e-12) << "trial " << trial;
        ASSERT_LE(speedup, static_cast<double>(grid.cells()) + 1e-12) << "trial " << trial;
        const OverlapReport overlap = overlap_stats(s.edge_parallel->tiles);
        bool redundant = false;
        for (std::size_t i = 0; i + 1 < overlap.levels.size(); ++i) redundant = redundant || overlap.levels[i].factor > 1.0;
        if (redundant) ASSERT_LT(speedup, static_cast<double>(grid.cells())) << "trial " << trial;
    }
}

TEST(CommOverhead, CountsEachCloudBoundSourceOnce) {
    Rng rng(kDefaultSeed + 6);
    for (int trial = 0; trial < 300; ++trial) {
        const WeightedGraph wg = random_weights(rng, random_dag(rng));
        const PartitionPlan plan = hpa(wg);
        std::int64_t expected = 0;
        for (VertexId u = 0; u < wg.graph.size(); ++u) {
            if (plan.tiers[u] == Tier::cloud) continue;
            const auto succ = wg.graph.successors(u);
            if (std::any_of(succ.begin(), succ.end(), [&](VertexId w) { return plan.tiers[w] == Tier::cloud; })) {
                expected += wg.output_bytes(u);
            }
        }
        ASSERT_EQ(comm_overhead({wg, plan, std::nullopt, wg.output_bytes(0)}), expected);
        ASSERT_EQ(comm_overhead({wg, uniform(wg.graph, Tier::edge), std::nullopt, wg.output_bytes(0)}), 0);
    }
}
