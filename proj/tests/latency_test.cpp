// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "builders.hpp"
#include "oracles.hpp"
#include "tiersplit/documents.hpp"
#include "tiersplit/latency_model.hpp"
#include "tiersplit/randomized.hpp"

using namespace tiersplit;

namespace {

TierCapability cap(Tier t) { return {t, 1.0, 0.0, 0}; }

LayerConfig random_conv(Rng& rng) {
    std::uniform_int_distribution<std::int64_t> extent(4, 64), depth(1, 32), count(1, 64), f(1, 3);
    LayerConfig c;
    c.kind = LayerKind::convolution;
    const std::int64_t w = extent(rng);
    const std::int64_t k = 2 * f(rng) - 1;  // odd window with same padding
    c.input_dims = Dims3{w, extent(rng), depth(rng)};
    c.filter = FilterShape{k, k, 0, count(rng)};
    c.stride = Extent2{1, 1};
    c.padding = Extent2{k / 2, k / 2};
    return infer_layer_shape(c);
}

}  // namespace

TEST(LinkDelay, ClosedForm) {
    EXPECT_DOUBLE_EQ(link_delay(150528, 18.75e6), 150528.0 * 8.0 / 18.75e6);
    EXPECT_NEAR(link_delay(150528, 18.75e6), 0.06422528, 1e-15);
    EXPECT_EQ(link_delay(1000000, 8e6), 1.0);
    EXPECT_NEAR(link_delay(1000000, 31.53e6), 0.2537266, 1e-7);
    EXPECT_EQ(link_delay(123, fixture::kInf), 0.0);
    EXPECT_THROW(link_delay(10, 0.0), Error);
}

TEST(LinkDelay, SameTierIsFree) {
    const LinkDelays d = link_delays_for(1 << 20, BandwidthConfig{1e6, 2e6, 3e6});
    for (Tier t : kTiers) EXPECT_EQ(d.between(t, t), 0.0);
    EXPECT_EQ(d.between(Tier::device, Tier::cloud), d.between(Tier::cloud, Tier::device));
}

TEST(LinkDelay, MonotoneInBytes) {
    for (double sigma : {1e3, 6.12e6, 84.95e6}) {
        double prev = 0.0;
        for (std::int64_t b = 0; b < 5000000; b += 99991) {
            const double d = link_delay(b, sigma);
            EXPECT_GE(d, prev);
            prev = d;
        }
    }
}

TEST(WeightGraph, ZeroBandwidthRejected) {
    const DnnGraph g = fixture::chain(2);
    EXPECT_THROW(fixture::weigh(g, {{1, 1, 1}}, BandwidthConfig{0, 0, 0}), Error);
    try {
        fixture::weigh(g, {{1, 1, 1}}, BandwidthConfig{1e6, 0, 1e6});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_bandwidth);
    }
}

TEST(WeightGraph, MissingProfileEntry) {
    const DnnGraph g = fixture::chain(3);
    ProfileTable p;
    p.times.resize(2);
    p.times[1] = TierTimes{};
    try {
        weight_graph(g, p, fixture::free_bandwidth());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::missing_profile);
    }
}

TEST(WeightGraph, AlexNetStageSums) {
    const DnnGraph g = load_graph(oracle::data_path("alexnet.graph.json"), ShapeMode::floor);
    const WeightedGraph wg = weight_graph(g, profile_from_json(read_json_file(oracle::data_path("alexnet.profile.json"))),
                                          bandwidth_from_json(read_json_file(oracle::data_path("free.bandwidth.json"))));
    const PartitionPlan plan = plan_from_json(read_json_file(oracle::data_path("alexnet.plan.json")));
    std::array<double, 3> stage{};
    for (VertexId v = 0; v < g.size(); ++v) stage[rank(plan.tiers[v])] += wg.time(v, plan.tiers[v]);
    EXPECT_EQ(stage[0], 0.0022);
    EXPECT_EQ(stage[1], 0.0036);
    EXPECT_EQ(stage[2], 0.0014);
    for (const LinkDelays& d : wg.link_delays) EXPECT_EQ(d, LinkDelays{});
}

TEST(WeightGraph, MegabyteBoundaryOverWifi) {
    const DnnGraph g = fixture::graph({250000, 250000, 16}, {{0, 1}, {1, 2}});
    const BandwidthConfig bw = bandwidth_from_json(read_json_file(oracle::data_path("wifi.bandwidth.json")));
    const WeightedGraph wg = fixture::weigh(g, {{1, 1, 1}, {1, 1, 1}}, bw);
    EXPECT_NEAR(wg.delay(g.link_index(1, 2), Tier::edge, Tier::cloud), 8e6 / 31.53e6, 1e-12);
    EXPECT_NEAR(wg.delay(g.link_index(1, 2), Tier::edge, Tier::cloud), 0.2537, 1e-4);
}

TEST(WeightGraph, StoredLinkWeightsAreConsistent) {
    Rng rng(kDefaultSeed);
    for (int trial = 0; trial < 200; ++trial) {
        const WeightedGraph wg = random_weights(rng, random_dag(rng));
        ASSERT_TRUE(link_weights_consistent(wg));
        for (std::size_t i = 0; i < wg.graph.links().size(); ++i) {
            const std::int64_t bytes = wg.output_bytes(wg.graph.links()[i].from);
            ASSERT_EQ(wg.link_delays[i].ec, static_cast<double>(bytes) * 8.0 / wg.bandwidth.sigma_ec);
        }
    }
}

TEST(Regression, NoiselessRecovery) {
    Rng rng(kDefaultSeed);
    const Coefficients truth{0.001, 2e-12, 0, 0, 0};
    auto generate = [&](const LayerConfig& l) {
        const FeatureVector f = layer_features(l);
        double t = 0.0;
        for (std::size_t i = 0; i < kFeatureCount; ++i) t += truth[i] * f[i];
        return t;
    };
    std::vector<TrainingSample> samples;
    for (int i = 0; i < 40; ++i) {
        const LayerConfig l = random_conv(rng);
        samples.push_back({l, cap(Tier::edge), generate(l)});
    }
    const RegressionModel m = fit(samples);
    for (const std::string& w : m.warnings) EXPECT_EQ(w.find("rank-deficient"), std::string::npos) << w;
    for (const TrainingSample& s : samples) EXPECT_NEAR(predict_layer(m, s.layer, cap(Tier::edge)), s.seconds, 1e-9);
    for (int i = 0; i < 40; ++i) {
        const LayerConfig l = random_conv(rng);
        EXPECT_NEAR(predict_layer(m, l, cap(Tier::edge)), generate(l), 1e-9);
    }
}

TEST(Regression, InterceptOnlyGivesMean) {
    LayerConfig blank;
    blank.kind = LayerKind::other;
    std::vector<TrainingSample> samples;
    for (double y : {0.5, 1.25, 3.0, 7.25}) samples.push_back({blank, cap(Tier::cloud), y});
    const RegressionModel m = fit(samples);
    EXPECT_EQ(predict_layer(m, blank, cap(Tier::cloud)), 3.0);
    EXPECT_EQ(m.buckets.at({LayerKind::other, Tier::cloud})[0], 3.0);
}

TEST(Regression, InputVertexCostsNothing) {
    LayerConfig in;
    in.kind = LayerKind::input;
    in.output_elements = 1000;
    EXPECT_EQ(predict_layer(RegressionModel{}, in, cap(Tier::device)), 0.0);
}

TEST(Regression, LinearInFlops) {
    RegressionModel m;
    m.buckets[{LayerKind::fully_connected, Tier::device}] = {0.25, 1e-3, 0, 0, 0};
    LayerConfig fc;
    fc.kind = LayerKind::fully_connected;
    fc.input_elements = 8;
    fc.output_elements = 4;
    const double base = predict_layer(m, fc, cap(Tier::device));
    fc.input_elements = 16;  // doubles the flop count
    EXPECT_EQ(predict_layer(m, fc, cap(Tier::device)) - base, 1e-3 * 64.0);
}

TEST(Regression, ReEvaluationIsBitIdentical) {
    const auto samples = samples_from_json(read_json_file(oracle::data_path("alexnet_cpu.samples.json")));
    const RegressionModel a = fit(samples);
    const RegressionModel b = fit(samples);
    EXPECT_EQ(a.buckets, b.buckets);
    for (const TrainingSample& s : samples) {
        EXPECT_EQ(predict_layer(a, s.layer, s.capability), predict_layer(b, s.layer, s.capability));
    }
}

TEST(Regression, PooledFallbackAndWarnings) {
    Rng rng(3);
    std::vector<TrainingSample> samples;
    for (int i = 0; i < 12; ++i) {
        const LayerConfig l = random_conv(rng);
        samples.push_back({l, cap(Tier::device), 1e-3 + 1e-12 * flop_count(l)});
    }
    const RegressionModel m = fit(samples);
    ASSERT_TRUE(m.pooled.contains(LayerKind::convolution));
    EXPECT_FALSE(m.warnings.empty());
    const LayerConfig l = random_conv(rng);
    EXPECT_NEAR(predict_layer(m, l, cap(Tier::cloud)), 1e-3 + 1e-12 * flop_count(l), 1e-9);

    LayerConfig relu;
    relu.kind = LayerKind::activation;
    relu.input_elements = relu.output_elements = 10;
    try {
        predict_layer(m, relu, cap(Tier::edge));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::missing_profile);
    }
}

TEST(Regression, RankDeficientBucketWarns) {
    LayerConfig fc;
    fc.kind = LayerKind::fully_connected;
    fc.input_elements = 10;
    fc.output_elements = 10;
    std::vector<TrainingSample> samples{{fc, cap(Tier::edge), 0.5}, {fc, cap(Tier::edge), 0.5}};
    const RegressionModel m = fit(samples);
    ASSERT_FALSE(m.warnings.empty());
    EXPECT_NEAR(predict_layer(m, fc, cap(Tier::edge)), 0.5, 1e-12);
}

TEST(Regression, AlexNetCpuFixtureTracksMeasurements) {
    // Qualitative check: per-kind fits follow the measured ordering of layer costs.
    const auto samples = samples_from_json(read_json_file(oracle::data_path("alexnet_cpu.samples.json")));
    const RegressionModel m = fit(samples);
    double err = 0.0;
    double total = 0.0;
    for (const TrainingSample& s : samples) {
        const double p = predict_layer(m, s.layer, s.capability);
        EXPECT_GE(p, 0.0);
        err += std::abs(p - s.seconds);
        total += s.seconds;
    }
    EXPECT_LT(err / total, 0.1);
}
