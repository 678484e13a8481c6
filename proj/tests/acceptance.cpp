// SPDX-License-Identifier: Apache-2.0

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: acceptance [--report path.json]

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "builders.hpp"
#include "oracles.hpp"
#include "tiersplit/conv.hpp"
#include "tiersplit/documents.hpp"
#include "tiersplit/planner.hpp"
#include "tiersplit/randomized.hpp"
#include "tiersplit/simulator.hpp"
#include "tiersplit/tiler.hpp"

using namespace tiersplit;

namespace {

using I = std::int64_t;

struct Outcome {
    bool pass = true;
    std::string detail;
};

nlohmann::json report;

nlohmann::json doc(const std::string& name) { return read_json_file(oracle::data_path(name)); }

template <class T>
std::span<const StackLayer<T>> as_span(const std::vector<StackLayer<T>>& v) {
    return {v.data(), v.size()};
}

Outcome fail(const std::string& why) { return {false, why}; }

Outcome ac1_lossless_tiling() {
    Rng rng(kDefaultSeed);
    int faults_caught = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto stack = random_stack(rng);
        const GridSize grid = random_grid(rng, *stack.back().output_dims, 4);
        const auto layers = random_parameters<I>(rng, stack);
        const Tensor3<I> x = random_tensor<I>(rng, *stack.front().input_dims);
        const Tensor3<I> whole = oracle::naive_stack(as_span(layers), x);
        if (run_stack(as_span(layers), x) != whole) return fail("whole-map run differs from oracle, trial " + std::to_string(trial));
        const TilePlan plan = plan_tiles(stack, grid);
        if (run_tiled(plan, as_span(layers), x) != whole) return fail("tiled run differs, trial " + std::to_string(trial));
        if (run_tiled(plan, as_span(layers), x, true) != whole) ++faults_caught;
    }
    if (faults_caught == 0) return fail("fault injection never detected");
    return {true, "200/200 exact; fault injection detected in " + std::to_string(faults_caught) + " trials"};
}

Outcome ac2_tiny_padded_conv() {
    const auto stack = stack_from_json(doc("tiny.stack.json"));
    if (*stack[0].output_dims != Dims3{2, 2, 2}) return fail("output extent is not 2x2");
    const TilePlan plan = plan_tiles(stack, {2, 2});
    const Tile full{{0, 0}, {2, 2}, 0};
    for (const FusedTileStack& cell : plan.cells) {
        if (rtc(stack[0], cell.output_tile()) != full) return fail("cell input crop is not (0,0)-(2,2)");
    }
    // Every cell's padded window spills past the unpadded input, so each crop is clamped.
    for (const FusedTileStack& cell : plan.cells) {
        const PaddedTile p = rtc_padded(stack[0], cell.output_tile());
        const bool clamped = p.alpha.x - 1 < 0 || p.alpha.y - 1 < 0 || p.beta.x - 1 > 2 || p.beta.y - 1 > 2;
        if (!clamped) return fail("boundary clamping not exercised");
    }
    return {true, "2x2 output, all four crops (0,0)-(2,2)"};
}

Outcome ac3_rtc_receptive_field() {
    Rng rng(kDefaultSeed + 3);
    for (int trial = 0; trial < 1000; ++trial) {
        const LayerConfig c = random_window_layer(rng, 16, 5, 3, 2);
        const Dims3 out = *c.output_dims;
        std::uniform_int_distribution<std::int64_t> xs(0, out.width - 1), ys(0, out.height - 1);
        std::int64_t x0 = xs(rng), x1 = xs(rng), y0 = ys(rng), y1 = ys(rng);
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        const Tile t{{x0, y0}, {x1 + 1, y1 + 1}, 1};
        const Tile r = rtc(c, t);
        // Every real input entry read by the tile, by direct window enumeration.
        std::set<std::pair<I, I>> used;
        const Dims3 in = *c.input_dims;
        for (I oy = y0; oy <= y1; ++oy) {
            for (I ox = x0; ox <= x1; ++ox) {
                for (I ky = 0; ky < c.filter->height; ++ky) {
                    for (I kx = 0; kx < c.filter->width; ++kx) {
                        const I ix = ox * c.stride->w - c.padding->w + kx;
                        const I iy = oy * c.stride->h - c.padding->h + ky;
                        if (ix >= 0 && ix < in.width && iy >= 0 && iy < in.height) used.insert({ix, iy});
                    }
                }
            }
        }
        bool left = false, right = false, top = false, bottom = false;
        for (auto [ix, iy] : used) {
            if (ix < r.alpha.x || ix >= r.beta.x || iy < r.alpha.y || iy >= r.beta.y) {
                return fail("containment violated, trial " + std::to_string(trial));
            }
            left = left || ix == r.alpha.x;
            right = right || ix == r.beta.x - 1;
            top = top || iy == r.alpha.y;
            bottom = bottom || iy == r.beta.y - 1;
        }
        if (!(left && right && top && bottom)) return fail("region not minimal, trial " + std::to_string(trial));
    }
    return {true, "1000/1000 contained and minimal"};
}

Outcome ac4_hpa_validity() {
    Rng rng(kDefaultSeed + 4);
    RandomDagOptions opt;
    opt.max_vertices = 30;
    for (int trial = 0; trial < 1000; ++trial) {
        const WeightedGraph wg = random_weights(rng, random_dag(rng, opt));
        const PartitionPlan p = hpa(wg);
        if (p.tiers.size() != wg.graph.size() || p.tiers[0] != Tier::device) return fail("input not on device");
        if (!oracle::respects_order(wg.graph, p.tiers)) return fail("rank order violated, trial " + std::to_string(trial));
        if (p.theta != oracle::theta_from_scratch(wg, p.tiers)) return fail("theta mismatch, trial " + std::to_string(trial));
    }
    return {true, "1000/1000 valid, theta exact"};
}

Outcome ac5_layering() {
    const GraphLayering l = longest_distances(fixture::grid_module());
    const std::vector<std::vector<VertexId>> expected{{0}, {1}, {2, 3, 4, 5}, {6, 7, 8, 9}, {10}, {11, 12}, {13}};
    if (l.layers != expected) return fail("grid module layers differ");
    Rng rng(kDefaultSeed + 5);
    RandomDagOptions opt;
    opt.max_vertices = 10;
    for (int trial = 0; trial < 1000; ++trial) {
        const DnnGraph g = random_dag(rng, opt);
        if (longest_distances(g).delta != oracle::longest_path_lengths(g)) return fail("path oracle disagrees");
    }
    return {true, "7 layers; 1000/1000 random DAGs agree"};
}

Outcome ac6_sis() {
    Rng rng(kDefaultSeed + 6);
    RandomWeightOptions wopt;
    wopt.monotone = true;
    std::uniform_int_distribution<int> tier(0, 2);
    std::size_t moves = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const DnnGraph g = random_dag(rng);
        const WeightedGraph wg = random_weights(rng, g, wopt);
        const GraphLayering l = longest_distances(g);
        Assignment a(g.size());
        a[0] = Tier::device;
        for (std::size_t q = 1; q < l.layers.size(); ++q) {
            for (VertexId v : l.layers[q]) {
                std::vector<Tier> preds;
                for (VertexId p : g.predecessors(v)) preds.push_back(*a[p]);
                const TierSet gamma = potential_tiers(preds);
                Tier t;
                do t = tier_from_rank(tier(rng));
                while (!gamma.contains(t));
                a[v] = t;
            }
            const double before = partial_latency(wg, a);
            moves += sis_update(wg, l.layers[q], a);
            if (partial_latency(wg, a) > before) return fail("theta grew, trial " + std::to_string(trial));
        }
    }
    return {true, "1000/1000 non-worsening (" + std::to_string(moves) + " moves)"};
}

Outcome ac7_oracle_gap() {
    Rng rng(kDefaultSeed + 7);
    double sum = 0.0;
    double worst = 1.0;
    int optimal = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const WeightedGraph wg = random_weights(rng, random_dag(rng));
        const PartitionPlan h = hpa(wg);
        const OptimalPlan best = brute_force_optimal(wg);
        if (best.plan.theta > h.theta) return fail("exhaustive search above heuristic, trial " + std::to_string(trial));
        const double ratio = best.plan.theta > 0.0 ? h.theta / best.plan.theta : 1.0;
        sum += ratio;
        worst = std::max(worst, ratio);
        optimal += h.theta == best.plan.theta;
    }
    for (int trial = 0; trial < 200; ++trial) {
        RandomDagOptions one;
        one.min_vertices = one.max_vertices = 2;
        const WeightedGraph wg = random_weights(rng, random_dag(rng, one));
        if (hpa(wg).theta != brute_force_optimal(wg).plan.theta) return fail("single free vertex not optimal");
    }
    report["oracle_gap"] = {{"instances", 500}, {"mean_ratio", sum / 500.0}, {"max_ratio", worst}, {"optimal", optimal}};
    std::ostringstream s;
    s << "500/500 bounded; mean ratio " << sum / 500.0 << ", max " << worst << ", optimal in " << optimal;
    return {true, s.str()};
}

Outcome ac8_incremental() {
    Rng rng(kDefaultSeed + 8);
    const Thresholds th = thresholds_from_json(doc("default.thresholds.json"));
    std::uniform_real_distribution<double> inside(0.95, 1.05), outside(0.2, 5.0), coin(0.0, 1.0);
    double gap_sum = 0.0;
    double gap_max = 0.0;
    int triggered = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const WeightedGraph before = random_weights(rng, random_dag(rng));
        const PartitionPlan plan = hpa(before);
        const bool small = coin(rng) < 0.5;
        std::vector<TierTimes> times = before.vertex_times;
        std::uniform_int_distribution<VertexId> pick(1, before.graph.size() - 1);
        const VertexId v = pick(rng);
        for (double& s : times[v].seconds) s *= small ? inside(rng) : outside(rng);
        const WeightedGraph after = with_times(before, times);
        IncrementalOptions opt;
        opt.measure_gap = true;
        const IncrementalResult r = incremental_update(plan, before, after, changed_vertices(before, after), th, opt);
        if (!is_valid_assignment(after.graph, r.plan.tiers) || !oracle::respects_order(after.graph, r.plan.tiers)) {
            return fail("invalid plan, trial " + std::to_string(trial));
        }
        if (small && (r.triggered || r.plan != plan)) return fail("within-threshold change altered the plan");
        if (r.triggered) {
            ++triggered;
            if (r.gap_vs_full) {
                gap_sum += *r.gap_vs_full;
                gap_max = std::max(gap_max, *r.gap_vs_full);
            }
        }
    }
    report["incremental_gap"] = {{"trials", 1000}, {"triggered", triggered},
                                 {"mean_gap", triggered ? gap_sum / triggered : 0.0}, {"max_gap", gap_max}};
    std::ostringstream s;
    s << "1000/1000 valid; " << triggered << " re-plans, mean gap vs full " << (triggered ? gap_sum / triggered : 0.0);
    return {true, s.str()};
}

Outcome ac9_simulator_fixtures() {
    const DnnGraph g = load_graph(oracle::data_path("alexnet.graph.json"), ShapeMode::floor);
    const ProfileTable profile = profile_from_json(doc("alexnet.profile.json"));
    const WeightedGraph free = weight_graph(g, profile, bandwidth_from_json(doc("free.bandwidth.json")));
    const SimReport r = simulate({free, plan_from_json(doc("alexnet.plan.json")), std::nullopt, 150528});
    if (r.theta != 0.0072) return fail("AlexNet split theta is not 7.2 ms");
    nlohmann::json ratios = nlohmann::json::object();
    const std::size_t first = g.link_index(0, 1);
    for (const char* name : {"wifi", "4g", "5g", "optical"}) {
        const nlohmann::json raw = doc(std::string(name) + ".bandwidth.json");
        const WeightedGraph wg = weight_graph(g, profile, bandwidth_from_json(raw));
        const std::int64_t bytes = wg.output_bytes(0);
        const std::pair<const char*, std::pair<Tier, Tier>> pairs[] = {
            {"de", {Tier::device, Tier::edge}}, {"ec", {Tier::edge, Tier::cloud}}, {"dc", {Tier::device, Tier::cloud}}};
        for (const auto& [key, tiers] : pairs) {
            const double closed = static_cast<double>(bytes) * 8.0 / (raw.at(key).get<double>() * 1e6);
            if (std::abs(wg.delay(first, tiers.first, tiers.second) - closed) > 1e-12) {
                return fail(std::string("link delay off for ") + name + " " + key);
            }
        }
        PartitionPlan cloud;
        cloud.tiers.assign(g.size(), Tier::cloud);
        cloud.tiers[0] = Tier::device;
        if (comm_overhead({wg, cloud, std::nullopt, 150528}) != 150528) return fail("cloud-only overhead is not the input size");
        const SimReport split = simulate({wg, plan_from_json(doc("alexnet.plan.json")), std::nullopt, 150528});
        ratios[name] = {{"theta_ms", split.theta * 1e3},
                        {"vs_device", split.speedups.device},
                        {"vs_edge", split.speedups.edge},
                        {"vs_cloud", split.speedups.cloud}};
    }
    report["baseline_ratios"] = ratios;
    return {true, "theta 7.2 ms exact; link delays within 1e-12 s; cloud-only overhead 150528 B"};
}

Outcome ac10_regression() {
    Rng rng(kDefaultSeed + 10);
    const Coefficients truth{0.002, 3e-12, 1e-9, 0.0, 0.0};
    const TierCapability edge{Tier::edge, 4.0, 1.0, 0};
    auto generate = [&](const LayerConfig& l) {
        const FeatureVector f = layer_features(l);
        double t = 0.0;
        for (std::size_t i = 0; i < kFeatureCount; ++i) t += truth[i] * f[i];
        return t;
    };
    std::uniform_int_distribution<std::int64_t> extent(4, 64), depth(1, 32), count(1, 64), half(0, 2);
    auto random_conv = [&] {
        LayerConfig c;
        c.kind = LayerKind::convolution;
        const std::int64_t k = 2 * half(rng) + 1;
        c.input_dims = Dims3{extent(rng), extent(rng), depth(rng)};
        c.filter = FilterShape{k, k, 0, count(rng)};
        c.stride = Extent2{1, 1};
        c.padding = Extent2{k / 2, k / 2};
        return infer_layer_shape(c);
    };
    std::vector<TrainingSample> samples;
    for (int i = 0; i < 60; ++i) {
        const LayerConfig l = random_conv();
        samples.push_back({l, edge, generate(l)});
    }
    const RegressionModel m = fit(samples);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const LayerConfig l = random_conv();
        worst = std::max(worst, std::abs(predict_layer(m, l, edge) - generate(l)));
    }
    if (worst > 1e-9) return fail("prediction error " + std::to_string(worst));
    LayerConfig blank;
    blank.kind = LayerKind::other;
    std::vector<TrainingSample> flat;
    for (double y : {0.5, 1.25, 3.0, 7.25}) flat.push_back({blank, edge, y});
    if (predict_layer(fit(flat), blank, edge) != 3.0) return fail("intercept-only fit is not the mean");
    std::ostringstream s;
    s << "max error " << worst << " s; intercept-only returns the mean";
    return {true, s.str()};
}

Outcome ac11_edge_parallel() {
    Rng rng(kDefaultSeed + 11);
    std::uniform_real_distribution<double> ms(0.1, 5.0);
    int strict = 0;
    double best = 1.0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto stack = random_stack(rng);
        const GridSize grid = random_grid(rng, *stack.back().output_dims, 4);
        std::vector<TierTimes> times;
        for (std::size_t i = 0; i < stack.size(); ++i) times.push_back({{ms(rng), ms(rng), ms(rng)}});
        const Scenario s = fixture::stack_scenario(stack, grid, times);
        const double speedup = edge_parallel_speedup(s);
        const double cells = static_cast<double>(grid.cells());
        if (speedup < 1.0 - 1e-12 || speedup > cells + 1e-12) return fail("speedup out of [1, cells], trial " + std::to_string(trial));
        const OverlapReport overlap = overlap_stats(s.edge_parallel->tiles);
        bool redundant = false;
        for (std::size_t i = 0; i + 1 < overlap.levels.size(); ++i) redundant = redundant || overlap.levels[i].factor > 1.0;
        if (redundant) {
            if (!(speedup < cells)) return fail("no loss despite redundancy, trial " + std::to_string(trial));
            ++strict;
        }
        best = std::max(best, speedup);
    }
    const auto three = stack_from_json(doc("three_layer.stack.json"));
    std::vector<TierTimes> unit(three.size(), TierTimes{{1.0, 1.0, 1.0}});
    const double four = edge_parallel_speedup(fixture::stack_scenario(three, {2, 2}, unit));
    report["edge_parallel"] = {{"three_layer_2x2_speedup", four}, {"max_random_speedup", best}};
    if (!(four < 4.0)) return fail("2x2 split of the three-layer stack reached 4x");
    std::ostringstream s;
    s << "500/500 within [1, cells]; " << strict << " strict; three-layer 2x2 speedup " << four;
    return {true, s.str()};
}

}  // namespace

int main(int argc, char** argv) {
    std::string report_path;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--report") == 0 && i + 1 < argc) report_path = argv[++i];
    }
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"AC1", ac1_lossless_tiling}, {"AC2", ac2_tiny_padded_conv},          {"AC3", ac3_rtc_receptive_field},
        {"AC4", ac4_hpa_validity},    {"AC5", ac5_layering},      {"AC6", ac6_sis},
        {"AC7", ac7_oracle_gap},      {"AC8", ac8_incremental},   {"AC9", ac9_simulator_fixtures},
        {"AC10", ac10_regression},    {"AC11", ac11_edge_parallel},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << " " << o.detail << " [" << secs << " s]" << std::endl;
        report["criteria"][name] = {{"pass", o.pass}, {"detail", o.detail}, {"seconds", secs}};
        failures += !o.pass;
    }
    if (!report_path.empty()) std::ofstream(report_path) << report.dump(2) << '\n';
    return failures == 0 ? 0 : 1;
}
