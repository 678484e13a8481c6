// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: plan | tile | simulate | oracle | verify-tiles | estimate.
//
// Exit codes: 0 success, 2 configuration error, 3 guard violation (size guard,
// grid too fine), 4 verification failure.

#include <fmt/core.h>
#include <fmt/ostream.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tiersplit/conv.hpp"
#include "tiersplit/documents.hpp"
#include "tiersplit/error.hpp"
#include "tiersplit/graph_io.hpp"
#include "tiersplit/latency_model.hpp"
#include "tiersplit/planner.hpp"
#include "tiersplit/randomized.hpp"
#include "tiersplit/simulator.hpp"
#include "tiersplit/tiler.hpp"

namespace ts = tiersplit;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitGuard = 3;
constexpr int kExitVerify = 4;

int exit_code_for(ts::ErrorCode code) {
    switch (code) {
        case ts::ErrorCode::size_guard:
        case ts::ErrorCode::grid_too_fine: return kExitGuard;
        case ts::ErrorCode::verification_failed: return kExitVerify;
        default: return kExitConfig;
    }
}

struct WeightInputs {
    std::string graph;
    std::string profile;
    std::string model;
    std::string capabilities;
    std::string bandwidth;
    bool floor_mode = false;

    ts::ShapeMode mode() const { return floor_mode ? ts::ShapeMode::floor : ts::ShapeMode::exact; }
};

void add_weight_options(CLI::App* cmd, WeightInputs& in, bool need_bandwidth = true) {
    cmd->add_option("--graph", in.graph, "graph description document")->required();
    cmd->add_option("--profile", in.profile, "per-vertex processing times (takes precedence over --model)");
    cmd->add_option("--model", in.model, "fitted regression model");
    cmd->add_option("--capabilities", in.capabilities, "tier capability document (with --model)");
    auto* bw = cmd->add_option("--bandwidth", in.bandwidth, "bandwidth document");
    if (need_bandwidth) bw->required();
    cmd->add_flag("--floor", in.floor_mode, "floor non-integral sliding-window extents instead of rejecting them");
}

ts::DnnGraph load_graph(const WeightInputs& in) { return ts::load_graph(in.graph, in.mode()); }

ts::WeightedGraph load_weights(const WeightInputs& in, const ts::DnnGraph& g, const ts::BandwidthConfig& bw,
                               const std::string& profile_path) {
    std::optional<ts::ProfileTable> profile;
    if (!profile_path.empty()) profile = ts::profile_from_json(ts::read_json_file(profile_path));
    if (!in.model.empty()) {
        if (in.capabilities.empty()) throw ts::Error(ts::ErrorCode::parse, "--model needs --capabilities");
        const auto model = ts::model_from_json(ts::read_json_file(in.model));
        const auto caps = ts::capabilities_from_json(ts::read_json_file(in.capabilities));
        return ts::weight_graph(g, model, caps, bw, profile ? &*profile : nullptr);
    }
    if (!profile) throw ts::Error(ts::ErrorCode::missing_profile, "either --profile or --model is required");
    return ts::weight_graph(g, *profile, bw);
}

ts::WeightedGraph load_weights(const WeightInputs& in, const ts::DnnGraph& g) {
    const auto bw = ts::bandwidth_from_json(ts::read_json_file(in.bandwidth));
    return load_weights(in, g, bw, in.profile);
}

void write_json(const std::string& path, const json& doc) {
    const std::string text = doc.dump(2) + "\n";
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw ts::Error(ts::ErrorCode::parse, "cannot write '" + path + "'");
    out << text;
}

void write_text(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw ts::Error(ts::ErrorCode::parse, "cannot write '" + path + "'");
    out << text;
}

ts::GridSize parse_grid(const std::string& text) {
    const auto x = text.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(text);
        return {std::stoll(text.substr(0, x)), std::stoll(text.substr(x + 1))};
    } catch (const std::exception&) {
        throw ts::Error(ts::ErrorCode::parse, "grid must look like AxB, got '" + text + "'");
    }
}

std::string assignment_string(std::span<const ts::Tier> tiers) {
    std::string s;
    for (ts::Tier t : tiers) s += ts::tier_letter(t);
    return s;
}

double ms(double seconds) { return seconds * 1e3; }

void print_plan(const ts::PartitionPlan& plan) {
    for (ts::Tier t : ts::kTiers) {
        std::string ids;
        for (std::size_t v = 0; v < plan.tiers.size(); ++v) {
            if (plan.tiers[v] == t) ids += (ids.empty() ? "v" : " v") + std::to_string(v);
        }
        fmt::print("{:<7} {}\n", ts::tier_name(t), ids.empty() ? "-" : ids);
    }
    fmt::print("theta   {:.6f} ms ({})\n", ms(plan.theta), plan.provenance == ts::Provenance::full ? "full" : "incremental");
}

// ---------------------------------------------------------------------------
// plan

struct PlanArgs {
    WeightInputs in;
    bool strict = false;
    std::string out;
    std::string previous_plan;
    std::string previous_profile;
    std::string previous_bandwidth;
    std::string thresholds;
    std::optional<double> escalate_gap;
};

int cmd_plan(const PlanArgs& a) {
    const auto g = load_graph(a.in);
    const auto wg = load_weights(a.in, g);
    const ts::HpaOptions hpa_opts{a.strict};
    if (a.previous_plan.empty()) {
        const auto plan = ts::hpa(wg, hpa_opts);
        print_plan(plan);
        if (!a.out.empty()) write_json(a.out, ts::plan_to_json(plan));
        return kExitOk;
    }

    const auto previous = ts::plan_from_json(ts::read_json_file(a.previous_plan));
    const auto old_bw = ts::bandwidth_from_json(
        ts::read_json_file(a.previous_bandwidth.empty() ? a.in.bandwidth : a.previous_bandwidth));
    const auto planned_with =
        load_weights(a.in, g, old_bw, a.previous_profile.empty() ? a.in.profile : a.previous_profile);
    const ts::Thresholds th =
        a.thresholds.empty() ? ts::Thresholds{} : ts::thresholds_from_json(ts::read_json_file(a.thresholds));
    ts::IncrementalOptions opts;
    opts.hpa = hpa_opts;
    opts.escalate_above_gap_pct = a.escalate_gap;
    opts.measure_gap = true;
    const auto changed = ts::changed_vertices(planned_with, wg);
    const auto r = ts::incremental_update(previous, planned_with, wg, changed, th, opts);
    fmt::print("changed    {} vertices\n", changed.size());
    fmt::print("triggered  {}\n", r.triggered ? "yes" : "no");
    if (r.triggered) {
        std::string ids;
        for (auto v : r.recomputed) ids += " v" + std::to_string(v);
        fmt::print("recomputed{}\n", ids.empty() ? " -" : ids);
        if (r.gap_vs_full) fmt::print("gap        {:.4f}% vs full re-run{}\n", *r.gap_vs_full * 100.0,
                                      r.escalated ? " (escalated to full re-run)" : "");
    }
    print_plan(r.plan);
    if (!a.out.empty()) write_json(a.out, ts::plan_to_json(r.plan));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// tile

struct TileArgs {
    std::string stack;
    std::string graph;
    std::string plan;
    std::string grid = "1x1";
    bool floor_mode = false;
    std::string out;
};

int cmd_tile(const TileArgs& a) {
    const ts::ShapeMode mode = a.floor_mode ? ts::ShapeMode::floor : ts::ShapeMode::exact;
    std::vector<ts::LayerConfig> layers;
    if (!a.stack.empty()) {
        layers = ts::stack_from_json(ts::read_json_file(a.stack));
    } else {
        if (a.graph.empty() || a.plan.empty()) throw ts::Error(ts::ErrorCode::parse, "tile needs --stack or --graph with --plan");
        const auto g = ts::load_graph(a.graph, mode);
        const auto plan = ts::plan_from_json(ts::read_json_file(a.plan));
        const auto chain = ts::find_edge_chain(g, plan);
        if (chain.empty()) throw ts::Error(ts::ErrorCode::invalid_scenario, "the plan puts no convolution chain on the edge");
        for (auto v : chain) layers.push_back(g.config(v));
        std::string ids;
        for (auto v : chain) ids += " v" + std::to_string(v);
        fmt::print("edge chain{}\n", ids);
    }
    const auto tiles = ts::plan_tiles(layers, parse_grid(a.grid), mode);
    const auto stats = ts::overlap_stats(tiles);
    fmt::print("grid {}x{}, {} layers, {} cells\n", tiles.grid.a, tiles.grid.b, tiles.depth(), tiles.cells.size());
    for (const auto& lv : stats.levels) {
        fmt::print("level {}  tile area {:>8} / {:>8}  redundancy {:.4f}\n", lv.level, lv.tile_area_sum, lv.level_area,
                   lv.factor);
    }
    for (const auto& cell : tiles.cells) {
        const auto& c = cell.input_crop();
        const auto& o = cell.output_tile();
        fmt::print("cell ({},{})  crop [{},{})x[{},{})  output [{},{})x[{},{})\n", cell.a, cell.b, c.alpha.x, c.beta.x,
                   c.alpha.y, c.beta.y, o.alpha.x, o.beta.x, o.alpha.y, o.beta.y);
    }
    if (!a.out.empty()) write_json(a.out, ts::tile_plan_to_json(tiles));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    WeightInputs in;
    std::string plan;
    std::string grid;
    std::string out;
    std::string csv;
    std::vector<double> sweep_ec;
    bool replan = false;
};

ts::Scenario make_scenario(const ts::WeightedGraph& wg, const ts::PartitionPlan& plan, const std::string& grid,
                           ts::ShapeMode mode) {
    ts::Scenario s{wg, plan, std::nullopt, wg.output_bytes(0)};
    if (!grid.empty()) {
        auto chain = ts::find_edge_chain(wg.graph, plan);
        if (chain.empty()) throw ts::Error(ts::ErrorCode::invalid_scenario, "the plan puts no convolution chain on the edge");
        s.edge_parallel = ts::make_edge_parallel(wg.graph, std::move(chain), parse_grid(grid), mode);
    }
    return s;
}

void print_report(const ts::SimReport& r) {
    fmt::print("theta        {:.6f} ms\n", ms(r.theta));
    fmt::print("processing   device {:.6f} ms, edge {:.6f} ms, cloud {:.6f} ms\n", ms(r.processing[0]),
               ms(r.processing[1]), ms(r.processing[2]));
    fmt::print("transfers    d-e {:.6f} ms ({} B), e-c {:.6f} ms ({} B), d-c {:.6f} ms ({} B)\n", ms(r.de.seconds),
               r.de.bytes, ms(r.ec.seconds), r.ec.bytes, ms(r.dc.seconds), r.dc.bytes);
    fmt::print("backbone     {} B\n", r.backbone_bytes);
    fmt::print("baselines    device-only {:.6f} ms, edge-only {:.6f} ms, cloud-only {:.6f} ms\n",
               ms(r.baselines.device), ms(r.baselines.edge), ms(r.baselines.cloud));
    fmt::print("speedups     {:.4f}x, {:.4f}x, {:.4f}x\n", r.speedups.device, r.speedups.edge, r.speedups.cloud);
    if (r.parallel) {
        fmt::print("edge chain   {:.6f} ms on one node, {:.6f} ms split, speedup {:.4f}x\n",
                   ms(r.parallel->sequential_seconds), ms(r.parallel->parallel_seconds), r.parallel->speedup);
    }
}

int cmd_simulate(const SimulateArgs& a) {
    if (a.plan.empty()) throw ts::Error(ts::ErrorCode::parse, "simulate needs --plan");
    const auto g = load_graph(a.in);
    const auto plan = ts::plan_from_json(ts::read_json_file(a.plan));
    const auto wg = load_weights(a.in, g);
    const auto report = ts::simulate(make_scenario(wg, plan, a.grid, a.in.mode()));
    print_report(report);
    if (!a.out.empty()) write_json(a.out, ts::report_to_json(report));

    std::ostringstream table;
    table << ts::report_csv_header() << '\n' << ts::report_csv_row("base", report) << '\n';
    if (!a.sweep_ec.empty()) {
        fmt::print("\n{:>12} {:>14} {:>14} {:>14}\n", "sigma_ec", "theta ms", "backbone B", "cloud-only x");
        for (double mbps : a.sweep_ec) {
            ts::BandwidthConfig bw = wg.bandwidth;
            bw.sigma_ec = mbps * 1e6;
            const auto swg = load_weights(a.in, g, bw, a.in.profile);
            const auto splan = a.replan ? ts::hpa(swg) : plan;
            const auto r = ts::simulate(make_scenario(swg, splan, a.grid, a.in.mode()));
            fmt::print("{:>7.2f} Mbps {:>14.6f} {:>14} {:>14.4f}\n", mbps, ms(r.theta), r.backbone_bytes, r.speedups.cloud);
            std::ostringstream label;
            label << "ec=" << mbps << "Mbps";
            table << ts::report_csv_row(label.str(), r) << '\n';
        }
    }
    if (!a.csv.empty()) write_text(a.csv, table.str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// oracle

struct OracleArgs {
    WeightInputs in;
    bool strict = false;
    std::size_t random = 0;
    std::size_t vertices = 10;
    std::uint64_t seed = ts::kDefaultSeed;
    std::string out;
};

int cmd_oracle(const OracleArgs& a) {
    const ts::HpaOptions opts{a.strict};
    if (a.random == 0) {
        if (a.in.graph.empty()) throw ts::Error(ts::ErrorCode::parse, "oracle needs --graph or --random");
        const auto g = load_graph(a.in);
        const auto wg = load_weights(a.in, g);
        const auto opt = ts::brute_force_optimal(wg, opts);
        const auto heur = ts::hpa(wg, opts);
        const double ratio = opt.plan.theta > 0.0 ? heur.theta / opt.plan.theta : 1.0;
        std::string diff;
        for (std::size_t v = 0; v < heur.tiers.size(); ++v) {
            if (heur.tiers[v] != opt.plan.tiers[v]) {
                diff += fmt::format(" v{}:{}->{}", v, ts::tier_letter(heur.tiers[v]), ts::tier_letter(opt.plan.tiers[v]));
            }
        }
        fmt::print("theta(hpa)     {:.9f} ms  {}\n", ms(heur.theta), assignment_string(heur.tiers));
        fmt::print("theta(optimal) {:.9f} ms  {}  ({} valid assignments)\n", ms(opt.plan.theta),
                   assignment_string(opt.plan.tiers), opt.evaluated);
        fmt::print("ratio          {:.6f}\n", ratio);
        fmt::print("differences   {}\n", diff.empty() ? " none" : diff);
        if (!a.out.empty()) {
            write_json(a.out, json{{"theta_hpa", heur.theta},
                                   {"theta_optimal", opt.plan.theta},
                                   {"ratio", ratio},
                                   {"hpa", assignment_string(heur.tiers)},
                                   {"optimal", assignment_string(opt.plan.tiers)}});
        }
        return kExitOk;
    }

    if (a.vertices > ts::kBruteForceMaxVertices) {
        throw ts::Error(ts::ErrorCode::size_guard, "exhaustive search is limited to " +
                                                       std::to_string(ts::kBruteForceMaxVertices) + " vertices");
    }
    ts::Rng rng(a.seed);
    ts::RandomDagOptions dag;
    dag.min_vertices = dag.max_vertices = a.vertices;
    std::ostringstream csv;
    csv << "trial,vertices,theta_hpa,theta_optimal,ratio\n";
    csv.precision(17);
    double sum = 0.0;
    double worst = 1.0;
    std::size_t exact = 0;
    for (std::size_t i = 0; i < a.random; ++i) {
        const auto g = ts::random_dag(rng, dag);
        const auto wg = ts::random_weights(rng, g);
        const auto opt = ts::brute_force_optimal(wg, opts);
        const auto heur = ts::hpa(wg, opts);
        if (opt.plan.theta > heur.theta) {
            throw ts::Error(ts::ErrorCode::verification_failed, "optimal plan is slower than the heuristic");
        }
        const double ratio = heur.theta / opt.plan.theta;
        sum += ratio;
        worst = std::max(worst, ratio);
        if (heur.theta == opt.plan.theta) ++exact;
        csv << i << ',' << g.size() << ',' << heur.theta << ',' << opt.plan.theta << ',' << ratio << '\n';
    }
    fmt::print("instances      {} ({} vertices, seed {})\n", a.random, a.vertices, a.seed);
    fmt::print("optimal found  {}\n", exact);
    fmt::print("mean ratio     {:.6f}\n", sum / static_cast<double>(a.random));
    fmt::print("max ratio      {:.6f}\n", worst);
    if (!a.out.empty()) write_text(a.out, csv.str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// verify-tiles

struct VerifyArgs {
    std::string stack;
    std::string grid;
    std::size_t trials = 200;
    std::uint64_t seed = ts::kDefaultSeed;
    std::size_t max_layers = 6;
    std::int64_t max_extent = 32;
    std::int64_t max_grid = 4;
    bool fault_inject = false;
};

int cmd_verify_tiles(const VerifyArgs& a) {
    ts::Rng rng(a.seed);
    std::optional<std::vector<ts::LayerConfig>> fixed;
    if (!a.stack.empty()) fixed = ts::stack_from_json(ts::read_json_file(a.stack));
    if (fixed && fixed->empty()) {
        fmt::print("empty stack: nothing to tile, trivially lossless\n");
        return kExitOk;
    }
    ts::RandomStackOptions so;
    so.max_layers = a.max_layers;
    so.max_extent = a.max_extent;

    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < a.trials; ++i) {
        const auto stack = fixed ? *fixed : ts::random_stack(rng, so);
        const ts::Dims3 out = *stack.back().output_dims;
        const ts::GridSize grid = a.grid.empty() ? ts::random_grid(rng, out, a.max_grid) : parse_grid(a.grid);
        const auto plan = ts::plan_tiles(stack, grid);
        const auto params = ts::random_parameters<std::int64_t>(rng, stack);
        const auto input = ts::random_tensor<std::int64_t>(rng, *stack.front().input_dims);
        const std::span<const ts::StackLayer<std::int64_t>> layers(params);
        const auto whole = ts::run_stack(layers, input);
        const auto tiled = ts::run_tiled(plan, layers, input, a.fault_inject);
        if (whole != tiled) ++mismatches;
    }
    fmt::print("trials {}  mismatches {}  seed {}{}\n", a.trials, mismatches, a.seed,
               a.fault_inject ? "  (interior edges zero-padded)" : "");
    if (mismatches > 0) {
        fmt::print("FAIL: tiled execution differs from whole-map execution\n");
        return kExitVerify;
    }
    fmt::print("PASS: tiled execution equals whole-map execution\n");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// estimate

struct FitArgs {
    std::string samples;
    std::string out;
};

int cmd_fit(const FitArgs& a) {
    const auto samples = ts::samples_from_json(ts::read_json_file(a.samples));
    const auto model = ts::fit(samples);
    for (const auto& w : model.warnings) fmt::print(std::cerr, "warning: {}\n", w);
    fmt::print("{} samples, {} buckets\n", samples.size(), model.buckets.size());
    std::size_t i = 0;
    for (const auto& s : samples) {
        fmt::print("{:>4} {:<16} {:<7} actual {:>10.4f} ms  predicted {:>10.4f} ms\n", i++, ts::to_string(s.layer.kind),
                   ts::tier_name(s.capability.tier), ms(s.seconds), ms(ts::predict_layer(model, s.layer, s.capability)));
    }
    write_json(a.out, ts::model_to_json(model));
    return kExitOk;
}

struct PredictArgs {
    std::string model;
    std::string graph;
    std::string capabilities;
    bool floor_mode = false;
    std::string out;
};

int cmd_predict(const PredictArgs& a) {
    const auto g = ts::load_graph(a.graph, a.floor_mode ? ts::ShapeMode::floor : ts::ShapeMode::exact);
    const auto model = ts::model_from_json(ts::read_json_file(a.model));
    const auto caps = ts::capabilities_from_json(ts::read_json_file(a.capabilities));
    ts::ProfileTable profile;
    for (ts::VertexId v = 0; v < g.size(); ++v) {
        ts::TierTimes t;
        for (ts::Tier tier : ts::kTiers) t.at(tier) = ts::predict_layer(model, g.config(v), caps[ts::rank(tier)]);
        profile.times.emplace_back(t);
        fmt::print("v{:<4} {:<16} d {:>10.4f} ms  e {:>10.4f} ms  c {:>10.4f} ms\n", v, ts::to_string(g.config(v).kind),
                   ms(t.seconds[0]), ms(t.seconds[1]), ms(t.seconds[2]));
    }
    if (!a.out.empty()) write_json(a.out, ts::profile_to_json(profile));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Three-tier DNN partitioning planner, tiler and simulator"};
    app.require_subcommand(1);

    PlanArgs plan;
    auto* plan_cmd = app.add_subcommand("plan", "assign every layer to device, edge or cloud");
    add_weight_options(plan_cmd, plan.in);
    plan_cmd->add_flag("--strict", plan.strict, "never place a layer before any of its producers");
    plan_cmd->add_option("--out", plan.out, "write the plan document here");
    plan_cmd->add_option("--previous-plan", plan.previous_plan, "re-plan incrementally from this plan");
    plan_cmd->add_option("--previous-profile", plan.previous_profile, "profile the previous plan was made with");
    plan_cmd->add_option("--previous-bandwidth", plan.previous_bandwidth, "bandwidth the previous plan was made with");
    plan_cmd->add_option("--thresholds", plan.thresholds, "change thresholds document");
    plan_cmd->add_option("--escalate-gap", plan.escalate_gap, "re-run fully when the local result is this many percent slower");

    TileArgs tile;
    auto* tile_cmd = app.add_subcommand("tile", "split a convolution chain into fused tile stacks");
    tile_cmd->add_option("--stack", tile.stack, "layer stack document");
    tile_cmd->add_option("--graph", tile.graph, "graph document (with --plan: tile the edge chain)");
    tile_cmd->add_option("--plan", tile.plan, "plan document");
    tile_cmd->add_option("--grid", tile.grid, "grid as AxB")->capture_default_str();
    tile_cmd->add_flag("--floor", tile.floor_mode, "floor non-integral extents");
    tile_cmd->add_option("--out", tile.out, "write the tile-plan document here");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "score a plan: latency, traffic and single-tier baselines");
    add_weight_options(sim_cmd, sim.in);
    sim_cmd->add_option("--plan", sim.plan, "plan document");
    sim_cmd->add_option("--grid", sim.grid, "split the edge chain over AxB edge nodes");
    sim_cmd->add_option("--out", sim.out, "write the report document here");
    sim_cmd->add_option("--csv", sim.csv, "write the flat table here");
    sim_cmd->add_option("--sweep-ec", sim.sweep_ec, "edge-cloud rates in Mbps to sweep")->delimiter(',');
    sim_cmd->add_flag("--replan", sim.replan, "re-plan for every swept rate");

    OracleArgs oracle;
    auto* oracle_cmd = app.add_subcommand("oracle", "compare the heuristic with exhaustive search");
    oracle_cmd->add_option("--graph", oracle.in.graph, "graph description document");
    oracle_cmd->add_option("--profile", oracle.in.profile, "per-vertex processing times");
    oracle_cmd->add_option("--model", oracle.in.model, "fitted regression model");
    oracle_cmd->add_option("--capabilities", oracle.in.capabilities, "tier capability document");
    oracle_cmd->add_option("--bandwidth", oracle.in.bandwidth, "bandwidth document");
    oracle_cmd->add_flag("--floor", oracle.in.floor_mode, "floor non-integral extents");
    oracle_cmd->add_flag("--strict", oracle.strict, "strict potential tiers");
    oracle_cmd->add_option("--random", oracle.random, "number of random instances instead of --graph");
    oracle_cmd->add_option("--vertices", oracle.vertices, "vertices per random instance")->capture_default_str();
    oracle_cmd->add_option("--seed", oracle.seed, "random seed")->capture_default_str();
    oracle_cmd->add_option("--out", oracle.out, "write the gap report here");

    VerifyArgs verify;
    auto* verify_cmd = app.add_subcommand("verify-tiles", "check tiled execution against whole-map execution");
    verify_cmd->add_option("--stack", verify.stack, "fixed stack document instead of random stacks");
    verify_cmd->add_option("--grid", verify.grid, "fixed grid as AxB");
    verify_cmd->add_option("--trials", verify.trials, "number of trials")->capture_default_str();
    verify_cmd->add_option("--seed", verify.seed, "random seed")->capture_default_str();
    verify_cmd->add_option("--max-layers", verify.max_layers, "layers per random stack")->capture_default_str();
    verify_cmd->add_option("--max-extent", verify.max_extent, "input width and height bound")->capture_default_str();
    verify_cmd->add_option("--max-grid", verify.max_grid, "grid bound per axis")->capture_default_str();
    verify_cmd->add_flag("--fault-inject", verify.fault_inject, "zero-pad interior tile edges instead of sharing them");

    auto* est_cmd = app.add_subcommand("estimate", "fit or apply the per-layer latency regression");
    est_cmd->require_subcommand(1);
    FitArgs fit;
    auto* fit_cmd = est_cmd->add_subcommand("fit", "fit a model from measured samples");
    fit_cmd->add_option("--samples", fit.samples, "samples document")->required();
    fit_cmd->add_option("--out", fit.out, "write the model here")->required();
    PredictArgs predict;
    auto* predict_cmd = est_cmd->add_subcommand("predict", "predict per-tier times for a graph");
    predict_cmd->add_option("--model", predict.model, "model document")->required();
    predict_cmd->add_option("--graph", predict.graph, "graph description document")->required();
    predict_cmd->add_option("--capabilities", predict.capabilities, "tier capability document")->required();
    predict_cmd->add_flag("--floor", predict.floor_mode, "floor non-integral extents");
    predict_cmd->add_option("--out", predict.out, "write a profile document here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*plan_cmd) return cmd_plan(plan);
        if (*tile_cmd) return cmd_tile(tile);
        if (*sim_cmd) return cmd_simulate(sim);
        if (*oracle_cmd) return cmd_oracle(oracle);
        if (*verify_cmd) return cmd_verify_tiles(verify);
        if (*fit_cmd) return cmd_fit(fit);
        if (*predict_cmd) return cmd_predict(predict);
    } catch (const ts::Error& e) {
        fmt::print(std::cerr, "error [{}]: {}\n", ts::to_string(e.code()), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return kExitConfig;
    }
    return kExitConfig;
}
