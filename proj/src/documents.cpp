// SPDX-License-Identifier: Apache-2.0

#include "tiersplit/documents.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "tiersplit/error.hpp"
#include "tiersplit/graph_io.hpp"

namespace tiersplit {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::parse, what); }

// Runs a reader, turning library JSON exceptions into parse errors.
template <class F>
auto guarded(std::string_view what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        fail("malformed " + std::string(what) + " document: " + e.what());
    }
}

json header(std::string_view format) {
    json doc;
    doc["format"] = std::string(format);
    doc["version"] = kDocumentVersion;
    return doc;
}

// Numbers may be written as the strings "inf" / "-inf" when not finite.
double number(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    fail("expected a number, got " + j.dump());
}

json number_json(double v) {
    if (std::isfinite(v)) return v;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    fail("cannot serialize NaN");
}

double field(const json& j, const char* key) {
    if (!j.contains(key)) fail(std::string("missing field '") + key + "'");
    return number(j.at(key));
}

Tier tier_field(const json& j, const char* key) {
    const std::string text = j.at(key).get<std::string>();
    const auto t = parse_tier(text);
    if (!t) fail("unknown tier '" + text + "'");
    return *t;
}

std::string tier_string(Tier t) { return std::string(tier_name(t)); }

double time_scale(const json& doc) {
    const std::string unit = doc.value("unit", std::string("s"));
    if (unit == "s") return 1.0;
    if (unit == "ms") return 1000.0;
    fail("unknown time unit '" + unit + "'");
}

Thresholds::Range range_field(const json& doc, const char* key) {
    if (!doc.contains(key)) return {};
    const json& r = doc.at(key);
    if (!r.is_array() || r.size() != 2) fail(std::string("'") + key + "' must be [lower, upper]");
    return {number(r[0]), number(r[1])};
}

json coef_json(const Coefficients& c) { return json(std::vector<double>(c.begin(), c.end())); }

Coefficients coef_from(const json& j) {
    if (!j.is_array() || j.size() != kFeatureCount) fail("coefficient vectors need " + std::to_string(kFeatureCount) + " entries");
    Coefficients c{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) c[i] = number(j[i]);
    return c;
}

LayerKind kind_field(const json& j) {
    const std::string text = j.at("kind").get<std::string>();
    const auto k = parse_layer_kind(text);
    if (!k) fail("unknown layer kind '" + text + "'");
    return *k;
}

json traffic_json(const BoundaryTraffic& b) { return {{"seconds", number_json(b.seconds)}, {"bytes", b.bytes}}; }
BoundaryTraffic traffic_from(const json& j) { return {number(j.at("seconds")), j.at("bytes").get<std::int64_t>()}; }

json baselines_json(const Baselines& b) {
    return {{"device", number_json(b.device)}, {"edge", number_json(b.edge)}, {"cloud", number_json(b.cloud)}};
}
Baselines baselines_from(const json& j) { return {number(j.at("device")), number(j.at("edge")), number(j.at("cloud"))}; }

}  // namespace

// ---------------------------------------------------------------------------

ProfileTable profile_from_json(const json& doc) {
    check_document(doc, "tiersplit.profile");
    return guarded("profile", [&] {
        const double scale = time_scale(doc);
        ProfileTable table;
        for (const json& jv : doc.at("vertices")) {
            const auto id = jv.at("id").get<std::size_t>();
            if (id >= table.times.size()) table.times.resize(id + 1);
            if (table.times[id]) fail("duplicate profile entry for v" + std::to_string(id));
            TierTimes t;
            for (Tier tier : kTiers) t.at(tier) = field(jv, tier_name(tier).data()) / scale;
            table.times[id] = t;
        }
        return table;
    });
}

json profile_to_json(const ProfileTable& profile) {
    json doc = header("tiersplit.profile");
    doc["unit"] = "s";
    json vertices = json::array();
    for (std::size_t v = 0; v < profile.times.size(); ++v) {
        if (!profile.times[v]) continue;
        json jv{{"id", v}};
        for (Tier t : kTiers) jv[tier_string(t)] = profile.times[v]->at(t);
        vertices.push_back(std::move(jv));
    }
    doc["vertices"] = std::move(vertices);
    return doc;
}

CapabilitySet capabilities_from_json(const json& doc) {
    check_document(doc, "tiersplit.capabilities");
    return guarded("capabilities", [&] {
        std::vector<TierCapability> records;
        for (const json& jt : doc.at("tiers")) {
            TierCapability c;
            c.tier = tier_field(jt, "tier");
            c.cpu_score = jt.value("cpu", 0.0);
            c.gpu_score = jt.value("gpu", 0.0);
            c.memory_bytes = jt.value("memory_bytes", std::int64_t{0});
            records.push_back(c);
        }
        return make_capability_set(records);
    });
}

json capabilities_to_json(const CapabilitySet& caps) {
    json doc = header("tiersplit.capabilities");
    json tiers = json::array();
    for (const TierCapability& c : caps) {
        tiers.push_back({{"tier", tier_string(c.tier)}, {"cpu", c.cpu_score}, {"gpu", c.gpu_score},
                         {"memory_bytes", c.memory_bytes}});
    }
    doc["tiers"] = std::move(tiers);
    return doc;
}

BandwidthConfig bandwidth_from_json(const json& doc) {
    check_document(doc, "tiersplit.bandwidth");
    BandwidthConfig bw = guarded("bandwidth", [&] {
        const std::string unit = doc.value("unit", std::string("bps"));
        double scale = 1.0;
        if (unit == "Mbps") {
            scale = 1e6;
        } else if (unit != "bps") {
            fail("unknown bandwidth unit '" + unit + "'");
        }
        return BandwidthConfig{field(doc, "de") * scale, field(doc, "ec") * scale, field(doc, "dc") * scale};
    });
    bw.validate();
    return bw;
}

json bandwidth_to_json(const BandwidthConfig& bw) {
    json doc = header("tiersplit.bandwidth");
    doc["unit"] = "bps";
    doc["de"] = number_json(bw.sigma_de);
    doc["ec"] = number_json(bw.sigma_ec);
    doc["dc"] = number_json(bw.sigma_dc);
    return doc;
}

Thresholds thresholds_from_json(const json& doc) {
    check_document(doc, "tiersplit.thresholds");
    Thresholds th = guarded("thresholds", [&] {
        return Thresholds{range_field(doc, "vertex_time"), range_field(doc, "bandwidth")};
    });
    th.validate();
    return th;
}

json thresholds_to_json(const Thresholds& th) {
    json doc = header("tiersplit.thresholds");
    doc["vertex_time"] = {number_json(th.vertex_time.lower), number_json(th.vertex_time.upper)};
    doc["bandwidth"] = {number_json(th.bandwidth.lower), number_json(th.bandwidth.upper)};
    return doc;
}

PartitionPlan plan_from_json(const json& doc) {
    check_document(doc, "tiersplit.plan");
    return guarded("plan", [&] {
        PartitionPlan plan;
        for (const json& jt : doc.at("assignment")) {
            const auto t = parse_tier(jt.get<std::string>());
            if (!t) fail("unknown tier " + jt.dump());
            plan.tiers.push_back(*t);
        }
        plan.theta = number(doc.at("theta"));
        const std::string prov = doc.value("provenance", std::string("full"));
        if (prov == "full") {
            plan.provenance = Provenance::full;
        } else if (prov == "incremental") {
            plan.provenance = Provenance::incremental;
        } else {
            fail("unknown provenance '" + prov + "'");
        }
        if (doc.contains("tiers")) {
            for (Tier t : kTiers) {
                for (const json& jv : doc.at("tiers").at(tier_string(t))) {
                    const auto v = jv.get<std::size_t>();
                    if (v >= plan.tiers.size() || plan.tiers[v] != t) {
                        fail("per-tier listing disagrees with the assignment at v" + std::to_string(v));
                    }
                }
            }
        }
        return plan;
    });
}

json plan_to_json(const PartitionPlan& plan) {
    json doc = header("tiersplit.plan");
    json assignment = json::array();
    std::map<std::string, std::vector<std::size_t>> by_tier{{"device", {}}, {"edge", {}}, {"cloud", {}}};
    for (std::size_t v = 0; v < plan.tiers.size(); ++v) {
        assignment.push_back(std::string(1, tier_letter(plan.tiers[v])));
        by_tier[tier_string(plan.tiers[v])].push_back(v);
    }
    doc["assignment"] = std::move(assignment);
    doc["theta"] = number_json(plan.theta);
    doc["provenance"] = plan.provenance == Provenance::full ? "full" : "incremental";
    doc["tiers"] = by_tier;
    return doc;
}

TilePlan tile_plan_from_json(const json& doc) {
    check_document(doc, "tiersplit.tiles");
    return guarded("tile plan", [&] {
        TilePlan plan;
        const json& g = doc.at("grid");
        plan.grid = {g.at(0).get<std::int64_t>(), g.at(1).get<std::int64_t>()};
        // Floor mode accepts both exact and floored plans; declared dims are still checked.
        for (const json& jl : doc.at("layers")) plan.layers.push_back(infer_layer_shape(layer_from_json(jl), ShapeMode::floor));
        for (const json& jc : doc.at("cells")) {
            FusedTileStack cell;
            cell.a = jc.at("a").get<std::int64_t>();
            cell.b = jc.at("b").get<std::int64_t>();
            for (const json& jt : jc.at("tiles")) {
                if (!jt.is_array() || jt.size() != 4) fail("tiles must be [x_alpha, y_alpha, x_beta, y_beta]");
                Tile t{{jt[0].get<std::int64_t>(), jt[1].get<std::int64_t>()},
                       {jt[2].get<std::int64_t>(), jt[3].get<std::int64_t>()},
                       cell.tiles.size()};
                cell.tiles.push_back(t);
            }
            if (cell.tiles.size() != plan.layers.size() + 1) fail("each cell needs one tile per level");
            plan.cells.push_back(std::move(cell));
        }
        if (static_cast<std::int64_t>(plan.cells.size()) != plan.grid.cells()) fail("cell count differs from the grid");
        return plan;
    });
}

json overlap_to_json(const OverlapReport& report) {
    json levels = json::array();
    for (const LevelOverlap& lv : report.levels) {
        levels.push_back({{"level", lv.level},
                          {"tile_area_sum", lv.tile_area_sum},
                          {"level_area", lv.level_area},
                          {"redundant_elements", lv.redundant_elements},
                          {"factor", lv.factor}});
    }
    json crops = json::array();
    for (const auto& [w, h] : report.crop_sizes) crops.push_back({w, h});
    return {{"levels", levels}, {"total_redundant_elements", report.total_redundant_elements}, {"crop_sizes", crops}};
}

json tile_plan_to_json(const TilePlan& plan) {
    json doc = header("tiersplit.tiles");
    doc["grid"] = {plan.grid.a, plan.grid.b};
    json layers = json::array();
    for (const LayerConfig& cfg : plan.layers) layers.push_back(layer_to_json(cfg));
    doc["layers"] = std::move(layers);
    json cells = json::array();
    for (const FusedTileStack& cell : plan.cells) {
        json tiles = json::array();
        for (const Tile& t : cell.tiles) tiles.push_back({t.alpha.x, t.alpha.y, t.beta.x, t.beta.y});
        cells.push_back({{"a", cell.a}, {"b", cell.b}, {"tiles", std::move(tiles)}});
    }
    doc["cells"] = std::move(cells);
    doc["overlap"] = overlap_to_json(overlap_stats(plan));
    return doc;
}

SimReport report_from_json(const json& doc) {
    check_document(doc, "tiersplit.report");
    return guarded("report", [&] {
        SimReport r;
        r.theta = number(doc.at("theta"));
        for (Tier t : kTiers) r.processing[rank(t)] = number(doc.at("processing").at(tier_string(t)));
        const json& tr = doc.at("transfers");
        r.de = traffic_from(tr.at("de"));
        r.ec = traffic_from(tr.at("ec"));
        r.dc = traffic_from(tr.at("dc"));
        r.backbone_bytes = doc.at("backbone_bytes").get<std::int64_t>();
        r.baselines = baselines_from(doc.at("baselines"));
        r.speedups = baselines_from(doc.at("speedups"));
        if (doc.contains("edge_parallel")) {
            const json& p = doc.at("edge_parallel");
            r.parallel = ParallelStats{number(p.at("sequential_seconds")), number(p.at("parallel_seconds")),
                                       number(p.at("speedup")), p.at("slowest_cell").get<std::int64_t>()};
        }
        return r;
    });
}

json report_to_json(const SimReport& r) {
    json doc = header("tiersplit.report");
    doc["note"] = "model-level latencies from profiled or regressed layer times; excludes framework and RPC overheads";
    doc["theta"] = number_json(r.theta);
    json processing;
    for (Tier t : kTiers) processing[tier_string(t)] = number_json(r.processing[rank(t)]);
    doc["processing"] = std::move(processing);
    doc["transfers"] = {{"de", traffic_json(r.de)}, {"ec", traffic_json(r.ec)}, {"dc", traffic_json(r.dc)}};
    doc["backbone_bytes"] = r.backbone_bytes;
    doc["baselines"] = baselines_json(r.baselines);
    doc["speedups"] = baselines_json(r.speedups);
    if (r.parallel) {
        doc["edge_parallel"] = {{"sequential_seconds", number_json(r.parallel->sequential_seconds)},
                                {"parallel_seconds", number_json(r.parallel->parallel_seconds)},
                                {"speedup", number_json(r.parallel->speedup)},
                                {"slowest_cell", r.parallel->slowest_cell}};
    }
    return doc;
}

std::string report_csv_header() {
    return "label,theta_s,device_s,edge_s,cloud_s,de_s,de_bytes,ec_s,ec_bytes,dc_s,dc_bytes,backbone_bytes,"
           "device_only_s,edge_only_s,cloud_only_s,speedup_device,speedup_edge,speedup_cloud";
}

std::string report_csv_row(const std::string& label, const SimReport& r) {
    std::ostringstream out;
    out.precision(17);
    out << label << ',' << r.theta << ',' << r.processing[0] << ',' << r.processing[1] << ',' << r.processing[2] << ','
        << r.de.seconds << ',' << r.de.bytes << ',' << r.ec.seconds << ',' << r.ec.bytes << ',' << r.dc.seconds << ','
        << r.dc.bytes << ',' << r.backbone_bytes << ',' << r.baselines.device << ',' << r.baselines.edge << ','
        << r.baselines.cloud << ',' << r.speedups.device << ',' << r.speedups.edge << ',' << r.speedups.cloud;
    return out.str();
}

RegressionModel model_from_json(const json& doc) {
    check_document(doc, "tiersplit.model");
    return guarded("model", [&] {
        RegressionModel m;
        for (const json& jb : doc.at("buckets")) {
            m.buckets[{kind_field(jb), tier_field(jb, "tier")}] = coef_from(jb.at("coefficients"));
        }
        if (doc.contains("pooled")) {
            for (const json& jp : doc.at("pooled")) m.pooled[kind_field(jp)] = coef_from(jp.at("coefficients"));
        }
        if (doc.contains("warnings")) m.warnings = doc.at("warnings").get<std::vector<std::string>>();
        return m;
    });
}

json model_to_json(const RegressionModel& m) {
    json doc = header("tiersplit.model");
    doc["features"] = {"intercept", "flops", "input_elements", "output_elements", "parameters"};
    json buckets = json::array();
    for (const auto& [key, c] : m.buckets) {
        buckets.push_back({{"kind", std::string(to_string(key.first))}, {"tier", tier_string(key.second)},
                           {"coefficients", coef_json(c)}});
    }
    doc["buckets"] = std::move(buckets);
    json pooled = json::array();
    for (const auto& [kind, c] : m.pooled) {
        pooled.push_back({{"kind", std::string(to_string(kind))}, {"coefficients", coef_json(c)}});
    }
    doc["pooled"] = std::move(pooled);
    doc["warnings"] = m.warnings;
    return doc;
}

std::vector<TrainingSample> samples_from_json(const json& doc) {
    check_document(doc, "tiersplit.samples");
    return guarded("samples", [&] {
        std::optional<CapabilitySet> caps;
        if (doc.contains("capabilities")) caps = capabilities_from_json(doc.at("capabilities"));
        const double scale = time_scale(doc);
        std::vector<TrainingSample> out;
        for (const json& js : doc.at("samples")) {
            TrainingSample s;
            s.layer = infer_layer_shape(layer_from_json(js.at("layer")));
            const Tier t = tier_field(js, "tier");
            s.capability = caps ? (*caps)[rank(t)] : TierCapability{t, 0.0, 0.0, 0};
            s.seconds = field(js, "seconds") / scale;
            out.push_back(std::move(s));
        }
        return out;
    });
}

json samples_to_json(const std::vector<TrainingSample>& samples, const CapabilitySet& caps) {
    json doc = header("tiersplit.samples");
    doc["unit"] = "s";
    doc["capabilities"] = capabilities_to_json(caps);
    json list = json::array();
    for (const TrainingSample& s : samples) {
        list.push_back({{"layer", layer_to_json(s.layer)}, {"tier", tier_string(s.capability.tier)}, {"seconds", s.seconds}});
    }
    doc["samples"] = std::move(list);
    return doc;
}

std::vector<LayerConfig> stack_from_json(const json& doc) {
    check_document(doc, "tiersplit.stack");
    return guarded("stack", [&] {
        const json& d = doc.at("input_dims");
        std::optional<Dims3> prev =
            Dims3{d.at(0).get<std::int64_t>(), d.at(1).get<std::int64_t>(), d.at(2).get<std::int64_t>()};
        std::vector<LayerConfig> out;
        for (const json& jl : doc.at("layers")) {
            LayerConfig cfg = layer_from_json(jl);
            if (cfg.input_dims && *cfg.input_dims != *prev) {
                throw Error(ErrorCode::shape_mismatch, "stack layer " + std::to_string(out.size()) +
                                                           " input dims differ from the previous level");
            }
            cfg.input_dims = prev;
            out.push_back(infer_layer_shape(cfg));
            prev = out.back().output_dims;
        }
        return out;
    });
}

json stack_to_json(const std::vector<LayerConfig>& stack) {
    if (stack.empty() || !stack.front().input_dims) throw Error(ErrorCode::invalid_scenario, "stack has no input dims");
    json doc = header("tiersplit.stack");
    const Dims3& d = *stack.front().input_dims;
    doc["input_dims"] = {d.width, d.height, d.depth};
    json layers = json::array();
    for (const LayerConfig& cfg : stack) layers.push_back(layer_to_json(cfg));
    doc["layers"] = std::move(layers);
    return doc;
}

AnyTensor tensor_from_json(const json& doc) {
    check_document(doc, "tiersplit.tensor");
    return guarded("tensor", [&]() -> AnyTensor {
        const json& d = doc.at("dims");
        const Dims3 dims{d.at(0).get<std::int64_t>(), d.at(1).get<std::int64_t>(), d.at(2).get<std::int64_t>()};
        const std::string type = doc.value("type", std::string("integer"));
        if (type == "integer") return Tensor3<std::int64_t>(dims, doc.at("values").get<std::vector<std::int64_t>>());
        if (type == "float") return Tensor3<double>(dims, doc.at("values").get<std::vector<double>>());
        fail("unknown tensor type '" + type + "'");
    });
}

json tensor_to_json(const AnyTensor& tensor) {
    json doc = header("tiersplit.tensor");
    std::visit(
        [&](const auto& t) {
            using T = typename std::decay_t<decltype(t)>::value_type;
            doc["dims"] = {t.width(), t.height(), t.depth()};
            doc["type"] = std::is_integral_v<T> ? "integer" : "float";
            doc["values"] = t.values();
        },
        tensor);
    return doc;
}

}  // namespace tiersplit
