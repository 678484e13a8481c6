// SPDX-License-Identifier: Apache-2.0

#include "tiersplit/graph_io.hpp"

#include <fstream>
#include <set>

#include "tiersplit/error.hpp"

namespace tiersplit {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::parse, what); }

std::int64_t get_int(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_integer()) fail(std::string("expected integer field '") + key + "'");
    return j.at(key).get<std::int64_t>();
}

Dims3 parse_dims(const json& j, const char* key) {
    const json& a = j.at(key);
    if (!a.is_array() || a.size() != 3) fail(std::string("'") + key + "' must be [width, height, depth]");
    return {a[0].get<std::int64_t>(), a[1].get<std::int64_t>(), a[2].get<std::int64_t>()};
}

Extent2 parse_pair(const json& j, const char* key) {
    const json& a = j.at(key);
    if (a.is_number_integer()) return {a.get<std::int64_t>(), a.get<std::int64_t>()};
    if (!a.is_array() || a.size() != 2) fail(std::string("'") + key + "' must be [w, h]");
    return {a[0].get<std::int64_t>(), a[1].get<std::int64_t>()};
}

json dims_json(const Dims3& d) { return json::array({d.width, d.height, d.depth}); }
json pair_json(const Extent2& e) { return json::array({e.w, e.h}); }

Vertex parse_vertex(const json& jv) {
    Vertex vx;
    vx.id = static_cast<VertexId>(get_int(jv, "id"));
    vx.name = jv.value("name", std::string());
    try {
        vx.config = layer_from_json(jv);
    } catch (const Error& e) {
        fail("vertex " + std::to_string(vx.id) + ": " + e.what());
    }
    return vx;
}

}  // namespace

LayerConfig layer_from_json(const nlohmann::json& jv) {
    LayerConfig cfg;
    const std::string kind_text = jv.value("kind", std::string());
    const auto kind = parse_layer_kind(kind_text);
    if (!kind) fail("unknown kind '" + kind_text + "'");
    cfg.kind = *kind;
    cfg.op_name = jv.value("op", std::string());

    if (cfg.kind == LayerKind::input) {
        if (jv.contains("dims")) cfg.output_dims = parse_dims(jv, "dims");
        if (jv.contains("bytes")) cfg.output_bytes = get_int(jv, "bytes");
        return cfg;
    }
    if (jv.contains("input_dims")) cfg.input_dims = parse_dims(jv, "input_dims");
    if (jv.contains("output_dims")) cfg.output_dims = parse_dims(jv, "output_dims");
    if (cfg.kind == LayerKind::convolution) {
        if (jv.contains("filter")) {
            const Extent2 f = parse_pair(jv, "filter");
            cfg.filter = FilterShape{f.w, f.h, jv.value("filter_depth", std::int64_t{0}),
                                     jv.value("filters", std::int64_t{0})};
        }
    } else if (cfg.kind == LayerKind::pooling) {
        if (jv.contains("window")) {
            const Extent2 f = parse_pair(jv, "window");
            cfg.filter = FilterShape{f.w, f.h, 0, 0};
        }
        const std::string mode = jv.value("mode", std::string("max"));
        if (mode == "max") {
            cfg.pool_mode = PoolMode::max;
        } else if (mode == "average") {
            cfg.pool_mode = PoolMode::average;
        } else {
            fail("unknown pooling mode '" + mode + "'");
        }
    }
    if (cfg.is_sliding_window()) {
        if (jv.contains("stride")) cfg.stride = parse_pair(jv, "stride");
        if (jv.contains("padding")) cfg.padding = parse_pair(jv, "padding");
    }
    if (jv.contains("outputs")) cfg.output_elements = get_int(jv, "outputs");
    if (jv.contains("inputs")) cfg.input_elements = get_int(jv, "inputs");
    if (jv.contains("input_bytes")) cfg.input_bytes = get_int(jv, "input_bytes");
    if (jv.contains("output_bytes")) cfg.output_bytes = get_int(jv, "output_bytes");
    return cfg;
}

nlohmann::json layer_to_json(const LayerConfig& c) {
    json jv;
    jv["kind"] = std::string(to_string(c.kind));
    if (!c.op_name.empty()) jv["op"] = c.op_name;
    if (c.kind == LayerKind::input) {
        if (c.output_dims) jv["dims"] = dims_json(*c.output_dims);
        jv["bytes"] = c.output_bytes;
        return jv;
    }
    if (c.input_dims) jv["input_dims"] = dims_json(*c.input_dims);
    if (c.output_dims) jv["output_dims"] = dims_json(*c.output_dims);
    if (c.filter) {
        const Extent2 f{c.filter->width, c.filter->height};
        if (c.kind == LayerKind::convolution) {
            jv["filter"] = pair_json(f);
            jv["filter_depth"] = c.filter->depth;
            jv["filters"] = c.filter->count;
        } else {
            jv["window"] = pair_json(f);
            jv["mode"] = c.pool_mode == PoolMode::max ? "max" : "average";
        }
    }
    if (c.stride) jv["stride"] = pair_json(*c.stride);
    if (c.padding) jv["padding"] = pair_json(*c.padding);
    jv["inputs"] = c.input_elements;
    jv["outputs"] = c.output_elements;
    jv["input_bytes"] = c.input_bytes;
    jv["output_bytes"] = c.output_bytes;
    return jv;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(path.string() + ": " + e.what());
    }
}

void check_document(const nlohmann::json& doc, std::string_view format) {
    if (!doc.is_object()) fail("document must be a JSON object");
    if (doc.contains("format") && doc.at("format") != std::string(format)) {
        fail("expected a '" + std::string(format) + "' document, got '" + doc.at("format").dump() + "'");
    }
    if (doc.contains("version") && doc.at("version") != kDocumentVersion) {
        fail("unsupported document version " + doc.at("version").dump());
    }
}

DnnGraph build_graph(const nlohmann::json& doc, ShapeMode mode) {
    check_document(doc, "tiersplit.graph");
    std::vector<Vertex> vertices;
    std::vector<Link> links;
    try {
        if (doc.contains("vertices")) {
            for (const json& jv : doc.at("vertices")) vertices.push_back(parse_vertex(jv));
        }
        if (doc.contains("links")) {
            for (const json& jl : doc.at("links")) {
                if (!jl.is_array() || jl.size() != 2) fail("links must be [from, to] pairs");
                links.push_back({jl[0].get<VertexId>(), jl[1].get<VertexId>()});
            }
        }
    } catch (const json::exception& e) {
        fail(std::string("malformed graph document: ") + e.what());
    }

    if (doc.contains("input")) {
        const json& jin = doc.at("input");
        Vertex v0;
        v0.id = 0;
        v0.name = "input";
        v0.config.kind = LayerKind::input;
        if (jin.contains("dims")) v0.config.output_dims = parse_dims(jin, "dims");
        if (jin.contains("bytes")) v0.config.output_bytes = get_int(jin, "bytes");
        for (const Vertex& vx : vertices) {
            if (vx.id == 0) fail("vertex id 0 is reserved when a top-level 'input' is given");
        }
        std::set<VertexId> has_pred;
        for (const Link& l : links) has_pred.insert(l.to);
        for (const Vertex& vx : vertices) {
            if (!has_pred.contains(vx.id)) links.push_back({0, vx.id});
        }
        vertices.push_back(std::move(v0));
    }
    std::sort(vertices.begin(), vertices.end(), [](const Vertex& a, const Vertex& b) { return a.id < b.id; });

    const std::int64_t element_bytes = doc.value("element_bytes", std::int64_t{4});
    return infer_shapes(DnnGraph::create(std::move(vertices), std::move(links), element_bytes), mode);
}

DnnGraph load_graph(const std::filesystem::path& path, ShapeMode mode) {
    return build_graph(read_json_file(path), mode);
}

nlohmann::json graph_to_json(const DnnGraph& g) {
    json doc;
    doc["format"] = "tiersplit.graph";
    doc["version"] = kDocumentVersion;
    doc["element_bytes"] = g.element_bytes();
    json vertices = json::array();
    for (const Vertex& vx : g.vertices()) {
        json jv = layer_to_json(vx.config);
        jv["id"] = vx.id;
        if (!vx.name.empty()) jv["name"] = vx.name;
        vertices.push_back(std::move(jv));
    }
    doc["vertices"] = std::move(vertices);
    json links = json::array();
    for (const Link& l : g.links()) links.push_back(json::array({l.from, l.to}));
    doc["links"] = std::move(links);
    return doc;
}

}  // namespace tiersplit
