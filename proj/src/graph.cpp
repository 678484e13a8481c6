// SPDX-License-Identifier: Apache-2.0

#include "tiersplit/graph.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <utility>

#include "tiersplit/error.hpp"

namespace tiersplit {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::parse: return "parse error";
        case ErrorCode::cycle: return "cycle detected";
        case ErrorCode::unreachable: return "unreachable vertex";
        case ErrorCode::missing_parameter: return "missing parameter";
        case ErrorCode::invalid_dimension: return "invalid dimension";
        case ErrorCode::non_integral_shape: return "non-integral shape";
        case ErrorCode::shape_mismatch: return "shape mismatch";
        case ErrorCode::unknown_vertex: return "unknown vertex";
        case ErrorCode::incomplete_assignment: return "incomplete assignment";
        case ErrorCode::size_guard: return "size guard exceeded";
        case ErrorCode::invalid_tile: return "invalid tile";
        case ErrorCode::grid_too_fine: return "grid too fine";
        case ErrorCode::missing_profile: return "missing profile entry";
        case ErrorCode::invalid_bandwidth: return "invalid bandwidth";
        case ErrorCode::invalid_scenario: return "invalid scenario";
        case ErrorCode::verification_failed: return "verification failed";
    }
    return "unknown error";
}

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 9> kKindNames{{
    {LayerKind::input, "input"},
    {LayerKind::convolution, "convolution"},
    {LayerKind::pooling, "pooling"},
    {LayerKind::fully_connected, "fully-connected"},
    {LayerKind::activation, "activation"},
    {LayerKind::batch_norm, "batch-norm"},
    {LayerKind::concat, "concat"},
    {LayerKind::add, "add"},
    {LayerKind::other, "other"},
}};

std::string vname(VertexId v) { return "v" + std::to_string(v); }

}  // namespace

std::string_view to_string(LayerKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "other";
}

std::optional<LayerKind> parse_layer_kind(std::string_view text) {
    for (const auto& [k, name] : kKindNames) {
        if (name == text) return k;
    }
    return std::nullopt;
}

std::int64_t window_output_extent(std::int64_t in, std::int64_t window, std::int64_t stride, std::int64_t pad,
                                  ShapeMode mode) {
    if (in <= 0 || window <= 0 || stride <= 0 || pad < 0) {
        throw Error(ErrorCode::invalid_dimension, "sliding window needs positive input, window and stride");
    }
    const std::int64_t span = in - window + 2 * pad;
    if (span < 0) {
        throw Error(ErrorCode::invalid_dimension, "window " + std::to_string(window) + " exceeds padded input " +
                                                      std::to_string(in + 2 * pad));
    }
    if (mode == ShapeMode::exact && span % stride != 0) {
        throw Error(ErrorCode::non_integral_shape,
                    "(" + std::to_string(in) + " - " + std::to_string(window) + " + 2*" + std::to_string(pad) +
                        ") / " + std::to_string(stride) + " is not an integer");
    }
    return span / stride + 1;
}

void validate_window_config(const LayerConfig& cfg, std::string_view where) {
    const std::string at(where);
    if (!cfg.filter || !cfg.stride || !cfg.padding) {
        throw Error(ErrorCode::missing_parameter, at + ": " + std::string(to_string(cfg.kind)) +
                                                      " needs window, stride and padding");
    }
    if (cfg.filter->width <= 0 || cfg.filter->height <= 0) {
        throw Error(ErrorCode::invalid_dimension, at + ": window must be positive");
    }
    if (cfg.kind == LayerKind::convolution && cfg.filter->count <= 0) {
        throw Error(ErrorCode::invalid_dimension, at + ": filter count must be positive");
    }
    if (cfg.stride->w <= 0 || cfg.stride->h <= 0) {
        throw Error(ErrorCode::invalid_dimension, at + ": stride must be positive");
    }
    if (cfg.padding->w < 0 || cfg.padding->h < 0) {
        throw Error(ErrorCode::invalid_dimension, at + ": padding must be non-negative");
    }
    // A window that can sit entirely inside the padding reads no real entries.
    if (cfg.padding->w >= cfg.filter->width || cfg.padding->h >= cfg.filter->height) {
        throw Error(ErrorCode::invalid_dimension, at + ": padding must be smaller than the window");
    }
}

Dims3 window_output_dims(const LayerConfig& cfg, const Dims3& in, ShapeMode mode) {
    validate_window_config(cfg, to_string(cfg.kind));
    Dims3 out;
    out.width = window_output_extent(in.width, cfg.filter->width, cfg.stride->w, cfg.padding->w, mode);
    out.height = window_output_extent(in.height, cfg.filter->height, cfg.stride->h, cfg.padding->h, mode);
    out.depth = cfg.kind == LayerKind::convolution ? cfg.filter->count : in.depth;
    return out;
}

// ---------------------------------------------------------------------------
// DnnGraph

DnnGraph DnnGraph::create(std::vector<Vertex> vertices, std::vector<Link> links, std::int64_t element_bytes) {
    if (vertices.empty()) {
        throw Error(ErrorCode::missing_parameter, "graph has no input vertex");
    }
    if (element_bytes <= 0) {
        throw Error(ErrorCode::invalid_dimension, "element size must be positive");
    }
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        if (vertices[i].id != i) {
            throw Error(ErrorCode::parse, "vertex ids must be dense 0..n-1 in order; found " +
                                              std::to_string(vertices[i].id) + " at position " + std::to_string(i));
        }
        const bool is_input = vertices[i].config.kind == LayerKind::input;
        if (is_input != (i == 0)) {
            throw Error(ErrorCode::parse, "vertex 0, and only vertex 0, must be the input vertex");
        }
        if (vertices[i].config.is_sliding_window()) {
            validate_window_config(vertices[i].config, vname(i));
        }
    }

    const std::size_t n = vertices.size();
    std::sort(links.begin(), links.end());
    for (std::size_t i = 0; i < links.size(); ++i) {
        const Link& l = links[i];
        if (l.from >= n || l.to >= n) {
            throw Error(ErrorCode::unknown_vertex, "link (" + vname(l.from) + ", " + vname(l.to) +
                                                       ") references a missing vertex");
        }
        if (l.from == l.to) {
            throw Error(ErrorCode::cycle, "cycle detected: self-link on " + vname(l.from));
        }
        if (i > 0 && links[i - 1] == l) {
            throw Error(ErrorCode::parse, "duplicate link (" + vname(l.from) + ", " + vname(l.to) + ")");
        }
    }

    DnnGraph g;
    g.element_bytes_ = element_bytes;
    g.preds_.resize(n);
    g.succs_.resize(n);
    g.out_links_.resize(n);
    for (std::size_t i = 0; i < links.size(); ++i) {
        g.succs_[links[i].from].push_back(links[i].to);
        g.preds_[links[i].to].push_back(links[i].from);
        g.out_links_[links[i].from].push_back(i);
    }
    for (auto& p : g.preds_) std::sort(p.begin(), p.end());

    if (!g.preds_[0].empty()) {
        throw Error(ErrorCode::cycle, "input vertex v0 must have in-degree 0");
    }

    // Kahn's algorithm; leftover vertices sit on a cycle.
    std::vector<std::size_t> indeg(n);
    for (std::size_t v = 0; v < n; ++v) indeg[v] = g.preds_[v].size();
    std::priority_queue<VertexId, std::vector<VertexId>, std::greater<>> ready;
    for (std::size_t v = 0; v < n; ++v) {
        if (indeg[v] == 0) ready.push(v);
    }
    while (!ready.empty()) {
        const VertexId v = ready.top();
        ready.pop();
        g.topo_.push_back(v);
        for (VertexId s : g.succs_[v]) {
            if (--indeg[s] == 0) ready.push(s);
        }
    }
    if (g.topo_.size() != n) {
        for (std::size_t v = 0; v < n; ++v) {
            if (indeg[v] != 0) throw Error(ErrorCode::cycle, "cycle detected through " + vname(v));
        }
    }

    std::vector<char> seen(n, 0);
    seen[0] = 1;
    for (VertexId v : g.topo_) {
        if (!seen[v]) continue;
        for (VertexId s : g.succs_[v]) seen[s] = 1;
    }
    for (std::size_t v = 0; v < n; ++v) {
        if (!seen[v]) throw Error(ErrorCode::unreachable, vname(v) + " is not reachable from v0");
    }

    g.vertices_ = std::move(vertices);
    g.links_ = std::move(links);
    return g;
}

const Vertex& DnnGraph::vertex(VertexId v) const {
    if (v >= vertices_.size()) throw Error(ErrorCode::unknown_vertex, "unknown vertex " + vname(v));
    return vertices_[v];
}

std::size_t DnnGraph::link_index(VertexId from, VertexId to) const {
    const Link key{from, to};
    const auto it = std::lower_bound(links_.begin(), links_.end(), key);
    if (it == links_.end() || *it != key) {
        throw Error(ErrorCode::unknown_vertex, "no link (" + vname(from) + ", " + vname(to) + ")");
    }
    return static_cast<std::size_t>(it - links_.begin());
}

std::span<const VertexId> DnnGraph::predecessors(VertexId v) const {
    (void)vertex(v);
    return preds_[v];
}

std::span<const VertexId> DnnGraph::successors(VertexId v) const {
    (void)vertex(v);
    return succs_[v];
}

std::span<const std::size_t> DnnGraph::out_links(VertexId v) const {
    (void)vertex(v);
    return out_links_[v];
}

// ---------------------------------------------------------------------------
// Layering and SIS

GraphLayering longest_distances(const DnnGraph& g) {
    GraphLayering out;
    out.delta.assign(g.size(), 0);
    std::size_t max_delta = 0;
    for (VertexId v : g.topological_order()) {
        std::size_t d = 0;
        for (VertexId p : g.predecessors(v)) d = std::max(d, out.delta[p] + 1);
        out.delta[v] = d;
        max_delta = std::max(max_delta, d);
    }
    out.layers.resize(max_delta + 1);
    for (VertexId v = 0; v < g.size(); ++v) out.layers[out.delta[v]].push_back(v);
    return out;
}

std::vector<VertexId> direct_predecessors(const DnnGraph& g, VertexId v) {
    const auto preds = g.predecessors(v);
    return {preds.begin(), preds.end()};
}

std::vector<VertexId> sis_vertices(const DnnGraph& g, VertexId v, std::span<const VertexId> scope) {
    const auto pv = g.predecessors(v);
    std::vector<VertexId> out;
    for (VertexId u : scope) {
        if (u == v) continue;
        const auto pu = g.predecessors(u);
        if (pu.empty() || pu.size() >= pv.size()) continue;
        if (std::includes(pv.begin(), pv.end(), pu.begin(), pu.end())) out.push_back(u);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shape inference

namespace {

// Spatial dims arriving from the predecessors, when they can be combined.
std::optional<Dims3> upstream_dims(const DnnGraph& g, const std::vector<LayerConfig>& cfgs, VertexId v) {
    const auto preds = g.predecessors(v);
    if (preds.empty()) return std::nullopt;
    std::vector<Dims3> dims;
    for (VertexId p : preds) {
        if (!cfgs[p].output_dims) return std::nullopt;
        dims.push_back(*cfgs[p].output_dims);
    }
    if (dims.size() == 1) return dims.front();
    const LayerKind kind = cfgs[v].kind;
    if (kind == LayerKind::concat) {
        Dims3 out = dims.front();
        out.depth = 0;
        for (const Dims3& d : dims) {
            if (d.width != out.width || d.height != out.height) return std::nullopt;
            out.depth += d.depth;
        }
        return out;
    }
    if (kind == LayerKind::add) {
        for (const Dims3& d : dims) {
            if (d != dims.front()) return std::nullopt;
        }
        return dims.front();
    }
    return std::nullopt;
}

std::int64_t upstream_elements(const DnnGraph& g, const std::vector<LayerConfig>& cfgs, VertexId v) {
    std::int64_t total = 0;
    for (VertexId p : g.predecessors(v)) total += cfgs[p].output_elements;
    return total;
}

void check_positive(const Dims3& d, VertexId v) {
    if (d.width <= 0 || d.height <= 0 || d.depth <= 0) {
        throw Error(ErrorCode::invalid_dimension, vname(v) + ": dimensions must be strictly positive");
    }
}

Dims3 resolve_input_dims(const LayerConfig& cfg, const std::optional<Dims3>& upstream, VertexId v) {
    if (cfg.input_dims && upstream && *cfg.input_dims != *upstream) {
        throw Error(ErrorCode::shape_mismatch, vname(v) + ": declared input dims contradict derived dims");
    }
    if (cfg.input_dims) return *cfg.input_dims;
    if (upstream) return *upstream;
    throw Error(ErrorCode::missing_parameter, vname(v) + ": input dims are neither declared nor derivable");
}

}  // namespace

DnnGraph infer_shapes(const DnnGraph& g, ShapeMode mode) {
    std::vector<LayerConfig> cfgs;
    cfgs.reserve(g.size());
    for (const Vertex& vx : g.vertices()) cfgs.push_back(vx.config);
    const std::int64_t eb = g.element_bytes();

    for (VertexId v : g.topological_order()) {
        LayerConfig& cfg = cfgs[v];
        const auto upstream = upstream_dims(g, cfgs, v);
        switch (cfg.kind) {
            case LayerKind::input: {
                if (cfg.output_dims) {
                    check_positive(*cfg.output_dims, v);
                    cfg.output_elements = cfg.output_dims->elements();
                } else if (cfg.output_elements <= 0 && cfg.output_bytes > 0) {
                    cfg.output_elements = cfg.output_bytes / eb;
                }
                if (cfg.output_bytes <= 0) cfg.output_bytes = cfg.output_elements * eb;
                if (cfg.output_bytes <= 0) {
                    throw Error(ErrorCode::missing_parameter, "v0: raw input size is missing");
                }
                continue;  // the input vertex consumes nothing
            }
            case LayerKind::convolution:
            case LayerKind::pooling: {
                const Dims3 in = resolve_input_dims(cfg, upstream, v);
                check_positive(in, v);
                if (cfg.kind == LayerKind::convolution) {
                    if (cfg.filter->depth == 0) cfg.filter->depth = in.depth;
                    if (cfg.filter->depth != in.depth) {
                        throw Error(ErrorCode::shape_mismatch, vname(v) + ": filter depth differs from input depth");
                    }
                } else {
                    cfg.filter->depth = in.depth;
                    cfg.filter->count = in.depth;
                }
                const Dims3 out = window_output_dims(cfg, in, mode);
                if (cfg.output_dims && *cfg.output_dims != out) {
                    throw Error(ErrorCode::shape_mismatch, vname(v) + ": declared output dims contradict derived dims");
                }
                cfg.input_dims = in;
                cfg.output_dims = out;
                cfg.input_elements = in.elements();
                cfg.output_elements = out.elements();
                break;
            }
            case LayerKind::activation:
            case LayerKind::batch_norm:
            case LayerKind::concat:
            case LayerKind::add: {
                if (cfg.input_dims || upstream) {
                    const Dims3 in = resolve_input_dims(cfg, upstream, v);
                    check_positive(in, v);
                    cfg.input_dims = in;
                    cfg.output_dims = in;
                    cfg.input_elements = in.elements();
                    cfg.output_elements = in.elements();
                } else {
                    const std::int64_t in = upstream_elements(g, cfgs, v);
                    cfg.input_elements = in;
                    cfg.output_elements =
                        cfg.kind == LayerKind::add ? cfgs[g.predecessors(v).front()].output_elements : in;
                }
                break;
            }
            case LayerKind::fully_connected:
            case LayerKind::other: {
                const std::int64_t in = upstream_elements(g, cfgs, v);
                if (cfg.input_elements > 0 && cfg.input_elements != in) {
                    throw Error(ErrorCode::shape_mismatch, vname(v) + ": declared input elements contradict inputs");
                }
                cfg.input_elements = in;
                if (cfg.output_elements <= 0) {
                    if (cfg.kind == LayerKind::fully_connected) {
                        throw Error(ErrorCode::missing_parameter, vname(v) + ": fully-connected output size missing");
                    }
                    cfg.output_elements = in;
                }
                break;
            }
        }
        if (cfg.input_elements <= 0 || cfg.output_elements <= 0) {
            throw Error(ErrorCode::invalid_dimension, vname(v) + ": element counts must be strictly positive");
        }
        cfg.input_bytes = cfg.input_elements * eb;
        cfg.output_bytes = cfg.output_elements * eb;
    }

    DnnGraph out = g;
    for (VertexId v = 0; v < out.size(); ++v) out.vertices_[v].config = std::move(cfgs[v]);
    return out;
}

LayerConfig infer_layer_shape(const LayerConfig& layer, ShapeMode mode, std::int64_t element_bytes) {
    LayerConfig source;
    source.kind = LayerKind::input;
    if (layer.input_dims) {
        source.output_dims = layer.input_dims;
    } else {
        source.output_elements = layer.input_elements;
    }
    if (!layer.input_dims && layer.input_elements <= 0) {
        throw Error(ErrorCode::missing_parameter, "layer input size is missing");
    }
    std::vector<Vertex> vertices{{0, "input", source}, {1, "layer", layer}};
    const DnnGraph g = infer_shapes(DnnGraph::create(std::move(vertices), {{0, 1}}, element_bytes), mode);
    return g.config(1);
}

}  // namespace tiersplit
