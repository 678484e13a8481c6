// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tiersplit {

/// Dense vertex index. Vertex 0 is always the virtual input vertex.
using VertexId = std::size_t;

enum class LayerKind {
    input,
    convolution,
    pooling,
    fully_connected,
    activation,
    batch_norm,
    concat,
    add,
    other,
};

enum class PoolMode { max, average };

/// How a sliding-window output extent that is not an integer is treated.
enum class ShapeMode { exact, floor };

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view text);

struct Dims3 {
    std::int64_t width = 0;
    std::int64_t height = 0;
    std::int64_t depth = 0;

    std::int64_t elements() const { return width * height * depth; }
    std::int64_t area() const { return width * height; }
    auto operator<=>(const Dims3&) const = default;
};

struct Extent2 {
    std::int64_t w = 0;
    std::int64_t h = 0;
    auto operator<=>(const Extent2&) const = default;
};

/// Window of a convolution (depth = input depth, count = number of filters) or
/// of a pooling layer (depth = count = input depth).
struct FilterShape {
    std::int64_t width = 0;
    std::int64_t height = 0;
    std::int64_t depth = 0;
    std::int64_t count = 0;
    auto operator<=>(const FilterShape&) const = default;
};

struct LayerConfig {
    LayerKind kind = LayerKind::other;
    std::string op_name;  // free-form name for LayerKind::other

    std::optional<Dims3> input_dims;
    std::optional<Dims3> output_dims;

    // Sliding-window hyper-parameters; present exactly for convolution/pooling.
    std::optional<FilterShape> filter;
    std::optional<Extent2> stride;
    std::optional<Extent2> padding;
    PoolMode pool_mode = PoolMode::max;

    std::int64_t input_elements = 0;
    std::int64_t output_elements = 0;
    std::int64_t input_bytes = 0;
    std::int64_t output_bytes = 0;

    bool is_sliding_window() const { return kind == LayerKind::convolution || kind == LayerKind::pooling; }
    /// Elementwise layers that leave the feature-map volume unchanged.
    bool is_volume_preserving() const { return kind == LayerKind::activation || kind == LayerKind::batch_norm; }

    bool operator==(const LayerConfig&) const = default;
};

struct Vertex {
    VertexId id = 0;
    std::string name;
    LayerConfig config;

    bool operator==(const Vertex&) const = default;
};

struct Link {
    VertexId from = 0;
    VertexId to = 0;
    auto operator<=>(const Link&) const = default;
};

/// Sliding-window output extent: (in - window + 2 * pad) / stride + 1.
/// Throws non_integral_shape in exact mode when the division is not exact.
std::int64_t window_output_extent(std::int64_t in, std::int64_t window, std::int64_t stride, std::int64_t pad,
                                  ShapeMode mode);

/// Output dims of a convolution or pooling layer with known input dims.
Dims3 window_output_dims(const LayerConfig& cfg, const Dims3& in, ShapeMode mode);

/// Checks the hyper-parameter invariants of a sliding-window layer (presence,
/// positivity, non-negative padding, padding smaller than the window).
void validate_window_config(const LayerConfig& cfg, std::string_view where);

/// An immutable DAG of DNN layers rooted at the virtual input vertex 0.
class DnnGraph {
public:
    /// Validates and builds the graph: ids must be dense 0..n-1 in order, vertex
    /// 0 must be the input vertex, links must be unique, non-self and acyclic,
    /// and every vertex must be reachable from vertex 0.
    static DnnGraph create(std::vector<Vertex> vertices, std::vector<Link> links, std::int64_t element_bytes = 4);

    std::size_t size() const { return vertices_.size(); }
    std::int64_t element_bytes() const { return element_bytes_; }

    const Vertex& vertex(VertexId v) const;
    const LayerConfig& config(VertexId v) const { return vertex(v).config; }
    std::span<const Vertex> vertices() const { return vertices_; }

    /// Links sorted by (from, to).
    std::span<const Link> links() const { return links_; }
    /// Index into links() of the link (from, to); throws unknown_vertex if absent.
    std::size_t link_index(VertexId from, VertexId to) const;

    /// Sorted direct predecessors / successors.
    std::span<const VertexId> predecessors(VertexId v) const;
    std::span<const VertexId> successors(VertexId v) const;
    /// Indices into links() of the out-links of v, ordered by successor id.
    std::span<const std::size_t> out_links(VertexId v) const;

    /// A topological order (Kahn's algorithm, smallest ready id first).
    std::span<const VertexId> topological_order() const { return topo_; }

    bool operator==(const DnnGraph& other) const {
        return element_bytes_ == other.element_bytes_ && vertices_ == other.vertices_ && links_ == other.links_;
    }

private:
    friend DnnGraph infer_shapes(const DnnGraph& g, ShapeMode mode);

    std::vector<Vertex> vertices_;
    std::vector<Link> links_;
    std::vector<std::vector<VertexId>> preds_;
    std::vector<std::vector<VertexId>> succs_;
    std::vector<std::vector<std::size_t>> out_links_;
    std::vector<VertexId> topo_;
    std::int64_t element_bytes_ = 4;
};

/// Longest distance from the input vertex plus the induced graph layers.
struct GraphLayering {
    std::vector<std::size_t> delta;
    std::vector<std::vector<VertexId>> layers;  // each layer sorted by id
};

/// One topological pass: delta(0) = 0, delta(v) = 1 + max over predecessors.
GraphLayering longest_distances(const DnnGraph& g);

/// Throws unknown_vertex for ids outside the graph.
std::vector<VertexId> direct_predecessors(const DnnGraph& g, VertexId v);

/// Vertices u in scope (u != v) whose predecessor set is a strict, non-empty
/// subset of v's predecessor set.
std::vector<VertexId> sis_vertices(const DnnGraph& g, VertexId v, std::span<const VertexId> scope);

/// Propagates tensor shapes in topological order, filling derivable input/output
/// dims, element counts and byte sizes. Declared dims that contradict derived
/// dims raise shape_mismatch. Applying it twice yields the same graph.
DnnGraph infer_shapes(const DnnGraph& g, ShapeMode mode = ShapeMode::exact);

/// Completes a lone layer config as if it were fed directly by an input of
/// its declared input_dims (or input_elements).
LayerConfig infer_layer_shape(const LayerConfig& layer, ShapeMode mode = ShapeMode::exact,
                              std::int64_t element_bytes = 4);

}  // namespace tiersplit
