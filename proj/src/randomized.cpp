// SPDX-License-Identifier: Apache-2.0

#include "tiersplit/randomized.hpp"

#include <algorithm>
#include <set>

namespace tiersplit {

namespace {

std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

struct AxisWindow {
    std::int64_t window = 1;
    std::int64_t stride = 1;
    std::int64_t pad = 0;
};

// Draws window, stride and padding for one axis such that the output extent
// is an exact, positive integer. Falls back to the identity window.
AxisWindow draw_axis(Rng& rng, std::int64_t in, std::int64_t max_window, std::int64_t max_stride,
                     std::int64_t max_padding, bool allow_skipping) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        AxisWindow a;
        a.window = uniform_int(rng, 1, max_window);
        a.stride = uniform_int(rng, 1, allow_skipping ? max_stride : std::min(max_stride, a.window));
        a.pad = uniform_int(rng, 0, std::min(max_padding, a.window - 1));
        const std::int64_t span = in - a.window + 2 * a.pad;
        if (span >= 0 && span % a.stride == 0) return a;
    }
    return {};
}

}  // namespace

DnnGraph random_dag(Rng& rng, const RandomDagOptions& options) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(options.min_vertices),
                                                        static_cast<std::int64_t>(options.max_vertices)));
    std::vector<Vertex> vertices;
    std::vector<Link> links;
    Vertex v0{0, "input", {}};
    v0.config.kind = LayerKind::input;
    v0.config.output_elements = uniform_int(rng, 1, options.max_elements);
    vertices.push_back(v0);
    for (VertexId v = 1; v < n; ++v) {
        Vertex vx{v, "v" + std::to_string(v), {}};
        vx.config.kind = LayerKind::other;
        vx.config.op_name = "synthetic";
        vx.config.output_elements = uniform_int(rng, 1, options.max_elements);
        vertices.push_back(std::move(vx));
        const auto max_preds = static_cast<std::int64_t>(std::min<std::size_t>(options.max_predecessors, v));
        const auto count = uniform_int(rng, 1, max_preds);
        std::set<VertexId> preds;
        while (static_cast<std::int64_t>(preds.size()) < count) {
            preds.insert(static_cast<VertexId>(uniform_int(rng, 0, static_cast<std::int64_t>(v) - 1)));
        }
        for (VertexId p : preds) links.push_back({p, v});
    }
    return infer_shapes(DnnGraph::create(std::move(vertices), std::move(links)));
}

BandwidthConfig random_bandwidth(Rng& rng, const RandomWeightOptions& options) {
    auto draw = [&] { return uniform_real(rng, options.min_mbps, options.max_mbps) * 1e6; };
    BandwidthConfig bw;
    bw.sigma_de = draw();
    bw.sigma_ec = draw();
    bw.sigma_dc = draw();
    return bw;
}

WeightedGraph random_weights(Rng& rng, const DnnGraph& g, const RandomWeightOptions& options) {
    ProfileTable profile;
    profile.times.resize(g.size());
    profile.times[0] = TierTimes{};
    for (VertexId v = 1; v < g.size(); ++v) {
        TierTimes t;
        for (double& s : t.seconds) s = uniform_real(rng, options.min_seconds, options.max_seconds);
        if (options.monotone) std::sort(t.seconds.begin(), t.seconds.end(), std::greater<>());
        profile.times[v] = t;
    }
    return weight_graph(g, profile, random_bandwidth(rng, options));
}

WeightedGraph with_times(const WeightedGraph& wg, std::vector<TierTimes> times) {
    ProfileTable profile;
    for (const TierTimes& t : times) profile.times.emplace_back(t);
    return weight_graph(wg.graph, profile, wg.bandwidth);
}

std::vector<LayerConfig> random_stack(Rng& rng, const RandomStackOptions& options) {
    const auto k = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(options.min_layers),
                                                        static_cast<std::int64_t>(options.max_layers)));
    std::vector<LayerKind> kinds;
    for (std::size_t i = 0; i < k; ++i) {
        const auto pick = uniform_int(rng, 0, 9);
        kinds.push_back(pick < 5   ? LayerKind::convolution
                        : pick < 7 ? LayerKind::pooling
                        : pick < 9 ? LayerKind::activation
                                   : LayerKind::batch_norm);
    }
    if (std::none_of(kinds.begin(), kinds.end(), [](LayerKind kd) {
            return kd == LayerKind::convolution || kd == LayerKind::pooling;
        })) {
        kinds.front() = LayerKind::convolution;
    }

    Dims3 dims{uniform_int(rng, 1, options.max_extent), uniform_int(rng, 1, options.max_extent),
               uniform_int(rng, 1, options.max_channels)};
    std::vector<LayerConfig> stack;
    for (LayerKind kind : kinds) {
        LayerConfig cfg;
        cfg.kind = kind;
        cfg.input_dims = dims;
        if (cfg.is_sliding_window()) {
            const AxisWindow x = draw_axis(rng, dims.width, options.max_window, options.max_stride, options.max_padding,
                                            options.allow_skipping);
            const AxisWindow y = draw_axis(rng, dims.height, options.max_window, options.max_stride, options.max_padding,
                                            options.allow_skipping);
            const std::int64_t count = kind == LayerKind::convolution ? uniform_int(rng, 1, options.max_channels) : 0;
            cfg.filter = FilterShape{x.window, y.window, kind == LayerKind::convolution ? dims.depth : 0, count};
            cfg.stride = Extent2{x.stride, y.stride};
            cfg.padding = Extent2{x.pad, y.pad};
            if (kind == LayerKind::pooling) cfg.pool_mode = uniform_int(rng, 0, 1) == 0 ? PoolMode::max : PoolMode::average;
        }
        stack.push_back(infer_layer_shape(cfg));
        dims = *stack.back().output_dims;
    }
    return stack;
}

GridSize random_grid(Rng& rng, const Dims3& output, std::int64_t max_cells) {
    return {uniform_int(rng, 1, std::min(max_cells, output.width)), uniform_int(rng, 1, std::min(max_cells, output.height))};
}

LayerConfig random_window_layer(Rng& rng, std::int64_t max_extent, std::int64_t max_window, std::int64_t max_stride,
                                std::int64_t max_padding) {
    for (;;) {
        LayerConfig cfg;
        cfg.kind = uniform_int(rng, 0, 1) == 0 ? LayerKind::convolution : LayerKind::pooling;
        const Dims3 in{uniform_int(rng, 1, max_extent), uniform_int(rng, 1, max_extent), uniform_int(rng, 1, 2)};
        cfg.input_dims = in;
        const std::int64_t fw = uniform_int(rng, 1, max_window);
        const std::int64_t fh = uniform_int(rng, 1, max_window);
        cfg.filter = FilterShape{fw, fh, cfg.kind == LayerKind::convolution ? in.depth : 0,
                                 cfg.kind == LayerKind::convolution ? 1 : 0};
        cfg.stride = Extent2{uniform_int(rng, 1, max_stride), uniform_int(rng, 1, max_stride)};
        cfg.padding = Extent2{uniform_int(rng, 0, std::min(max_padding, fw - 1)),
                              uniform_int(rng, 0, std::min(max_padding, fh - 1))};
        // Floor mode keeps configurations whose last stride step overshoots.
        if (in.width + 2 * cfg.padding->w < fw || in.height + 2 * cfg.padding->h < fh) continue;
        return infer_layer_shape(cfg, ShapeMode::floor);
    }
}

}  // namespace tiersplit
