// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tiersplit/error.hpp"
#include "tiersplit/graph.hpp"
#include "tiersplit/tensor.hpp"
#include "tiersplit/tiler.hpp"

namespace tiersplit {

/// `count` filters of width x height x depth plus one bias per filter.
/// Weight layout: ((f * depth + d) * height + fy) * width + fx.
template <class T>
struct FilterBank {
    FilterShape shape;
    std::vector<T> weights;
    std::vector<T> bias;

    const T& weight(std::int64_t f, std::int64_t d, std::int64_t fy, std::int64_t fx) const {
        return weights[static_cast<std::size_t>(((f * shape.depth + d) * shape.height + fy) * shape.width + fx)];
    }
    bool operator==(const FilterBank&) const = default;
};

/// Per-side zero padding. Whole-tensor layers pad symmetrically; tile crops
/// only pad the sides that touch the true border.
struct Padding4 {
    std::int64_t left = 0;
    std::int64_t right = 0;
    std::int64_t top = 0;
    std::int64_t bottom = 0;

    static Padding4 symmetric(Extent2 p) { return {p.w, p.w, p.h, p.h}; }
    bool operator==(const Padding4&) const = default;
};

namespace detail {

inline std::int64_t padded_extent(std::int64_t in, std::int64_t lo, std::int64_t hi, std::int64_t window,
                                  std::int64_t stride, ShapeMode mode) {
    const std::int64_t span = in + lo + hi - window;
    if (in <= 0 || window <= 0 || stride <= 0 || lo < 0 || hi < 0 || span < 0) {
        throw Error(ErrorCode::shape_mismatch, "window " + std::to_string(window) + " does not fit input " +
                                                   std::to_string(in) + " with padding " + std::to_string(lo) + "+" +
                                                   std::to_string(hi));
    }
    if (mode == ShapeMode::exact && span % stride != 0) {
        throw Error(ErrorCode::non_integral_shape, "window placement is not integral for input " + std::to_string(in));
    }
    return span / stride + 1;
}

}  // namespace detail

/// Direct convolution. Each output entry accumulates depth-major, then row,
/// then column, skipping padding taps, and adds the bias last.
template <class T>
Tensor3<T> conv2d(const Tensor3<T>& in, const FilterBank<T>& bank, Extent2 stride, Padding4 pad,
                  ShapeMode mode = ShapeMode::exact) {
    const FilterShape& f = bank.shape;
    if (f.depth != in.depth()) throw Error(ErrorCode::shape_mismatch, "filter depth differs from input depth");
    if (f.count < 1 || static_cast<std::int64_t>(bank.weights.size()) != f.width * f.height * f.depth * f.count ||
        static_cast<std::int64_t>(bank.bias.size()) != f.count) {
        throw Error(ErrorCode::shape_mismatch, "filter bank sizes are inconsistent");
    }
    const std::int64_t ow = detail::padded_extent(in.width(), pad.left, pad.right, f.width, stride.w, mode);
    const std::int64_t oh = detail::padded_extent(in.height(), pad.top, pad.bottom, f.height, stride.h, mode);
    Tensor3<T> out(Dims3{ow, oh, f.count});
    for (std::int64_t k = 0; k < f.count; ++k) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                T acc{};
                for (std::int64_t d = 0; d < f.depth; ++d) {
                    for (std::int64_t fy = 0; fy < f.height; ++fy) {
                        const std::int64_t y = oy * stride.h + fy - pad.top;
                        if (y < 0 || y >= in.height()) continue;
                        for (std::int64_t fx = 0; fx < f.width; ++fx) {
                            const std::int64_t x = ox * stride.w + fx - pad.left;
                            if (x < 0 || x >= in.width()) continue;
                            acc += bank.weight(k, d, fy, fx) * in.at(x, y, d);
                        }
                    }
                }
                out.at(ox, oy, k) = acc + bank.bias[static_cast<std::size_t>(k)];
            }
        }
    }
    return out;
}

template <class T>
Tensor3<T> conv2d(const Tensor3<T>& in, const FilterBank<T>& bank, Extent2 stride, Extent2 padding,
                  ShapeMode mode = ShapeMode::exact) {
    return conv2d(in, bank, stride, Padding4::symmetric(padding), mode);
}

/// Max pooling ignores padding; average pooling divides by the number of
/// in-bounds taps (integer types truncate).
template <class T>
Tensor3<T> pool2d(const Tensor3<T>& in, Extent2 window, Extent2 stride, Padding4 pad, PoolMode pool,
                  ShapeMode mode = ShapeMode::exact) {
    const std::int64_t ow = detail::padded_extent(in.width(), pad.left, pad.right, window.w, stride.w, mode);
    const std::int64_t oh = detail::padded_extent(in.height(), pad.top, pad.bottom, window.h, stride.h, mode);
    Tensor3<T> out(Dims3{ow, oh, in.depth()});
    for (std::int64_t d = 0; d < in.depth(); ++d) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                T acc{};
                std::int64_t taps = 0;
                for (std::int64_t fy = 0; fy < window.h; ++fy) {
                    const std::int64_t y = oy * stride.h + fy - pad.top;
                    if (y < 0 || y >= in.height()) continue;
                    for (std::int64_t fx = 0; fx < window.w; ++fx) {
                        const std::int64_t x = ox * stride.w + fx - pad.left;
                        if (x < 0 || x >= in.width()) continue;
                        const T v = in.at(x, y, d);
                        if (pool == PoolMode::max) {
                            acc = taps == 0 ? v : std::max(acc, v);
                        } else {
                            acc += v;
                        }
                        ++taps;
                    }
                }
                if (taps == 0) throw Error(ErrorCode::shape_mismatch, "pooling window covers only padding");
                out.at(ox, oy, d) = pool == PoolMode::max ? acc : acc / static_cast<T>(taps);
            }
        }
    }
    return out;
}

template <class T>
Tensor3<T> pool2d(const Tensor3<T>& in, Extent2 window, Extent2 stride, Extent2 padding, PoolMode pool,
                  ShapeMode mode = ShapeMode::exact) {
    return pool2d(in, window, stride, Padding4::symmetric(padding), pool, mode);
}

/// A stack layer with its parameters: a filter bank for convolutions,
/// per-channel scale and shift for batch-norm. Activations are ReLU.
template <class T>
struct StackLayer {
    LayerConfig config;
    FilterBank<T> bank;
    std::vector<T> scale;
    std::vector<T> shift;
};

template <class T>
Tensor3<T> apply_layer(const StackLayer<T>& layer, Tensor3<T> in, Padding4 pad, ShapeMode mode = ShapeMode::exact) {
    const LayerConfig& cfg = layer.config;
    switch (cfg.kind) {
        case LayerKind::convolution: return conv2d(in, layer.bank, *cfg.stride, pad, mode);
        case LayerKind::pooling:
            return pool2d(in, Extent2{cfg.filter->width, cfg.filter->height}, *cfg.stride, pad, cfg.pool_mode, mode);
        case LayerKind::activation:
            for (T& v : in.values()) v = v < T{} ? T{} : v;
            return in;
        case LayerKind::batch_norm: {
            if (static_cast<std::int64_t>(layer.scale.size()) != in.depth() ||
                static_cast<std::int64_t>(layer.shift.size()) != in.depth()) {
                throw Error(ErrorCode::shape_mismatch, "batch-norm parameters do not match the input depth");
            }
            for (std::int64_t d = 0; d < in.depth(); ++d) {
                const T s = layer.scale[static_cast<std::size_t>(d)];
                const T b = layer.shift[static_cast<std::size_t>(d)];
                for (std::int64_t y = 0; y < in.height(); ++y) {
                    for (std::int64_t x = 0; x < in.width(); ++x) in.at(x, y, d) = in.at(x, y, d) * s + b;
                }
            }
            return in;
        }
        default:
            throw Error(ErrorCode::invalid_scenario,
                        std::string(to_string(cfg.kind)) + " layers cannot be executed by the reference engine");
    }
}

/// Applies the layers in order to the whole input.
template <class T>
Tensor3<T> run_stack(std::span<const StackLayer<T>> layers, const Tensor3<T>& input, ShapeMode mode = ShapeMode::exact) {
    if (!layers.empty() && layers.front().config.input_dims && *layers.front().config.input_dims != input.dims()) {
        throw Error(ErrorCode::shape_mismatch, "input dims differ from the first layer's input dims");
    }
    Tensor3<T> t = input;
    for (const StackLayer<T>& layer : layers) {
        const Padding4 pad =
            layer.config.is_sliding_window() ? Padding4::symmetric(*layer.config.padding) : Padding4{};
        t = apply_layer(layer, std::move(t), pad, mode);
    }
    return t;
}

namespace detail {

/// Zeroes every entry of `t` (which covers `tile` of a level with `dims`) that
/// falls outside cell (a, b)'s proportional share of that level.
template <class T>
void zero_outside_share(Tensor3<T>& t, const Tile& tile, const Dims3& dims, GridSize grid, std::int64_t a,
                        std::int64_t b) {
    const std::int64_t x0 = a * dims.width / grid.a;
    const std::int64_t x1 = (a + 1) * dims.width / grid.a;
    const std::int64_t y0 = b * dims.height / grid.b;
    const std::int64_t y1 = (b + 1) * dims.height / grid.b;
    for (std::int64_t d = 0; d < t.depth(); ++d) {
        for (std::int64_t y = 0; y < t.height(); ++y) {
            for (std::int64_t x = 0; x < t.width(); ++x) {
                const std::int64_t gx = tile.alpha.x + x;
                const std::int64_t gy = tile.alpha.y + y;
                if (gx < x0 || gx >= x1 || gy < y0 || gy >= y1) t.at(x, y, d) = T{};
            }
        }
    }
}

inline bool same_hyper_parameters(const LayerConfig& a, const LayerConfig& b) {
    return a.kind == b.kind && a.filter == b.filter && a.stride == b.stride && a.padding == b.padding &&
           (a.kind != LayerKind::pooling || a.pool_mode == b.pool_mode);
}

}  // namespace detail

/// Executes every cell's fused stack on its own input crop and stitches the
/// results. Crop sides that touch the true border get the layer's padding;
/// interior sides get none because the crop already holds the neighbours.
/// With `zero_interior_halo` each cell sees only its own share of every level
/// and the neighbours' entries are replaced by zeros.
template <class T>
Tensor3<T> run_tiled(const TilePlan& plan, std::span<const StackLayer<T>> layers, const Tensor3<T>& input,
                     bool zero_interior_halo = false) {
    if (plan.depth() != layers.size()) throw Error(ErrorCode::shape_mismatch, "plan and parameters differ in depth");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (!detail::same_hyper_parameters(plan.layers[i], layers[i].config)) {
            throw Error(ErrorCode::shape_mismatch, "plan and parameters differ at layer " + std::to_string(i));
        }
    }
    if (input.dims() != plan.level_dims(0)) throw Error(ErrorCode::shape_mismatch, "input does not match the plan");

    std::map<std::pair<std::int64_t, std::int64_t>, Tensor3<T>> outputs;
    for (const FusedTileStack& cell : plan.cells) {
        Tensor3<T> t = crop(input, cell.tiles[0]);
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (zero_interior_halo) {
                detail::zero_outside_share(t, cell.tiles[i], plan.level_dims(i), plan.grid, cell.a, cell.b);
            }
            const LayerConfig& cfg = plan.layers[i];
            Padding4 pad;
            if (cfg.is_sliding_window()) {
                const PaddedTile p = rtc_padded(cfg, cell.tiles[i + 1]);
                const Tile& in = cell.tiles[i];
                pad.left = in.alpha.x - (p.alpha.x - cfg.padding->w);
                pad.top = in.alpha.y - (p.alpha.y - cfg.padding->h);
                pad.right = (p.beta.x - cfg.padding->w) - in.beta.x;
                pad.bottom = (p.beta.y - cfg.padding->h) - in.beta.y;
            }
            t = apply_layer(layers[i], std::move(t), pad, ShapeMode::exact);
        }
        const Tile& out = cell.output_tile();
        if (t.width() != out.width() || t.height() != out.height()) {
            throw Error(ErrorCode::shape_mismatch, "cell output does not match its tile");
        }
        outputs.emplace(std::pair{cell.a, cell.b}, std::move(t));
    }
    return stitch(outputs, plan);
}

}  // namespace tiersplit
