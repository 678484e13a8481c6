// SPDX-License-Identifier: Apache-2.0

#include "tiersplit/tiler.hpp"

#include <algorithm>

namespace tiersplit {

namespace {

std::string show(const Tile& t) {
    return "[" + std::to_string(t.alpha.x) + "," + std::to_string(t.beta.x) + ")x[" + std::to_string(t.alpha.y) + "," +
           std::to_string(t.beta.y) + ")";
}

Dims3 known_output_dims(const LayerConfig& cfg) {
    if (cfg.output_dims) return *cfg.output_dims;
    return layer_output_dims(cfg);
}

void check_output_tile(const LayerConfig& cfg, const Tile& out) {
    const Dims3 dims = known_output_dims(cfg);
    if (out.empty()) throw Error(ErrorCode::invalid_tile, "degenerate tile " + show(out));
    if (out.alpha.x < 0 || out.alpha.y < 0 || out.beta.x > dims.width || out.beta.y > dims.height) {
        throw Error(ErrorCode::invalid_tile, "tile " + show(out) + " lies outside the " + std::to_string(dims.width) +
                                                 "x" + std::to_string(dims.height) + " output");
    }
}

}  // namespace

const FusedTileStack& TilePlan::cell(std::int64_t a, std::int64_t b) const {
    if (a < 0 || b < 0 || a >= grid.a || b >= grid.b) {
        throw Error(ErrorCode::invalid_tile, "cell (" + std::to_string(a) + "," + std::to_string(b) + ") is off the grid");
    }
    return cells.at(static_cast<std::size_t>(b * grid.a + a));
}

Dims3 TilePlan::level_dims(std::size_t i) const {
    if (layers.empty()) throw Error(ErrorCode::invalid_scenario, "empty layer stack");
    if (i < layers.size()) return *layers[i].input_dims;
    return *layers.back().output_dims;
}

Dims3 layer_output_dims(const LayerConfig& cfg, ShapeMode mode) {
    if (!cfg.input_dims) throw Error(ErrorCode::missing_parameter, "stack layer has no input dims");
    if (cfg.is_sliding_window()) return window_output_dims(cfg, *cfg.input_dims, mode);
    if (cfg.is_volume_preserving()) return *cfg.input_dims;
    throw Error(ErrorCode::invalid_scenario,
                std::string(to_string(cfg.kind)) + " layers cannot be part of a fused tile stack");
}

PaddedTile rtc_padded(const LayerConfig& cfg, const Tile& out) {
    check_output_tile(cfg, out);
    if (!cfg.is_sliding_window()) return {out.alpha, out.beta};
    const FilterShape& f = *cfg.filter;
    const Extent2& s = *cfg.stride;
    return {{s.w * out.alpha.x, s.h * out.alpha.y}, {s.w * (out.beta.x - 1) + f.width, s.h * (out.beta.y - 1) + f.height}};
}

Tile rtc(const LayerConfig& cfg, const Tile& out) {
    const PaddedTile p = rtc_padded(cfg, out);
    Tile in;
    in.layer = out.layer > 0 ? out.layer - 1 : 0;
    if (!cfg.is_sliding_window()) {
        in.alpha = p.alpha;
        in.beta = p.beta;
        return in;
    }
    const Dims3& dims = *cfg.input_dims;
    const Extent2& pad = *cfg.padding;
    in.alpha = {std::max<std::int64_t>(0, p.alpha.x - pad.w), std::max<std::int64_t>(0, p.alpha.y - pad.h)};
    in.beta = {std::min(dims.width, p.beta.x - pad.w), std::min(dims.height, p.beta.y - pad.h)};
    if (in.width() <= 0) throw Error(ErrorCode::invalid_tile, "tile " + show(out) + " maps to an empty x range");
    if (in.height() <= 0) throw Error(ErrorCode::invalid_tile, "tile " + show(out) + " maps to an empty y range");
    return in;
}

std::vector<std::int64_t> split_axis(std::int64_t extent, std::int64_t parts) {
    if (parts < 1) throw Error(ErrorCode::invalid_dimension, "grid dimensions must be at least 1");
    if (parts > extent) {
        throw Error(ErrorCode::grid_too_fine,
                    "cannot split " + std::to_string(extent) + " entries into " + std::to_string(parts) + " tiles");
    }
    std::vector<std::int64_t> bounds(static_cast<std::size_t>(parts) + 1);
    const std::int64_t block = extent / parts;
    for (std::int64_t i = 0; i < parts; ++i) bounds[static_cast<std::size_t>(i)] = i * block;
    bounds.back() = extent;
    return bounds;
}

TilePlan plan_tiles(std::span<const LayerConfig> stack, GridSize grid, ShapeMode mode) {
    if (stack.empty()) throw Error(ErrorCode::invalid_scenario, "empty layer stack");
    if (!stack.front().input_dims) throw Error(ErrorCode::missing_parameter, "first stack layer has no input dims");

    TilePlan plan;
    plan.grid = grid;
    for (std::size_t i = 0; i < stack.size(); ++i) {
        LayerConfig cfg = stack[i];
        if (!cfg.is_sliding_window() && !cfg.is_volume_preserving()) {
            throw Error(ErrorCode::invalid_scenario, "stack layer " + std::to_string(i) + " (" +
                                                         std::string(to_string(cfg.kind)) + ") is not spatial");
        }
        if (i > 0) {
            const Dims3 prev = *plan.layers.back().output_dims;
            if (cfg.input_dims && *cfg.input_dims != prev) {
                throw Error(ErrorCode::shape_mismatch, "stack layer " + std::to_string(i) +
                                                           " input dims differ from the previous layer's output");
            }
            cfg.input_dims = prev;
        }
        plan.layers.push_back(infer_layer_shape(cfg, mode));
    }

    const Dims3 out = plan.level_dims(plan.depth());
    if (grid.a < 1 || grid.b < 1) throw Error(ErrorCode::invalid_dimension, "grid dimensions must be at least 1");
    if (grid.a > out.width || grid.b > out.height) {
        throw Error(ErrorCode::grid_too_fine, "grid " + std::to_string(grid.a) + "x" + std::to_string(grid.b) +
                                                  " is finer than the " + std::to_string(out.width) + "x" +
                                                  std::to_string(out.height) + " stack output");
    }
    const auto xs = split_axis(out.width, grid.a);
    const auto ys = split_axis(out.height, grid.b);
    const std::size_t k = plan.depth();
    for (std::int64_t b = 0; b < grid.b; ++b) {
        for (std::int64_t a = 0; a < grid.a; ++a) {
            FusedTileStack cell{a, b, std::vector<Tile>(k + 1)};
            const auto ua = static_cast<std::size_t>(a);
            const auto ub = static_cast<std::size_t>(b);
            cell.tiles[k] = Tile{{xs[ua], ys[ub]}, {xs[ua + 1], ys[ub + 1]}, k};
            for (std::size_t i = k; i-- > 0;) cell.tiles[i] = rtc(plan.layers[i], cell.tiles[i + 1]);
            plan.cells.push_back(std::move(cell));
        }
    }
    return plan;
}

OverlapReport overlap_stats(const TilePlan& plan) {
    OverlapReport report;
    for (std::size_t i = 0; i <= plan.depth(); ++i) {
        const Dims3 dims = plan.level_dims(i);
        LevelOverlap lv;
        lv.level = i;
        lv.level_area = dims.area();
        for (const FusedTileStack& cell : plan.cells) lv.tile_area_sum += cell.tiles[i].area();
        lv.redundant_elements = (lv.tile_area_sum - lv.level_area) * dims.depth;
        lv.factor = static_cast<double>(lv.tile_area_sum) / static_cast<double>(lv.level_area);
        report.total_redundant_elements += lv.redundant_elements;
        report.levels.push_back(lv);
    }
    for (const FusedTileStack& cell : plan.cells) {
        report.crop_sizes.emplace_back(cell.input_crop().width(), cell.input_crop().height());
    }
    return report;
}

}  // namespace tiersplit
