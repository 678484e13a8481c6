// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tiersplit/error.hpp"
#include "tiersplit/graph.hpp"
#include "tiersplit/tensor.hpp"

namespace tiersplit {

struct Point2 {
    std::int64_t x = 0;
    std::int64_t y = 0;
    auto operator<=>(const Point2&) const = default;
};

/// Half-open rectangle [alpha.x, beta.x) x [alpha.y, beta.y) on the input
/// feature map of stack layer `layer` (layer k is the stack output).
struct Tile {
    Point2 alpha;
    Point2 beta;
    std::size_t layer = 0;

    std::int64_t width() const { return beta.x - alpha.x; }
    std::int64_t height() const { return beta.y - alpha.y; }
    std::int64_t area() const { return width() * height(); }
    bool empty() const { return width() <= 0 || height() <= 0; }
    bool contains(const Tile& other) const {
        return alpha.x <= other.alpha.x && alpha.y <= other.alpha.y && beta.x >= other.beta.x &&
               beta.y >= other.beta.y;
    }
    bool operator==(const Tile&) const = default;
};

/// A tile expressed in the padded coordinate frame of the previous layer,
/// before the padding is stripped. Coordinates may exceed the unpadded map.
struct PaddedTile {
    Point2 alpha;
    Point2 beta;
    bool operator==(const PaddedTile&) const = default;
};

/// Grid splitting the stack output: `a` blocks along x, `b` blocks along y.
struct GridSize {
    std::int64_t a = 1;
    std::int64_t b = 1;
    std::int64_t cells() const { return a * b; }
    bool operator==(const GridSize&) const = default;
};

/// One grid cell: tiles[i] is the region of layer i's input the cell needs;
/// tiles.back() is the cell's disjoint share of the stack output.
struct FusedTileStack {
    std::int64_t a = 0;
    std::int64_t b = 0;
    std::vector<Tile> tiles;

    const Tile& input_crop() const { return tiles.front(); }
    const Tile& output_tile() const { return tiles.back(); }
    bool operator==(const FusedTileStack&) const = default;
};

struct TilePlan {
    GridSize grid;
    std::vector<LayerConfig> layers;   // shape-complete configs c_1..c_k
    std::vector<FusedTileStack> cells;  // ordered by b, then a

    std::size_t depth() const { return layers.size(); }
    const FusedTileStack& cell(std::int64_t a, std::int64_t b) const;
    /// Dims of stack level i: the input of layer i, or the stack output for i = k.
    Dims3 level_dims(std::size_t i) const;
    bool operator==(const TilePlan&) const = default;
};

/// Output dims of a stack layer (sliding-window extent or pass-through).
/// The layer's input_dims must be set.
Dims3 layer_output_dims(const LayerConfig& cfg, ShapeMode mode = ShapeMode::exact);

/// Window coordinates in the padded input frame covering `out` (a tile of cfg's output).
PaddedTile rtc_padded(const LayerConfig& cfg, const Tile& out);

/// Region of cfg's unpadded input needed to compute tile `out` of its output.
/// Pass-through layers map a tile onto itself.
Tile rtc(const LayerConfig& cfg, const Tile& out);

/// Block boundaries for splitting `extent` into `parts` contiguous runs of
/// floor(extent / parts), the last run taking the remainder. Size parts + 1.
std::vector<std::int64_t> split_axis(std::int64_t extent, std::int64_t parts);

/// Completes the stack's shapes and chains reverse tile calculation from the
/// output grid down to the stack input for every cell.
TilePlan plan_tiles(std::span<const LayerConfig> stack, GridSize grid, ShapeMode mode = ShapeMode::exact);

struct LevelOverlap {
    std::size_t level = 0;
    std::int64_t tile_area_sum = 0;
    std::int64_t level_area = 0;
    std::int64_t redundant_elements = 0;  // (tile_area_sum - level_area) * depth
    double factor = 1.0;                  // tile_area_sum / level_area
};

struct OverlapReport {
    std::vector<LevelOverlap> levels;  // one per level 0..k
    std::int64_t total_redundant_elements = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> crop_sizes;  // per cell: input crop width, height
};

OverlapReport overlap_stats(const TilePlan& plan);

/// Places every cell's output tile at its coordinates in the stack output.
template <class T>
Tensor3<T> stitch(const std::map<std::pair<std::int64_t, std::int64_t>, Tensor3<T>>& outputs, const TilePlan& plan) {
    const Dims3 dims = plan.level_dims(plan.depth());
    Tensor3<T> whole(dims);
    for (const FusedTileStack& cell : plan.cells) {
        auto it = outputs.find({cell.a, cell.b});
        if (it == outputs.end()) {
            throw Error(ErrorCode::invalid_tile,
                        "missing output for cell (" + std::to_string(cell.a) + "," + std::to_string(cell.b) + ")");
        }
        const Tile& t = cell.output_tile();
        const Tensor3<T>& part = it->second;
        if (part.width() != t.width() || part.height() != t.height() || part.depth() != dims.depth) {
            throw Error(ErrorCode::shape_mismatch,
                        "output of cell (" + std::to_string(cell.a) + "," + std::to_string(cell.b) +
                            ") does not match its tile");
        }
        for (std::int64_t d = 0; d < dims.depth; ++d) {
            for (std::int64_t y = 0; y < t.height(); ++y) {
                for (std::int64_t x = 0; x < t.width(); ++x) whole.at(t.alpha.x + x, t.alpha.y + y, d) = part.at(x, y, d);
            }
        }
    }
    return whole;
}

/// Copies the tile's rectangle across all channels.
template <class T>
Tensor3<T> crop(const Tensor3<T>& in, const Tile& t) {
    if (t.alpha.x < 0 || t.alpha.y < 0 || t.beta.x > in.width() || t.beta.y > in.height() || t.empty()) {
        throw Error(ErrorCode::invalid_tile, "crop outside the tensor");
    }
    Tensor3<T> out(Dims3{t.width(), t.height(), in.depth()});
    for (std::int64_t d = 0; d < in.depth(); ++d) {
        for (std::int64_t y = 0; y < t.height(); ++y) {
            for (std::int64_t x = 0; x < t.width(); ++x) out.at(x, y, d) = in.at(t.alpha.x + x, t.alpha.y + y, d);
        }
    }
    return out;
}

}  // namespace tiersplit
