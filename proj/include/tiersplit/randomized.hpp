// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tiersplit/conv.hpp"
#include "tiersplit/graph.hpp"
#include "tiersplit/latency_model.hpp"
#include "tiersplit/tiler.hpp"

namespace tiersplit {

/// Generators for randomized harnesses. All draw from a caller-owned engine so
/// a fixed seed reproduces the whole run.
using Rng = std::mt19937_64;

inline constexpr std::uint64_t kDefaultSeed = 20240611;

struct RandomDagOptions {
    std::size_t min_vertices = 2;  // including the input vertex
    std::size_t max_vertices = 12;
    std::size_t max_predecessors = 3;
    std::int64_t max_elements = 4096;
};

/// Random DAG of "other" layers. Vertex i > 0 draws its predecessors from
/// 0..i-1, so ids are topological and everything is reachable from 0.
DnnGraph random_dag(Rng& rng, const RandomDagOptions& options = {});

struct RandomWeightOptions {
    double min_seconds = 1e-4;
    double max_seconds = 1e-2;
    bool monotone = false;  // sort each vertex's times so t_d >= t_e >= t_c
    double min_mbps = 1.0;
    double max_mbps = 100.0;
};

BandwidthConfig random_bandwidth(Rng& rng, const RandomWeightOptions& options = {});
WeightedGraph random_weights(Rng& rng, const DnnGraph& g, const RandomWeightOptions& options = {});
/// Same graph and bandwidth with new vertex times.
WeightedGraph with_times(const WeightedGraph& wg, std::vector<TierTimes> times);

struct RandomStackOptions {
    std::size_t min_layers = 1;
    std::size_t max_layers = 6;
    std::int64_t max_extent = 32;
    std::int64_t max_channels = 3;
    std::int64_t max_window = 5;
    std::int64_t max_stride = 3;
    std::int64_t max_padding = 2;
    /// Lets the stride exceed the window. Such layers never read some input
    /// entries, so tiles no longer cover their input level.
    bool allow_skipping = false;
};

/// Shape-complete chain of convolution, pooling, activation and batch-norm
/// layers whose extents divide exactly at every level.
std::vector<LayerConfig> random_stack(Rng& rng, const RandomStackOptions& options = {});

/// Grid with a <= min(max_cells, output width) and likewise for b.
GridSize random_grid(Rng& rng, const Dims3& output, std::int64_t max_cells = 4);

/// Single sliding-window layer with window <= max_window, stride <= max_stride,
/// padding <= min(max_padding, window - 1), input extents <= max_extent.
LayerConfig random_window_layer(Rng& rng, std::int64_t max_extent = 16, std::int64_t max_window = 5,
                                std::int64_t max_stride = 3, std::int64_t max_padding = 2);

template <class T>
T random_value(Rng& rng, int lo, int hi) {
    std::uniform_int_distribution<int> dist(lo, hi);
    return static_cast<T>(dist(rng));
}

template <class T>
Tensor3<T> random_tensor(Rng& rng, const Dims3& dims, int lo = -9, int hi = 9) {
    Tensor3<T> t(dims);
    for (T& v : t.values()) v = random_value<T>(rng, lo, hi);
    return t;
}

/// Small integer-valued parameters for every layer of the stack.
template <class T>
std::vector<StackLayer<T>> random_parameters(Rng& rng, const std::vector<LayerConfig>& stack) {
    std::vector<StackLayer<T>> out;
    for (const LayerConfig& cfg : stack) {
        StackLayer<T> layer;
        layer.config = cfg;
        if (cfg.kind == LayerKind::convolution) {
            layer.bank.shape = *cfg.filter;
            const FilterShape& f = *cfg.filter;
            layer.bank.weights.resize(static_cast<std::size_t>(f.width * f.height * f.depth * f.count));
            for (T& w : layer.bank.weights) w = random_value<T>(rng, -3, 3);
            layer.bank.bias.resize(static_cast<std::size_t>(f.count));
            for (T& b : layer.bank.bias) b = random_value<T>(rng, -5, 5);
        } else if (cfg.kind == LayerKind::batch_norm) {
            const auto depth = static_cast<std::size_t>(cfg.input_dims->depth);
            for (std::size_t d = 0; d < depth; ++d) {
                layer.scale.push_back(random_value<T>(rng, -2, 2));
                layer.shift.push_back(random_value<T>(rng, -4, 4));
            }
        }
        out.push_back(std::move(layer));
    }
    return out;
}

}  // namespace tiersplit
