// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tiersplit/graph.hpp"
#include "tiersplit/tier.hpp"

namespace tiersplit {

struct TierCapability {
    Tier tier = Tier::device;
    double cpu_score = 0.0;
    double gpu_score = 0.0;
    std::int64_t memory_bytes = 0;
};

/// One capability record per tier, indexed by rank.
using CapabilitySet = std::array<TierCapability, 3>;

/// Validates that the records cover each tier exactly once and reorders them by rank.
CapabilitySet make_capability_set(std::span<const TierCapability> records);

/// Uplink rates in bits per second. Infinity is allowed and means "free".
struct BandwidthConfig {
    double sigma_de = 0.0;
    double sigma_ec = 0.0;
    double sigma_dc = 0.0;

    /// Bandwidth between two distinct tiers (symmetric).
    double between(Tier a, Tier b) const;
    /// Throws invalid_bandwidth unless every rate is strictly positive.
    void validate() const;
};

/// Seconds to move `bytes` over a link of `sigma` bits/s.
double link_delay(std::int64_t bytes, double sigma);

/// Per-tier processing times of a vertex, in seconds, indexed by rank.
struct TierTimes {
    std::array<double, 3> seconds{};

    double at(Tier t) const { return seconds[rank(t)]; }
    double& at(Tier t) { return seconds[rank(t)]; }
    bool operator==(const TierTimes&) const = default;
};

/// Inter-tier delays of one link: [d,e], [e,c], [d,c]. Same-tier delay is 0.
struct LinkDelays {
    double de = 0.0;
    double ec = 0.0;
    double dc = 0.0;

    double between(Tier a, Tier b) const;
    bool operator==(const LinkDelays&) const = default;
};

/// A DNN graph annotated with vertex weights (processing times per tier) and
/// link weights (transfer delays per tier pair). link_delays is parallel to
/// graph.links().
struct WeightedGraph {
    DnnGraph graph;
    BandwidthConfig bandwidth;
    std::vector<TierTimes> vertex_times;
    std::vector<LinkDelays> link_delays;

    double time(VertexId v, Tier t) const { return vertex_times.at(v).at(t); }
    /// Transfer delay of the link (from, to) between the given tiers.
    double delay(std::size_t link_index, Tier from, Tier to) const { return link_delays.at(link_index).between(from, to); }

    /// Input size of v: the summed outputs of its predecessors.
    std::int64_t input_bytes(VertexId v) const;
    std::int64_t output_bytes(VertexId v) const { return graph.config(v).output_bytes; }
};

/// Link delays implied by the source vertex's output size and the bandwidths.
LinkDelays link_delays_for(std::int64_t output_bytes, const BandwidthConfig& bw);

/// True when every stored link weight equals link_delays_for(output_bytes, bandwidth).
bool link_weights_consistent(const WeightedGraph& wg);

// ---------------------------------------------------------------------------
// Regression

inline constexpr std::size_t kFeatureCount = 5;
using FeatureVector = std::array<double, kFeatureCount>;
using Coefficients = std::array<double, kFeatureCount>;

/// [1, flop count, input elements, output elements, parameter count].
FeatureVector layer_features(const LayerConfig& layer);
double flop_count(const LayerConfig& layer);
double parameter_count(const LayerConfig& layer);

struct TrainingSample {
    LayerConfig layer;
    TierCapability capability;
    double seconds = 0.0;
};

/// Per-(layer kind, tier) linear models, with a per-kind model pooled over all
/// tiers for buckets that received no samples.
struct RegressionModel {
    std::map<std::pair<LayerKind, Tier>, Coefficients> buckets;
    std::map<LayerKind, Coefficients> pooled;
    std::vector<std::string> warnings;
};

/// Ordinary least squares per bucket. Identically-zero feature columns are
/// dropped; a bucket with only the intercept left fits the target mean.
/// Rank-deficient buckets get the minimum-norm least-squares solution and a warning.
RegressionModel fit(std::span<const TrainingSample> samples);

/// Non-negative prediction in seconds; the input vertex costs nothing.
/// Throws missing_profile when neither a bucket nor a pooled model covers the kind.
double predict_layer(const RegressionModel& model, const LayerConfig& layer, const TierCapability& tier);

// ---------------------------------------------------------------------------
// Weighting

/// Explicit per-vertex times (profiled fixtures). Vertex 0 defaults to zero.
struct ProfileTable {
    std::vector<std::optional<TierTimes>> times;
};

/// Weights from a profile only; every non-input vertex needs an entry.
WeightedGraph weight_graph(const DnnGraph& g, const ProfileTable& profile, const BandwidthConfig& bw);

/// Weights from the regression model; profile entries, when given, take precedence.
WeightedGraph weight_graph(const DnnGraph& g, const RegressionModel& model, const CapabilitySet& caps,
                           const BandwidthConfig& bw, const ProfileTable* overrides = nullptr);

}  // namespace tiersplit
