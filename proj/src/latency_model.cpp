// SPDX-License-Identifier: Apache-2.0

#include "tiersplit/latency_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "tiersplit/error.hpp"

namespace tiersplit {

CapabilitySet make_capability_set(std::span<const TierCapability> records) {
    CapabilitySet out;
    std::array<bool, 3> seen{};
    for (const TierCapability& rec : records) {
        if (seen[rank(rec.tier)]) {
            throw Error(ErrorCode::parse, "duplicate capability record for tier " + std::string(tier_name(rec.tier)));
        }
        if (rec.cpu_score < 0 || rec.gpu_score < 0 || rec.memory_bytes < 0) {
            throw Error(ErrorCode::invalid_dimension, "capability scores must be non-negative");
        }
        seen[rank(rec.tier)] = true;
        out[rank(rec.tier)] = rec;
    }
    for (Tier t : kTiers) {
        if (!seen[rank(t)]) throw Error(ErrorCode::parse, "no capability record for tier " + std::string(tier_name(t)));
    }
    return out;
}

double BandwidthConfig::between(Tier a, Tier b) const {
    if (a == b) return std::numeric_limits<double>::infinity();
    const int lo = std::min(rank(a), rank(b));
    const int hi = std::max(rank(a), rank(b));
    if (lo == 0 && hi == 1) return sigma_de;
    if (lo == 1 && hi == 2) return sigma_ec;
    return sigma_dc;
}

void BandwidthConfig::validate() const {
    for (double s : {sigma_de, sigma_ec, sigma_dc}) {
        if (!(s > 0.0)) throw Error(ErrorCode::invalid_bandwidth, "bandwidths must be strictly positive");
    }
}

double link_delay(std::int64_t bytes, double sigma) {
    if (!(sigma > 0.0)) throw Error(ErrorCode::invalid_bandwidth, "bandwidth must be strictly positive");
    if (bytes < 0) throw Error(ErrorCode::invalid_dimension, "byte count must be non-negative");
    return static_cast<double>(bytes) * 8.0 / sigma;
}

double LinkDelays::between(Tier a, Tier b) const {
    if (a == b) return 0.0;
    const int lo = std::min(rank(a), rank(b));
    const int hi = std::max(rank(a), rank(b));
    if (lo == 0 && hi == 1) return de;
    if (lo == 1 && hi == 2) return ec;
    return dc;
}

LinkDelays link_delays_for(std::int64_t output_bytes, const BandwidthConfig& bw) {
    return {link_delay(output_bytes, bw.sigma_de), link_delay(output_bytes, bw.sigma_ec),
            link_delay(output_bytes, bw.sigma_dc)};
}

std::int64_t WeightedGraph::input_bytes(VertexId v) const {
    std::int64_t total = 0;
    for (VertexId p : graph.predecessors(v)) total += graph.config(p).output_bytes;
    return total;
}

bool link_weights_consistent(const WeightedGraph& wg) {
    const auto links = wg.graph.links();
    if (wg.link_delays.size() != links.size()) return false;
    for (std::size_t i = 0; i < links.size(); ++i) {
        if (wg.link_delays[i] != link_delays_for(wg.output_bytes(links[i].from), wg.bandwidth)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Features

double flop_count(const LayerConfig& layer) {
    switch (layer.kind) {
        case LayerKind::input: return 0.0;
        case LayerKind::convolution: {
            if (!layer.filter || !layer.output_dims) {
                throw Error(ErrorCode::missing_parameter, "convolution features need filter and output dims");
            }
            const auto& f = *layer.filter;
            const auto& out = *layer.output_dims;
            return 2.0 * static_cast<double>(f.width * f.height * f.depth) * static_cast<double>(out.area()) *
                   static_cast<double>(f.count);
        }
        case LayerKind::fully_connected:
            return 2.0 * static_cast<double>(layer.input_elements) * static_cast<double>(layer.output_elements);
        default: return static_cast<double>(layer.output_elements);
    }
}

double parameter_count(const LayerConfig& layer) {
    switch (layer.kind) {
        case LayerKind::convolution: {
            if (!layer.filter) throw Error(ErrorCode::missing_parameter, "convolution features need a filter");
            const auto& f = *layer.filter;
            return static_cast<double>(f.width * f.height * f.depth * f.count + f.count);
        }
        case LayerKind::fully_connected:
            return static_cast<double>(layer.input_elements * layer.output_elements + layer.output_elements);
        case LayerKind::batch_norm:
            return layer.output_dims ? 2.0 * static_cast<double>(layer.output_dims->depth) : 0.0;
        default: return 0.0;
    }
}

FeatureVector layer_features(const LayerConfig& layer) {
    return {1.0, flop_count(layer), static_cast<double>(layer.input_elements),
            static_cast<double>(layer.output_elements), parameter_count(layer)};
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

struct Bucket {
    std::vector<FeatureVector> rows;
    std::vector<double> targets;
};

Coefficients solve_bucket(const Bucket& b, const std::string& label, std::vector<std::string>& warnings) {
    Coefficients coef{};
    const std::size_t n = b.rows.size();

    std::vector<std::size_t> active;
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        const bool nonzero = std::any_of(b.rows.begin(), b.rows.end(), [c](const FeatureVector& r) { return r[c] != 0.0; });
        if (nonzero) active.push_back(c);
    }
    if (active.size() == 1 && active.front() == 0) {
        double sum = 0.0;
        for (double y : b.targets) sum += y;
        coef[0] = sum / static_cast<double>(n);
        return coef;
    }

    const auto p = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    Eigen::VectorXd scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        double m = 0.0;
        for (const FeatureVector& r : b.rows) m = std::max(m, std::abs(r[active[j]]));
        scale(j) = m;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) x(static_cast<Eigen::Index>(i), j) = b.rows[i][active[j]] / scale(j);
        y(static_cast<Eigen::Index>(i)) = b.targets[i];
    }

    Eigen::VectorXd beta;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (static_cast<Eigen::Index>(n) >= p && qr.rank() == p) {
        beta = qr.solve(y);
    } else {
        warnings.push_back(label + ": rank-deficient design (rank " + std::to_string(qr.rank()) + " of " +
                           std::to_string(p) + " with " + std::to_string(n) +
                           " samples); using the minimum-norm least-squares solution");
        beta = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(x).solve(y);
    }
    for (Eigen::Index j = 0; j < p; ++j) coef[active[j]] = beta(j) / scale(j);
    return coef;
}

}  // namespace

RegressionModel fit(std::span<const TrainingSample> samples) {
    std::map<std::pair<LayerKind, Tier>, Bucket> buckets;
    std::map<LayerKind, Bucket> pooled;
    for (const TrainingSample& s : samples) {
        if (s.layer.kind == LayerKind::input) continue;
        const FeatureVector f = layer_features(s.layer);
        auto& b = buckets[{s.layer.kind, s.capability.tier}];
        b.rows.push_back(f);
        b.targets.push_back(s.seconds);
        auto& pb = pooled[s.layer.kind];
        pb.rows.push_back(f);
        pb.targets.push_back(s.seconds);
    }

    RegressionModel model;
    for (const auto& [key, bucket] : buckets) {
        const std::string label = std::string(to_string(key.first)) + "@" + std::string(tier_name(key.second));
        model.buckets[key] = solve_bucket(bucket, label, model.warnings);
    }
    for (const auto& [kind, bucket] : pooled) {
        bool complete = true;
        for (Tier t : kTiers) complete = complete && buckets.contains({kind, t});
        if (complete) continue;  // pooled model is only needed as a fallback
        const std::string label = std::string(to_string(kind)) + "@pooled";
        model.pooled[kind] = solve_bucket(bucket, label, model.warnings);
        for (Tier t : kTiers) {
            if (!buckets.contains({kind, t})) {
                model.warnings.push_back(std::string(to_string(kind)) + "@" + std::string(tier_name(t)) +
                                         ": no samples; falling back to the pooled per-kind model");
            }
        }
    }
    return model;
}

double predict_layer(const RegressionModel& model, const LayerConfig& layer, const TierCapability& tier) {
    if (layer.kind == LayerKind::input) return 0.0;
    const Coefficients* coef = nullptr;
    if (auto it = model.buckets.find({layer.kind, tier.tier}); it != model.buckets.end()) {
        coef = &it->second;
    } else if (auto pit = model.pooled.find(layer.kind); pit != model.pooled.end()) {
        coef = &pit->second;
    }
    if (coef == nullptr) {
        throw Error(ErrorCode::missing_profile,
                    "regression model has no coefficients for " + std::string(to_string(layer.kind)));
    }
    const FeatureVector f = layer_features(layer);
    double t = 0.0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) t += (*coef)[i] * f[i];
    return std::max(0.0, t);
}

// ---------------------------------------------------------------------------
// Weighting

namespace {

WeightedGraph weight_links(const DnnGraph& g, const BandwidthConfig& bw, std::vector<TierTimes> times) {
    bw.validate();
    WeightedGraph wg{g, bw, std::move(times), {}};
    wg.link_delays.reserve(g.links().size());
    for (const Link& l : g.links()) wg.link_delays.push_back(link_delays_for(g.config(l.from).output_bytes, bw));
    return wg;
}

void check_times(const TierTimes& t, VertexId v) {
    for (double s : t.seconds) {
        if (!std::isfinite(s) || s < 0.0) {
            throw Error(ErrorCode::invalid_dimension,
                        "v" + std::to_string(v) + ": processing times must be finite and non-negative");
        }
    }
}

}  // namespace

WeightedGraph weight_graph(const DnnGraph& g, const ProfileTable& profile, const BandwidthConfig& bw) {
    std::vector<TierTimes> times(g.size());
    for (VertexId v = 0; v < g.size(); ++v) {
        const bool have = v < profile.times.size() && profile.times[v].has_value();
        if (have) {
            times[v] = *profile.times[v];
        } else if (v != 0) {
            throw Error(ErrorCode::missing_profile, "no profile entry for v" + std::to_string(v));
        }
        check_times(times[v], v);
    }
    return weight_links(g, bw, std::move(times));
}

WeightedGraph weight_graph(const DnnGraph& g, const RegressionModel& model, const CapabilitySet& caps,
                           const BandwidthConfig& bw, const ProfileTable* overrides) {
    std::vector<TierTimes> times(g.size());
    for (VertexId v = 0; v < g.size(); ++v) {
        if (overrides && v < overrides->times.size() && overrides->times[v]) {
            times[v] = *overrides->times[v];
        } else {
            for (Tier t : kTiers) times[v].at(t) = predict_layer(model, g.config(v), caps[rank(t)]);
        }
        check_times(times[v], v);
    }
    return weight_links(g, bw, std::move(times));
}

}  // namespace tiersplit
