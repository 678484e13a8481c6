// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tiersplit/conv.hpp"
#include "tiersplit/graph.hpp"
#include "tiersplit/latency_model.hpp"
#include "tiersplit/planner.hpp"
#include "tiersplit/simulator.hpp"
#include "tiersplit/tiler.hpp"

namespace tiersplit {

// Every document is a JSON object tagged with "format" and "version". Readers
// raise ErrorCode::parse on malformed input.

/// Per-vertex processing times: {"unit": "s"|"ms", "vertices": [{"id", "device", "edge", "cloud"}]}.
ProfileTable profile_from_json(const nlohmann::json& doc);
nlohmann::json profile_to_json(const ProfileTable& profile);

/// {"tiers": [{"tier", "cpu", "gpu", "memory_bytes"}]}, one record per tier.
CapabilitySet capabilities_from_json(const nlohmann::json& doc);
nlohmann::json capabilities_to_json(const CapabilitySet& caps);

/// {"unit": "bps"|"Mbps", "de", "ec", "dc"}; a rate may be the string "inf".
BandwidthConfig bandwidth_from_json(const nlohmann::json& doc);
nlohmann::json bandwidth_to_json(const BandwidthConfig& bw);

/// {"vertex_time": [lower, upper], "bandwidth": [lower, upper]} as new/old ratios.
Thresholds thresholds_from_json(const nlohmann::json& doc);
nlohmann::json thresholds_to_json(const Thresholds& th);

/// Assignment, theta, provenance and the per-tier vertex lists.
PartitionPlan plan_from_json(const nlohmann::json& doc);
nlohmann::json plan_to_json(const PartitionPlan& plan);

/// Grid, layer configs, per-cell tile tables and the overlap report.
TilePlan tile_plan_from_json(const nlohmann::json& doc);
nlohmann::json tile_plan_to_json(const TilePlan& plan);
nlohmann::json overlap_to_json(const OverlapReport& report);

SimReport report_from_json(const nlohmann::json& doc);
nlohmann::json report_to_json(const SimReport& report);
/// Flat table export: one header line, then one line per report.
std::string report_csv_header();
std::string report_csv_row(const std::string& label, const SimReport& report);

RegressionModel model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const RegressionModel& model);

/// {"capabilities": {...}, "samples": [{"layer": {...}, "tier", "seconds"}]}.
/// Sample layers are shape-completed from their input dims.
std::vector<TrainingSample> samples_from_json(const nlohmann::json& doc);
nlohmann::json samples_to_json(const std::vector<TrainingSample>& samples, const CapabilitySet& caps);

/// {"input_dims": [W, H, D], "layers": [...]}: a chain of spatial layers.
/// The first layer receives input_dims; later ones are chained.
std::vector<LayerConfig> stack_from_json(const nlohmann::json& doc);
nlohmann::json stack_to_json(const std::vector<LayerConfig>& stack);

using AnyTensor = std::variant<Tensor3<std::int64_t>, Tensor3<double>>;
/// {"dims": [W, H, D], "type": "integer"|"float", "values": [...]}.
AnyTensor tensor_from_json(const nlohmann::json& doc);
nlohmann::json tensor_to_json(const AnyTensor& tensor);

}  // namespace tiersplit
