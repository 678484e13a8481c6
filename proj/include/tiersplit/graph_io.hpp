// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "json.hpp"
#include "tiersplit/graph.hpp"

namespace tiersplit {

inline constexpr int kDocumentVersion = 1;

/// Builds a validated, shape-inferred graph from a graph description document.
///
/// The document either lists the input vertex explicitly (id 0, kind "input")
/// or gives a top-level "input" object with the raw input "dims" and/or "bytes";
/// in the latter case vertex 0 is synthesized and linked to every vertex that
/// has no declared predecessor.
DnnGraph build_graph(const nlohmann::json& doc, ShapeMode mode = ShapeMode::exact);

DnnGraph load_graph(const std::filesystem::path& path, ShapeMode mode = ShapeMode::exact);

/// Normalized dump with every derived field spelled out; build_graph() of the
/// dump reproduces the graph exactly.
nlohmann::json graph_to_json(const DnnGraph& g);

/// One layer's fields as used inside graph, stack and sample documents.
LayerConfig layer_from_json(const nlohmann::json& j);
nlohmann::json layer_to_json(const LayerConfig& cfg);

/// Reads a JSON file, mapping I/O and syntax failures to ErrorCode::parse.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Checks the "format" tag (when present) and the version of a document.
void check_document(const nlohmann::json& doc, std::string_view format);

}  // namespace tiersplit
