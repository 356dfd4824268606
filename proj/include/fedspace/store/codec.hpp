#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fedspace/store/entity.hpp"

namespace fedspace::store {

using nlohmann::json;

// JSON shapes shared by the ingestion file, the journal and the store query API.
// Field names follow the ingestion file format (`customProperties`, `domainUrn`, ...).

json to_json(const EntityRecord& record);
json to_json(const DatasetAspect& aspect);
json to_json(const LineageEdge& edge);
json to_json(const ChangeEvent& event);
json to_json(const DatasetEntry& entry);
json to_json(const DatasetDetail& detail);
json to_json(const FederationReport& report);

/// Missing timestamps default to the epoch; throws SchemaError or MalformedUrn.
EntityRecord record_from_json(const json& j);
DatasetAspect aspect_from_json(const json& j, const Urn& dataset_urn);
LineageEdge edge_from_json(const json& j);
ChangeEvent event_from_json(const json& j);
DatasetEntry entry_from_json(const json& j);
DatasetDetail detail_from_json(const json& j);
FederationReport report_from_json(const json& j);

/// One record of an ingestion file.
struct IngestRecord {
  EntityRecord record;
  std::optional<DatasetAspect> aspect;
};

/// Parses an ingestion document (top-level list). Errors carry a line number:
/// ParseError for malformed text, SchemaError for a record of the wrong shape.
std::vector<IngestRecord> parse_ingest_document(std::string_view text);

}  // namespace fedspace::store
