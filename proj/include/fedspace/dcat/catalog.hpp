#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fedspace/store/urn.hpp"

namespace fedspace::dcat {

using nlohmann::json;

inline constexpr std::string_view kContext = "https://www.w3.org/ns/dcat#";

struct DataService {
  std::string id;
  std::string endpoint_url;
  std::string endpoint_description;

  friend bool operator==(const DataService&, const DataService&) = default;
};

struct Distribution {
  std::string format;
  std::string access_service_id;

  friend bool operator==(const Distribution&, const Distribution&) = default;
};

struct Dataset {
  store::Urn id;
  std::string title;
  std::string description;
  std::optional<std::string> version;
  std::vector<Distribution> distributions;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// One domain projected as a DCAT catalog.
struct Catalog {
  store::Urn id;
  std::string title;
  std::string description;
  std::vector<Dataset> datasets;
  std::vector<DataService> services;

  friend bool operator==(const Catalog&, const Catalog&) = default;
};

/// Catalog of catalogs published at a provider's catalog entry point.
struct RootCatalog {
  std::string id;
  std::string title;
  std::vector<Catalog> catalogs;

  friend bool operator==(const RootCatalog&, const RootCatalog&) = default;
};

struct Violation {
  std::string id;
  std::string rule;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Empty iff the catalog holds every structural invariant.
std::vector<Violation> validate_catalog(const Catalog& catalog);

/// Compact JSON-LD text with sorted keys. Throws InvariantViolation when
/// validate_catalog reports anything.
std::string serialize_catalog(const Catalog& catalog);
std::string serialize_root(const RootCatalog& root);

template <typename T>
struct Parsed {
  T value;
  /// Unknown keys encountered, one human-readable line each.
  std::vector<std::string> warnings;
};

/// Throws ParseError for malformed text, SchemaError for a wrong shape.
Parsed<Catalog> deserialize_catalog(std::string_view document);
Parsed<RootCatalog> deserialize_root(std::string_view document);

// DOM-level codecs, for embedding into larger documents.
json catalog_to_json(const Catalog& catalog, bool with_context = true);
json dataset_to_json(const Dataset& dataset);
json service_to_json(const DataService& service);
Dataset dataset_from_json(const json& j, std::vector<std::string>& warnings);
DataService service_from_json(const json& j, std::vector<std::string>& warnings);

}  // namespace fedspace::dcat
