#include "fedspace/dcat/catalog.hpp"

#include <set>

#include "fedspace/common/error.hpp"
#include "fedspace/common/util.hpp"

namespace fedspace::dcat {

namespace {

constexpr const char* kType = "@type";
constexpr const char* kContextKey = "@context";
constexpr const char* kTitle = "dct:title";
constexpr const char* kDescription = "dct:description";
constexpr const char* kIdentifier = "dct:identifier";
constexpr const char* kDataset = "dcat:dataset";
constexpr const char* kDistribution = "dcat:distribution";
constexpr const char* kAccessService = "dcat:accessService";
constexpr const char* kEndpointUrl = "dcat:endpointURL";
constexpr const char* kEndpointDescription = "dcat:endpointDescription";
constexpr const char* kFormat = "dct:format";
constexpr const char* kVersion = "dcat:version";
constexpr const char* kService = "dcat:service";
constexpr const char* kCatalog = "dcat:catalog";

const json& field(const json& j, const char* key, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end())
    throw Error(Errc::SchemaError, std::string("missing '") + key + "' in " + std::string(where));
  return *it;
}

std::string string_field(const json& j, const char* key, std::string_view where) {
  const auto& v = field(j, key, where);
  if (!v.is_string())
    throw Error(Errc::SchemaError, std::string("'") + key + "' must be a string in " + std::string(where));
  return v.get<std::string>();
}

std::string optional_string_field(const json& j, const char* key, std::string_view where) {
  if (!j.contains(key)) return {};
  return string_field(j, key, where);
}

const json& array_field(const json& j, const char* key, std::string_view where) {
  const auto& v = field(j, key, where);
  if (!v.is_array())
    throw Error(Errc::SchemaError, std::string("'") + key + "' must be a list in " + std::string(where));
  return v;
}

void require_object(const json& j, std::string_view where) {
  if (!j.is_object()) throw Error(Errc::SchemaError, std::string(where) + " must be an object");
}

void expect_type(const json& j, std::string_view type, std::string_view where) {
  auto t = string_field(j, kType, where);
  if (t != type)
    throw Error(Errc::SchemaError, "expected @type " + std::string(type) + " in " + std::string(where) +
                                       ", got " + t);
}

void warn_unknown(const json& j, std::initializer_list<const char*> known, std::string_view where,
                  std::vector<std::string>& warnings) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) warnings.push_back("unknown key '" + key + "' in " + std::string(where));
  }
}

store::Urn parse_id(const std::string& text, std::string_view where) {
  auto urn = store::Urn::try_parse(text);
  if (!urn) throw Error(Errc::SchemaError, "identifier is not a urn in " + std::string(where) + ": " + text);
  return *urn;
}

Distribution distribution_from_json(const json& j, std::string_view where, std::vector<std::string>& warnings) {
  require_object(j, where);
  expect_type(j, "dcat:Distribution", where);
  warn_unknown(j, {kType, kFormat, kAccessService}, where, warnings);
  return Distribution{string_field(j, kFormat, where), string_field(j, kAccessService, where)};
}

Catalog catalog_from_json(const json& j, std::vector<std::string>& warnings, bool top_level) {
  require_object(j, "dcat:Catalog");
  expect_type(j, "dcat:Catalog", "dcat:Catalog");
  auto id_text = string_field(j, kIdentifier, "dcat:Catalog");
  std::string where = "dcat:Catalog " + id_text;
  if (top_level) {
    if (auto it = j.find(kContextKey); it != j.end() && *it != json(kContext))
      warnings.push_back("unexpected @context in " + where);
  }
  warn_unknown(j, {kContextKey, kType, kIdentifier, kTitle, kDescription, kDataset, kService}, where, warnings);
  Catalog c{.id = parse_id(id_text, where),
            .title = string_field(j, kTitle, where),
            .description = optional_string_field(j, kDescription, where)};
  for (const auto& d : array_field(j, kDataset, where)) c.datasets.push_back(dataset_from_json(d, warnings));
  if (j.contains(kService))
    for (const auto& s : array_field(j, kService, where)) c.services.push_back(service_from_json(s, warnings));
  return c;
}

json parse_document(std::string_view document) {
  try {
    return json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, e.what());
  }
}

}  // namespace

std::vector<Violation> validate_catalog(const Catalog& c) {
  std::vector<Violation> out;
  if (!c.id.is_domain()) out.push_back({c.id.str(), "catalog identifier must be a domain urn"});

  std::set<std::string> service_ids;
  for (const auto& s : c.services) {
    if (s.id.empty()) out.push_back({s.id, "data service identifier must be non-empty"});
    if (!service_ids.insert(s.id).second) out.push_back({s.id, "duplicate data service identifier"});
    if (!is_absolute_url(s.endpoint_url)) out.push_back({s.id, "endpointURL must be an absolute URL"});
  }

  std::set<std::string> dataset_ids;
  for (const auto& d : c.datasets) {
    if (!dataset_ids.insert(d.id.str()).second) out.push_back({d.id.str(), "duplicate dataset identifier"});
    if (!d.id.is_dataset()) out.push_back({d.id.str(), "dataset identifier must be a dataset urn"});
    for (const auto& dist : d.distributions) {
      if (dist.format.empty()) out.push_back({d.id.str(), "distribution format must be non-empty"});
      if (!service_ids.count(dist.access_service_id))
        out.push_back({d.id.str(), "distribution references unknown data service '" + dist.access_service_id + "'"});
    }
  }
  return out;
}

json service_to_json(const DataService& s) {
  return json{{kType, "dcat:DataService"},
              {kIdentifier, s.id},
              {kEndpointUrl, s.endpoint_url},
              {kEndpointDescription, s.endpoint_description}};
}

json dataset_to_json(const Dataset& d) {
  json dists = json::array();
  for (const auto& dist : d.distributions)
    dists.push_back(json{{kType, "dcat:Distribution"}, {kFormat, dist.format}, {kAccessService, dist.access_service_id}});
  json j{{kType, "dcat:Dataset"},
         {kIdentifier, d.id.str()},
         {kTitle, d.title},
         {kDescription, d.description},
         {kDistribution, std::move(dists)}};
  if (d.version) j[kVersion] = *d.version;
  return j;
}

json catalog_to_json(const Catalog& c, bool with_context) {
  json datasets = json::array();
  for (const auto& d : c.datasets) datasets.push_back(dataset_to_json(d));
  json services = json::array();
  for (const auto& s : c.services) services.push_back(service_to_json(s));
  json j{{kType, "dcat:Catalog"},
         {kIdentifier, c.id.str()},
         {kTitle, c.title},
         {kDescription, c.description},
         {kDataset, std::move(datasets)},
         {kService, std::move(services)}};
  if (with_context) j[kContextKey] = kContext;
  return j;
}

std::string serialize_catalog(const Catalog& c) {
  auto violations = validate_catalog(c);
  if (!violations.empty())
    throw Error(Errc::InvariantViolation, violations.front().id + ": " + violations.front().rule);
  return catalog_to_json(c).dump();
}

std::string serialize_root(const RootCatalog& root) {
  json catalogs = json::array();
  for (const auto& c : root.catalogs) {
    auto violations = validate_catalog(c);
    if (!violations.empty())
      throw Error(Errc::InvariantViolation, violations.front().id + ": " + violations.front().rule);
    catalogs.push_back(catalog_to_json(c, false));
  }
  json j{{kContextKey, kContext},
         {kType, "dcat:Catalog"},
         {kIdentifier, root.id},
         {kTitle, root.title},
         {kDataset, json::array()},
         {kService, json::array()},
         {kCatalog, std::move(catalogs)}};
  return j.dump();
}

Dataset dataset_from_json(const json& j, std::vector<std::string>& warnings) {
  require_object(j, "dcat:Dataset");
  expect_type(j, "dcat:Dataset", "dcat:Dataset");
  auto id_text = string_field(j, kIdentifier, "dcat:Dataset");
  std::string where = "dcat:Dataset " + id_text;
  warn_unknown(j, {kType, kIdentifier, kTitle, kDescription, kVersion, kDistribution, "odrl:hasPolicy"}, where,
               warnings);
  Dataset d{.id = parse_id(id_text, where),
            .title = string_field(j, kTitle, where),
            .description = optional_string_field(j, kDescription, where)};
  if (j.contains(kVersion)) d.version = string_field(j, kVersion, where);
  for (const auto& dist : array_field(j, kDistribution, where))
    d.distributions.push_back(distribution_from_json(dist, "dcat:Distribution of " + id_text, warnings));
  return d;
}

DataService service_from_json(const json& j, std::vector<std::string>& warnings) {
  require_object(j, "dcat:DataService");
  expect_type(j, "dcat:DataService", "dcat:DataService");
  auto id = string_field(j, kIdentifier, "dcat:DataService");
  std::string where = "dcat:DataService " + id;
  warn_unknown(j, {kType, kIdentifier, kEndpointUrl, kEndpointDescription}, where, warnings);
  return DataService{id, string_field(j, kEndpointUrl, where), optional_string_field(j, kEndpointDescription, where)};
}

Parsed<Catalog> deserialize_catalog(std::string_view document) {
  auto j = parse_document(document);
  std::vector<std::string> warnings;
  auto catalog = catalog_from_json(j, warnings, true);
  return Parsed<Catalog>{std::move(catalog), std::move(warnings)};
}

Parsed<RootCatalog> deserialize_root(std::string_view document) {
  auto j = parse_document(document);
  std::vector<std::string> warnings;
  require_object(j, "root catalog");
  expect_type(j, "dcat:Catalog", "root catalog");
  RootCatalog root{.id = string_field(j, kIdentifier, "root catalog"),
                   .title = optional_string_field(j, kTitle, "root catalog")};
  warn_unknown(j, {kContextKey, kType, kIdentifier, kTitle, kDescription, kDataset, kService, kCatalog},
               "root catalog", warnings);
  for (const auto& c : array_field(j, kCatalog, "root catalog"))
    root.catalogs.push_back(catalog_from_json(c, warnings, false));
  return Parsed<RootCatalog>{std::move(root), std::move(warnings)};
}

}  // namespace fedspace::dcat
