#include "fedspace/store/codec.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "fedspace/common/error.hpp"

namespace fedspace::store {

namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw Error(Errc::SchemaError, std::string("missing key '") + key + "'");
  return *it;
}

std::string require_string(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw Error(Errc::SchemaError, std::string("key '") + key + "' must be a string");
  return v.get<std::string>();
}

std::string optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(Errc::SchemaError, std::string("key '") + key + "' must be a string");
  return it->get<std::string>();
}

Timestamp optional_time(const json& j, const char* key) {
  auto s = optional_string(j, key);
  if (s.empty()) return Timestamp{};
  auto t = parse_timestamp(s);
  if (!t) throw Error(Errc::SchemaError, std::string("key '") + key + "' is not a UTC timestamp");
  return *t;
}

template <typename E, typename Parse>
E require_enum(const json& j, const char* key, Parse parse) {
  auto s = require_string(j, key);
  auto v = parse(s);
  if (!v) throw Error(Errc::SchemaError, std::string("bad value for '") + key + "': " + s);
  return *v;
}

}  // namespace

json to_json(const EntityRecord& r) {
  return json{{"urn", r.urn.str()},
              {"kind", to_string(r.kind)},
              {"name", r.name},
              {"description", r.description},
              {"customProperties", r.custom_properties},
              {"sourceCatalogId", r.source_catalog_id},
              {"createdAt", format_timestamp(r.created_at)},
              {"updatedAt", format_timestamp(r.updated_at)},
              {"deleted", r.deleted}};
}

json to_json(const DatasetAspect& a) {
  json j{{"domainUrn", a.domain_urn.str()},
         {"distributionType", to_string(a.distribution_type)},
         {"accessEndpoint", a.access_endpoint},
         {"authScheme", to_string(a.auth_scheme)},
         {"formatHint", a.format_hint}};
  if (a.version_tag) j["versionTag"] = *a.version_tag;
  return j;
}

json to_json(const LineageEdge& e) {
  return json{{"upstream", e.upstream.str()},
              {"downstream", e.downstream.str()},
              {"createdAt", format_timestamp(e.created_at)}};
}

json to_json(const ChangeEvent& e) {
  return json{{"seqNo", e.seq_no},
              {"urn", e.urn.str()},
              {"kind", to_string(e.kind)},
              {"at", format_timestamp(e.at)}};
}

json to_json(const DatasetEntry& e) {
  auto j = to_json(e.record);
  j["aspect"] = to_json(e.aspect);
  return j;
}

json to_json(const DatasetDetail& d) {
  auto j = to_json(d.record);
  j["aspect"] = d.aspect ? to_json(*d.aspect) : json(nullptr);
  j["lineage"] = json{{"upstream", d.lineage.upstream}, {"downstream", d.lineage.downstream}};
  return j;
}

json to_json(const FederationReport& r) {
  return json{{"created", r.created},
              {"updated", r.updated},
              {"unchanged", r.unchanged},
              {"conflicts", r.conflicts}};
}

EntityRecord record_from_json(const json& j) {
  EntityRecord r{
      .urn = Urn::parse(require_string(j, "urn")),
      .kind = require_enum<EntityKind>(j, "kind", parse_entity_kind),
      .name = require_string(j, "name"),
      .description = optional_string(j, "description"),
  };
  if (auto it = j.find("customProperties"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw Error(Errc::SchemaError, "customProperties must be an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string())
        throw Error(Errc::SchemaError, "customProperties value for '" + k + "' must be a string");
      r.custom_properties[k] = v.get<std::string>();
    }
  }
  r.source_catalog_id = optional_string(j, "sourceCatalogId");
  r.created_at = optional_time(j, "createdAt");
  r.updated_at = optional_time(j, "updatedAt");
  if (auto it = j.find("deleted"); it != j.end() && it->is_boolean()) r.deleted = it->get<bool>();
  return r;
}

DatasetAspect aspect_from_json(const json& j, const Urn& dataset_urn) {
  DatasetAspect a{
      .dataset_urn = dataset_urn,
      .domain_urn = Urn::parse(require_string(j, "domainUrn")),
      .distribution_type =
          require_enum<DistributionType>(j, "distributionType", parse_distribution_type),
      .access_endpoint = require_string(j, "accessEndpoint"),
      .auth_scheme = require_enum<AuthScheme>(j, "authScheme", parse_auth_scheme),
      .format_hint = require_string(j, "formatHint"),
  };
  auto version = optional_string(j, "versionTag");
  if (!version.empty()) a.version_tag = version;
  return a;
}

LineageEdge edge_from_json(const json& j) {
  return LineageEdge{.upstream = Urn::parse(require_string(j, "upstream")),
                     .downstream = Urn::parse(require_string(j, "downstream")),
                     .created_at = optional_time(j, "createdAt")};
}

ChangeEvent event_from_json(const json& j) {
  const auto& seq = require(j, "seqNo");
  if (!seq.is_number_unsigned()) throw Error(Errc::SchemaError, "seqNo must be unsigned");
  return ChangeEvent{.seq_no = seq.get<std::uint64_t>(),
                     .urn = Urn::parse(require_string(j, "urn")),
                     .kind = require_enum<ChangeKind>(j, "kind", parse_change_kind),
                     .at = optional_time(j, "at")};
}

DatasetEntry entry_from_json(const json& j) {
  auto record = record_from_json(j);
  auto aspect = aspect_from_json(require(j, "aspect"), record.urn);
  return DatasetEntry{std::move(record), std::move(aspect)};
}

DatasetDetail detail_from_json(const json& j) {
  DatasetDetail d{.record = record_from_json(j), .aspect = std::nullopt, .lineage = {}};
  if (auto it = j.find("aspect"); it != j.end() && !it->is_null())
    d.aspect = aspect_from_json(*it, d.record.urn);
  const auto& lineage = require(j, "lineage");
  d.lineage.upstream = require(lineage, "upstream").get<std::size_t>();
  d.lineage.downstream = require(lineage, "downstream").get<std::size_t>();
  return d;
}

FederationReport report_from_json(const json& j) {
  return FederationReport{.created = require(j, "created").get<std::size_t>(),
                          .updated = require(j, "updated").get<std::size_t>(),
                          .unchanged = require(j, "unchanged").get<std::size_t>(),
                          .conflicts = require(j, "conflicts").get<std::size_t>()};
}

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// Line on which the n-th top-level element of the array starts. Walks the raw
// text since the parsed DOM keeps no positions.
std::vector<std::size_t> element_lines(std::string_view text) {
  std::vector<std::size_t> lines;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  std::size_t line = 1;
  bool expect_element = false;
  for (char c : text) {
    if (c == '\n') ++line;
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      if (!in_string && depth == 1 && expect_element) expect_element = false;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (depth == 1 && expect_element && c != ']') {
      lines.push_back(line);
      expect_element = false;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '[':
      case '{':
        ++depth;
        if (depth == 1) expect_element = true;
        break;
      case ']':
      case '}': --depth; break;
      case ',':
        if (depth == 1) expect_element = true;
        break;
      default: break;
    }
  }
  return lines;
}

}  // namespace

std::vector<IngestRecord> parse_ingest_document(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, "line " + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) +
                                      ": " + e.what());
  }
  if (!doc.is_array()) throw Error(Errc::SchemaError, "line 1: top-level value must be a list of records");

  auto lines = element_lines(text);
  std::vector<IngestRecord> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    auto where = "line " + std::to_string(i < lines.size() ? lines[i] : 1) + " (record " +
                 std::to_string(i) + ")";
    try {
      IngestRecord rec{record_from_json(item), std::nullopt};
      if (auto it = item.find("aspect"); it != item.end() && !it->is_null()) {
        if (rec.record.kind != EntityKind::Dataset)
          throw Error(Errc::SchemaError, "only DATASET records carry an aspect");
        rec.aspect = aspect_from_json(*it, rec.record.urn);
      }
      check_record(rec.record);
      if (rec.aspect) check_aspect(*rec.aspect);
      out.push_back(std::move(rec));
    } catch (const Error& e) {
      throw Error(e.code() == Errc::MalformedUrn ? Errc::MalformedUrn : Errc::SchemaError,
                  where + ": " + e.detail());
    } catch (const json::exception& e) {
      throw Error(Errc::SchemaError, where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace fedspace::store
