#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "fedspace/common/time.hpp"
#include "fedspace/store/urn.hpp"

namespace fedspace::store {

enum class EntityKind { Domain, Dataset };
enum class DistributionType { HttpPull, HttpPush };
enum class AuthScheme { None, Bearer };
enum class ChangeKind { Create, Update, Delete };

std::string_view to_string(EntityKind k) noexcept;
std::string_view to_string(DistributionType d) noexcept;
std::string_view to_string(AuthScheme a) noexcept;
std::string_view to_string(ChangeKind c) noexcept;

std::optional<EntityKind> parse_entity_kind(std::string_view s) noexcept;
std::optional<DistributionType> parse_distribution_type(std::string_view s) noexcept;
std::optional<AuthScheme> parse_auth_scheme(std::string_view s) noexcept;
std::optional<ChangeKind> parse_change_kind(std::string_view s) noexcept;

struct EntityRecord {
  Urn urn;
  EntityKind kind;
  std::string name;
  std::string description;
  std::map<std::string, std::string> custom_properties;
  std::string source_catalog_id;
  Timestamp created_at{};
  Timestamp updated_at{};
  bool deleted = false;

  friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

struct DatasetAspect {
  Urn dataset_urn;
  Urn domain_urn;
  DistributionType distribution_type = DistributionType::HttpPull;
  std::string access_endpoint;
  AuthScheme auth_scheme = AuthScheme::None;
  std::string format_hint;
  std::optional<std::string> version_tag;

  friend bool operator==(const DatasetAspect&, const DatasetAspect&) = default;
};

struct LineageEdge {
  Urn upstream;
  Urn downstream;
  Timestamp created_at{};

  friend bool operator==(const LineageEdge&, const LineageEdge&) = default;
};

struct ChangeEvent {
  std::uint64_t seq_no = 0;
  Urn urn;
  ChangeKind kind;
  Timestamp at{};

  friend bool operator==(const ChangeEvent&, const ChangeEvent&) = default;
};

enum class LineageDirection { Upstream, Downstream };

struct LineageSummary {
  std::size_t upstream = 0;
  std::size_t downstream = 0;

  friend bool operator==(const LineageSummary&, const LineageSummary&) = default;
};

/// A dataset as listed under its domain.
struct DatasetEntry {
  EntityRecord record;
  DatasetAspect aspect;

  friend bool operator==(const DatasetEntry&, const DatasetEntry&) = default;
};

struct DatasetDetail {
  EntityRecord record;
  std::optional<DatasetAspect> aspect;
  LineageSummary lineage;
};

struct FederationReport {
  std::size_t created = 0;
  std::size_t updated = 0;
  std::size_t unchanged = 0;
  std::size_t conflicts = 0;

  friend bool operator==(const FederationReport&, const FederationReport&) = default;
};

/// Checks the kind/grammar and timestamp invariants of a record; throws MalformedUrn
/// or InvalidArgument.
void check_record(const EntityRecord& record);

/// Checks endpoint syntax and urn kinds of an aspect; throws InvalidArgument.
void check_aspect(const DatasetAspect& aspect);

}  // namespace fedspace::store
