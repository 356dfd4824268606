#include "fedspace/store/entity.hpp"

#include "fedspace/common/error.hpp"
#include "fedspace/common/util.hpp"

namespace fedspace::store {

std::string_view to_string(EntityKind k) noexcept {
  return k == EntityKind::Domain ? "DOMAIN" : "DATASET";
}

std::string_view to_string(DistributionType d) noexcept {
  return d == DistributionType::HttpPull ? "HTTP_PULL" : "HTTP_PUSH";
}

std::string_view to_string(AuthScheme a) noexcept {
  return a == AuthScheme::None ? "NONE" : "BEARER";
}

std::string_view to_string(ChangeKind c) noexcept {
  switch (c) {
    case ChangeKind::Create: return "CREATE";
    case ChangeKind::Update: return "UPDATE";
    case ChangeKind::Delete: return "DELETE";
  }
  return "UPDATE";
}

std::optional<EntityKind> parse_entity_kind(std::string_view s) noexcept {
  if (s == "DOMAIN") return EntityKind::Domain;
  if (s == "DATASET") return EntityKind::Dataset;
  return std::nullopt;
}

std::optional<DistributionType> parse_distribution_type(std::string_view s) noexcept {
  if (s == "HTTP_PULL") return DistributionType::HttpPull;
  if (s == "HTTP_PUSH") return DistributionType::HttpPush;
  return std::nullopt;
}

std::optional<AuthScheme> parse_auth_scheme(std::string_view s) noexcept {
  if (s == "NONE") return AuthScheme::None;
  if (s == "BEARER") return AuthScheme::Bearer;
  return std::nullopt;
}

std::optional<ChangeKind> parse_change_kind(std::string_view s) noexcept {
  if (s == "CREATE") return ChangeKind::Create;
  if (s == "UPDATE") return ChangeKind::Update;
  if (s == "DELETE") return ChangeKind::Delete;
  return std::nullopt;
}

void check_record(const EntityRecord& r) {
  if (r.kind == EntityKind::Domain && !r.urn.is_domain())
    throw Error(Errc::MalformedUrn, "DOMAIN entity needs a domain urn: " + r.urn.str());
  if (r.kind == EntityKind::Dataset && !r.urn.is_dataset())
    throw Error(Errc::MalformedUrn, "DATASET entity needs a dataset urn: " + r.urn.str());
  if (r.updated_at < r.created_at)
    throw Error(Errc::InvalidArgument, "updated_at precedes created_at for " + r.urn.str());
}

void check_aspect(const DatasetAspect& a) {
  if (!a.dataset_urn.is_dataset())
    throw Error(Errc::MalformedUrn, "aspect dataset urn: " + a.dataset_urn.str());
  if (!a.domain_urn.is_domain())
    throw Error(Errc::MalformedUrn, "aspect domain urn: " + a.domain_urn.str());
  if (!is_absolute_url(a.access_endpoint))
    throw Error(Errc::InvalidArgument, "access endpoint is not an absolute URL: " + a.access_endpoint);
}

}  // namespace fedspace::store
