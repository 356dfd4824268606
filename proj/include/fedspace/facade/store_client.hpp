#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fedspace/common/time.hpp"
#include "fedspace/common/util.hpp"
#include "fedspace/store/entity_store.hpp"

namespace fedspace::facade {

struct Credentials {
  std::string client_id;
  std::string client_secret;
};

struct SessionToken {
  std::string token;
  Timestamp expires_at{};
};

/// The narrow view of a dataset needed to grant access to it.
struct OperationalMetadata {
  store::Urn urn;
  std::string title;
  store::Urn domain_urn;
  store::DistributionType distribution_type;
  std::string access_endpoint;
  store::AuthScheme auth_scheme;
  std::string format_hint;

  friend bool operator==(const OperationalMetadata&, const OperationalMetadata&) = default;
};

/// Media type published for a dataset whose format hint is empty.
inline constexpr const char* kUnspecifiedFormat = "application/octet-stream";

/// The format a dataset is published and transferred under.
inline std::string published_format(const std::string& format_hint) {
  return format_hint.empty() ? kUnspecifiedFormat : format_hint;
}

/// Query boundary toward the metadata store. The built-in store sits behind
/// LocalStoreClient; a remote store (or another graph backend) can replace it.
///
/// Every query takes a session token; an unknown or expired one throws
/// TokenExpired. Transport failures throw SourceUnreachable.
class StoreQueryClient {
 public:
  virtual ~StoreQueryClient() = default;

  /// Throws BadCredentials.
  virtual SessionToken authenticate(const Credentials& credentials) = 0;

  virtual Page<store::EntityRecord> list_domains(const std::string& token, PageRequest page) = 0;
  /// nullopt for unknown or deleted domains.
  virtual std::optional<store::EntityRecord> get_domain(const std::string& token, const store::Urn& urn) = 0;
  /// Throws UnknownUrn for unknown or deleted domains.
  virtual Page<store::DatasetEntry> list_datasets_in_domain(const std::string& token, const store::Urn& domain,
                                                            PageRequest page) = 0;
  /// Throws TargetNotFound for unknown, deleted or aspect-less datasets.
  virtual OperationalMetadata operational_metadata(const std::string& token, const store::Urn& urn) = 0;
  virtual std::vector<store::ChangeEvent> changes_since(const std::string& token, std::uint64_t cursor) = 0;

  /// Number of store queries served so far (authentication excluded).
  [[nodiscard]] virtual std::uint64_t query_count() const = 0;
};

/// Client over an in-process EntityStore, with the same token rules a remote
/// store applies. Also the token authority for the store's own HTTP routes.
class LocalStoreClient final : public StoreQueryClient {
 public:
  LocalStoreClient(store::EntityStore& store, std::vector<Credentials> allowed,
                   std::chrono::seconds token_lifetime, std::shared_ptr<const Clock> clock);

  SessionToken authenticate(const Credentials& credentials) override;
  Page<store::EntityRecord> list_domains(const std::string& token, PageRequest page) override;
  std::optional<store::EntityRecord> get_domain(const std::string& token, const store::Urn& urn) override;
  Page<store::DatasetEntry> list_datasets_in_domain(const std::string& token, const store::Urn& domain,
                                                    PageRequest page) override;
  OperationalMetadata operational_metadata(const std::string& token, const store::Urn& urn) override;
  std::vector<store::ChangeEvent> changes_since(const std::string& token, std::uint64_t cursor) override;
  [[nodiscard]] std::uint64_t query_count() const override { return queries_.load(); }

  /// Throws TokenExpired unless `token` was issued here and is still valid.
  void validate(const std::string& token);

  store::EntityStore& store() noexcept { return store_; }

 private:
  store::EntityStore& store_;
  std::vector<Credentials> allowed_;
  std::chrono::seconds lifetime_;
  std::shared_ptr<const Clock> clock_;
  std::mutex tokens_mutex_;
  std::map<std::string, Timestamp> tokens_;
  std::atomic<std::uint64_t> queries_{0};
};

OperationalMetadata to_operational(const store::EntityRecord& record, const store::DatasetAspect& aspect);

}  // namespace fedspace::facade
