#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "fedspace/common/error.hpp"
#include "fedspace/common/time.hpp"
#include "fedspace/dcat/catalog.hpp"
#include "fedspace/facade/store_client.hpp"
#include "fedspace/odrl/policy_store.hpp"

namespace fedspace::facade {

struct FacadeConfig {
  std::string store_url;  ///< empty or "local" for the in-process store
  Credentials credentials;
  std::chrono::seconds cache_ttl{30};
  std::size_t page_size = 50;
  bool cache_enabled = true;
};

/// Applies `FACADE_*` environment variables over `base`.
FacadeConfig facade_config_from_env(FacadeConfig base);

struct CatalogSummary {
  store::Urn domain;
  std::string title;
  std::size_t dataset_count = 0;

  friend bool operator==(const CatalogSummary&, const CatalogSummary&) = default;
};

/// Maps the entity store onto the neutral DCAT view and resolves the
/// operational metadata of datasets by urn. Reads go through a TTL cache that
/// change events invalidate; dataset deletions are forwarded to the policy
/// invalidator exactly once per event.
class Facade final : public odrl::TargetResolver {
 public:
  using Invalidator = std::function<std::size_t(const store::Urn&)>;

  Facade(std::shared_ptr<StoreQueryClient> client, FacadeConfig config, std::shared_ptr<const Clock> clock);

  SessionToken authenticate(const Credentials& credentials);

  std::vector<CatalogSummary> list_catalogs(const SessionToken& token);

  /// Throws TargetNotFound for unknown or deleted datasets. `fresh` skips the cache.
  OperationalMetadata resolve_dataset(const SessionToken& token, const store::Urn& urn, bool fresh = false);

  /// Throws UnknownUrn for unknown or deleted domains.
  dcat::Catalog to_dcat(const SessionToken& token, const store::Urn& domain);

  void on_change(const store::ChangeEvent& event);

  /// Pulls pending change events from the store and applies them; returns how many were new.
  std::size_t drain_changes();

  void set_invalidator(Invalidator invalidator);

  /// Session on the configured credentials, re-authenticating when it lapses.
  SessionToken session();
  /// Drops the cached session so the next call authenticates again.
  void reset_session();

  /// Runs `fn(session())`, re-authenticating once if the store rejects the token.
  template <typename F>
  auto with_session(F&& fn) {
    try {
      return fn(session());
    } catch (const Error& e) {
      if (e.code() != Errc::TokenExpired) throw;
    }
    reset_session();
    return fn(session());
  }

  /// Fresh resolution through the facade, for binding policies to targets.
  void require_live_target(const store::Urn& urn) override;

  [[nodiscard]] std::uint64_t last_seq_no() const;
  [[nodiscard]] std::uint64_t store_queries() const { return client_->query_count(); }
  [[nodiscard]] const FacadeConfig& config() const noexcept { return config_; }

 private:
  using Value = std::variant<std::vector<CatalogSummary>, OperationalMetadata, dcat::Catalog>;

  struct CacheEntry {
    Value value;
    Timestamp fetched_at;
    std::chrono::seconds ttl;
    /// Urns whose change makes this entry stale.
    std::set<store::Urn> covers;
    /// Listings go stale on any dataset or domain change.
    bool listing = false;
  };

  void check_live(const SessionToken& token) const;
  std::optional<Value> cached(const std::string& key);
  void remember(const std::string& key, Value value, std::set<store::Urn> covers, bool listing,
                std::uint64_t generation);

  template <typename T, typename Fetch>
  std::vector<T> fetch_all(Fetch fetch) const;

  std::shared_ptr<StoreQueryClient> client_;
  FacadeConfig config_;
  std::shared_ptr<const Clock> clock_;

  mutable std::mutex mutex_;
  std::map<std::string, CacheEntry> cache_;
  std::uint64_t generation_ = 0;
  std::uint64_t last_seq_ = 0;
  Invalidator invalidator_;

  std::mutex session_mutex_;
  std::optional<SessionToken> session_;
  std::mutex drain_mutex_;
};

/// Straight mapping of a domain and its datasets onto DCAT.
dcat::Catalog map_domain(const store::EntityRecord& domain, const std::vector<store::DatasetEntry>& datasets);

}  // namespace fedspace::facade
