#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "fedspace/common/time.hpp"
#include "fedspace/common/util.hpp"
#include "fedspace/store/catalog_source.hpp"
#include "fedspace/store/codec.hpp"
#include "fedspace/store/entity.hpp"

namespace fedspace::store {

class Journal;

struct IngestReport {
  std::size_t created = 0;
  std::size_t updated = 0;
};

/// Federated metadata graph: domains and datasets with key-value aspects,
/// depth-one lineage, a monotonically numbered change feed and pull-based
/// federation from other catalog sources.
///
/// Every mutation goes through one writer lock, so seq_no assignment and the
/// urn uniqueness check are atomic; reads share the lock. When opened on a
/// directory, each mutation is appended to the journal before it becomes
/// visible to readers.
class EntityStore final : public CatalogSource {
 public:
  /// In-memory store. `catalog_id` is stamped on locally ingested records.
  EntityStore(std::string catalog_id, std::shared_ptr<const Clock> clock);

  /// Durable store rooted at `dir`; reloads the latest snapshot plus the journal tail.
  static std::unique_ptr<EntityStore> open(const std::filesystem::path& dir, std::string catalog_id,
                                           std::shared_ptr<const Clock> clock,
                                           std::size_t snapshot_every = 256);

  ~EntityStore() override;
  EntityStore(const EntityStore&) = delete;
  EntityStore& operator=(const EntityStore&) = delete;

  [[nodiscard]] const std::string& catalog_id() const noexcept { return catalog_id_; }

  Urn upsert_entity(const EntityRecord& record, const std::optional<DatasetAspect>& aspect = std::nullopt);
  void delete_entity(const Urn& urn);

  /// Domains first, then datasets, each in file order.
  IngestReport ingest(const std::vector<IngestRecord>& records);

  [[nodiscard]] std::optional<EntityRecord> get_entity(const Urn& urn, bool include_deleted = false) const;
  [[nodiscard]] std::optional<DatasetAspect> get_aspect(const Urn& urn) const;

  Page<EntityRecord> list_domains(PageRequest page) override;
  Page<DatasetEntry> list_datasets_in_domain(const Urn& domain, PageRequest page) override;
  DatasetDetail get_dataset_detail(const Urn& urn) override;

  Page<EntityRecord> search_datasets(std::string_view query, PageRequest page) const;

  void add_lineage_edge(const Urn& upstream, const Urn& downstream);
  [[nodiscard]] std::vector<Urn> get_lineage(const Urn& urn, LineageDirection direction) const;

  /// Pulls every live entity of `source`. Nothing is applied unless the whole
  /// source could be read.
  FederationReport federate_pull(CatalogSource& source);

  /// Events with seq_no > cursor, in order.
  [[nodiscard]] std::vector<ChangeEvent> changes_since(std::uint64_t cursor) const;

  /// Like changes_since but blocks up to `timeout` while there is nothing new.
  [[nodiscard]] std::vector<ChangeEvent> wait_changes(std::uint64_t cursor,
                                                      std::chrono::milliseconds timeout) const;

  [[nodiscard]] std::uint64_t last_seq_no() const;

  /// Live urns, ascending.
  [[nodiscard]] std::vector<Urn> live_urns() const;

  /// Forces a snapshot file; no-op for in-memory stores.
  void snapshot();

 private:
  struct Entity {
    EntityRecord record;
    std::optional<DatasetAspect> aspect;
  };

  friend class Journal;

  // All of these expect the writer lock to be held.
  ChangeEvent emit(const Urn& urn, ChangeKind kind);
  void persist_entity(const ChangeEvent& ev, const Entity& entity);
  Urn upsert_locked(const EntityRecord& record, const std::optional<DatasetAspect>& aspect);
  const Entity& live_entity(const Urn& urn) const;
  const Entity& live_dataset(const Urn& urn) const;

  std::string catalog_id_;
  std::shared_ptr<const Clock> clock_;

  mutable std::shared_mutex mutex_;
  mutable std::condition_variable_any feed_cv_;
  std::map<Urn, Entity> entities_;
  std::set<std::pair<Urn, Urn>> edges_;
  std::map<std::pair<Urn, Urn>, Timestamp> edge_times_;
  std::vector<ChangeEvent> events_;

  std::unique_ptr<Journal> journal_;
};

/// Pull-based change feed over a store; consumers dedup by seq_no.
class ChangeSubscription {
 public:
  ChangeSubscription(const EntityStore& store, std::uint64_t cursor) : store_(&store), cursor_(cursor) {}

  /// Everything after the cursor; advances the cursor.
  std::vector<ChangeEvent> poll();
  std::vector<ChangeEvent> next(std::chrono::milliseconds timeout);

  [[nodiscard]] std::uint64_t cursor() const noexcept { return cursor_; }

 private:
  const EntityStore* store_;
  std::uint64_t cursor_;
};

inline ChangeSubscription subscribe_changes(const EntityStore& store, std::uint64_t cursor) {
  return ChangeSubscription(store, cursor);
}

}  // namespace fedspace::store
