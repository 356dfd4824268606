#include "fedspace/store/entity_store.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

#include "fedspace/common/error.hpp"
#include "fedspace/common/log.hpp"
#include "fedspace/store/codec.hpp"

namespace fedspace::store {

// On-disk layout of a durable store:
//
//   <dir>/journal.log          one JSON object per line, one line per change event,
//                              carrying the post-mutation entity (or the new edge)
//   <dir>/snapshot-<seq>.json  full state as of event <seq>, incl. the event log
//
// Reload = newest snapshot + journal lines with a larger seqNo. A torn final
// journal line (crash mid-append) is dropped.
class Journal {
 public:
  Journal(std::filesystem::path dir, std::size_t snapshot_every)
      : dir_(std::move(dir)), snapshot_every_(std::max<std::size_t>(1, snapshot_every)) {}

  void load(EntityStore& store);

  void append(const json& line) {
    if (!out_.is_open()) {
      out_.open(dir_ / "journal.log", std::ios::app | std::ios::binary);
      if (!out_) throw Error(Errc::Io, "cannot open journal in " + dir_.string());
    }
    out_ << line.dump() << '\n';
    out_.flush();
    ++since_snapshot_;
  }

  bool snapshot_due() const { return since_snapshot_ >= snapshot_every_; }

  void write_snapshot(const EntityStore& store);

 private:
  std::filesystem::path dir_;
  std::size_t snapshot_every_;
  std::size_t since_snapshot_ = 0;
  std::ofstream out_;
};

namespace {

json entity_json(const EntityRecord& record, const std::optional<DatasetAspect>& aspect) {
  auto j = to_json(record);
  j["aspect"] = aspect ? to_json(*aspect) : json(nullptr);
  return j;
}

std::uint64_t snapshot_seq(const std::filesystem::path& p) {
  auto stem = p.stem().string();  // snapshot-<seq>
  return std::stoull(stem.substr(std::string("snapshot-").size()));
}

}  // namespace

void Journal::load(EntityStore& store) {
  std::optional<std::filesystem::path> newest;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    auto name = entry.path().filename().string();
    if (name.rfind("snapshot-", 0) != 0 || entry.path().extension() != ".json") continue;
    if (!newest || snapshot_seq(entry.path()) > snapshot_seq(*newest)) newest = entry.path();
  }

  std::uint64_t base = 0;
  if (newest) {
    auto doc = json::parse(read_file(*newest));
    base = doc.at("seqNo").get<std::uint64_t>();
    for (const auto& e : doc.at("entities")) {
      auto record = record_from_json(e);
      std::optional<DatasetAspect> aspect;
      if (!e.at("aspect").is_null()) aspect = aspect_from_json(e.at("aspect"), record.urn);
      store.entities_.insert_or_assign(record.urn, EntityStore::Entity{record, aspect});
    }
    for (const auto& e : doc.at("edges")) {
      auto edge = edge_from_json(e);
      store.edges_.emplace(edge.upstream, edge.downstream);
      store.edge_times_[{edge.upstream, edge.downstream}] = edge.created_at;
    }
    for (const auto& e : doc.at("events")) store.events_.push_back(event_from_json(e));
  }

  auto journal_path = dir_ / "journal.log";
  if (!std::filesystem::exists(journal_path)) return;
  std::ifstream in(journal_path, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      log::warn("store.journal.torn_line", {{"dir", dir_.string()}});
      break;
    }
    auto ev = event_from_json(j);
    if (ev.seq_no <= base) continue;
    if (auto it = j.find("entity"); it != j.end()) {
      auto record = record_from_json(*it);
      std::optional<DatasetAspect> aspect;
      if (!it->at("aspect").is_null()) aspect = aspect_from_json(it->at("aspect"), record.urn);
      store.entities_.insert_or_assign(record.urn, EntityStore::Entity{record, aspect});
    }
    if (auto it = j.find("edge"); it != j.end()) {
      auto edge = edge_from_json(*it);
      store.edges_.emplace(edge.upstream, edge.downstream);
      store.edge_times_[{edge.upstream, edge.downstream}] = edge.created_at;
    }
    store.events_.push_back(ev);
    ++since_snapshot_;
  }
}

void Journal::write_snapshot(const EntityStore& store) {
  json doc;
  auto seq = store.events_.empty() ? 0 : store.events_.back().seq_no;
  doc["seqNo"] = seq;
  doc["entities"] = json::array();
  for (const auto& [urn, e] : store.entities_) doc["entities"].push_back(entity_json(e.record, e.aspect));
  doc["edges"] = json::array();
  for (const auto& [key, at] : store.edge_times_)
    doc["edges"].push_back(to_json(LineageEdge{key.first, key.second, at}));
  doc["events"] = json::array();
  for (const auto& ev : store.events_) doc["events"].push_back(to_json(ev));

  char name[48];
  std::snprintf(name, sizeof name, "snapshot-%020llu.json", static_cast<unsigned long long>(seq));
  write_file_atomic(dir_ / name, doc.dump());
  // Older snapshots are superseded; the journal itself is never rewritten.
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    auto fname = entry.path().filename().string();
    if (fname.rfind("snapshot-", 0) == 0 && entry.path().extension() == ".json" && fname != name)
      std::filesystem::remove(entry.path());
  }
  since_snapshot_ = 0;
}

EntityStore::EntityStore(std::string catalog_id, std::shared_ptr<const Clock> clock)
    : catalog_id_(std::move(catalog_id)), clock_(std::move(clock)) {}

EntityStore::~EntityStore() = default;

std::unique_ptr<EntityStore> EntityStore::open(const std::filesystem::path& dir, std::string catalog_id,
                                               std::shared_ptr<const Clock> clock,
                                               std::size_t snapshot_every) {
  std::filesystem::create_directories(dir);
  auto store = std::make_unique<EntityStore>(std::move(catalog_id), std::move(clock));
  store->journal_ = std::make_unique<Journal>(dir, snapshot_every);
  store->journal_->load(*store);
  return store;
}

ChangeEvent EntityStore::emit(const Urn& urn, ChangeKind kind) {
  ChangeEvent ev{.seq_no = events_.empty() ? 1 : events_.back().seq_no + 1,
                 .urn = urn,
                 .kind = kind,
                 .at = clock_->now()};
  return ev;
}

void EntityStore::persist_entity(const ChangeEvent& ev, const Entity& entity) {
  if (journal_) {
    auto line = to_json(ev);
    line["entity"] = entity_json(entity.record, entity.aspect);
    journal_->append(line);
  }
  entities_.insert_or_assign(entity.record.urn, entity);
  events_.push_back(ev);
  if (journal_ && journal_->snapshot_due()) journal_->write_snapshot(*this);
  feed_cv_.notify_all();
}

const EntityStore::Entity& EntityStore::live_entity(const Urn& urn) const {
  auto it = entities_.find(urn);
  if (it == entities_.end()) throw Error(Errc::UnknownUrn, urn.str());
  if (it->second.record.deleted) throw Error(Errc::DeletedEntity, urn.str());
  return it->second;
}

const EntityStore::Entity& EntityStore::live_dataset(const Urn& urn) const {
  const auto& e = live_entity(urn);
  if (e.record.kind != EntityKind::Dataset) throw Error(Errc::UnknownUrn, "not a dataset: " + urn.str());
  return e;
}

Urn EntityStore::upsert_entity(const EntityRecord& record, const std::optional<DatasetAspect>& aspect) {
  std::unique_lock lock(mutex_);
  return upsert_locked(record, aspect);
}

Urn EntityStore::upsert_locked(const EntityRecord& record, const std::optional<DatasetAspect>& aspect) {
  if (record.kind == EntityKind::Domain && !record.urn.is_domain())
    throw Error(Errc::MalformedUrn, "DOMAIN entity needs a domain urn: " + record.urn.str());
  if (record.kind == EntityKind::Dataset && !record.urn.is_dataset())
    throw Error(Errc::MalformedUrn, "DATASET entity needs a dataset urn: " + record.urn.str());
  if (aspect) {
    if (record.kind != EntityKind::Dataset)
      throw Error(Errc::InvalidArgument, "aspect given for a non-dataset entity " + record.urn.str());
    if (aspect->dataset_urn != record.urn)
      throw Error(Errc::InvalidArgument, "aspect belongs to " + aspect->dataset_urn.str());
    check_aspect(*aspect);
    auto parent = entities_.find(aspect->domain_urn);
    if (parent == entities_.end() || parent->second.record.deleted ||
        parent->second.record.kind != EntityKind::Domain)
      throw Error(Errc::MissingParentDomain, aspect->domain_urn.str());
  }

  auto now = clock_->now();
  auto existing = entities_.find(record.urn);
  bool live = existing != entities_.end() && !existing->second.record.deleted;
  if (existing != entities_.end() && existing->second.record.kind != record.kind)
    throw Error(Errc::InvalidArgument, "entity kind cannot change for " + record.urn.str());

  Entity next{record, aspect};
  next.record.deleted = false;
  next.record.updated_at = now;
  next.record.created_at = live ? existing->second.record.created_at : now;
  if (next.record.source_catalog_id.empty())
    next.record.source_catalog_id = live ? existing->second.record.source_catalog_id : catalog_id_;
  if (!aspect && existing != entities_.end()) next.aspect = existing->second.aspect;

  auto ev = emit(record.urn, live ? ChangeKind::Update : ChangeKind::Create);
  persist_entity(ev, next);
  return record.urn;
}

void EntityStore::delete_entity(const Urn& urn) {
  std::unique_lock lock(mutex_);
  auto it = entities_.find(urn);
  if (it == entities_.end()) throw Error(Errc::UnknownUrn, urn.str());
  if (it->second.record.deleted) throw Error(Errc::AlreadyDeleted, urn.str());
  Entity next = it->second;
  next.record.deleted = true;
  next.record.updated_at = std::max(clock_->now(), next.record.created_at);
  persist_entity(emit(urn, ChangeKind::Delete), next);
}

IngestReport EntityStore::ingest(const std::vector<IngestRecord>& records) {
  std::unique_lock lock(mutex_);
  IngestReport report;
  auto apply = [&](const IngestRecord& r) {
    auto it = entities_.find(r.record.urn);
    bool live = it != entities_.end() && !it->second.record.deleted;
    upsert_locked(r.record, r.aspect);
    ++(live ? report.updated : report.created);
  };
  for (const auto& r : records)
    if (r.record.kind == EntityKind::Domain) apply(r);
  for (const auto& r : records)
    if (r.record.kind != EntityKind::Domain) apply(r);
  return report;
}

std::optional<EntityRecord> EntityStore::get_entity(const Urn& urn, bool include_deleted) const {
  std::shared_lock lock(mutex_);
  auto it = entities_.find(urn);
  if (it == entities_.end()) return std::nullopt;
  if (it->second.record.deleted && !include_deleted) return std::nullopt;
  return it->second.record;
}

std::optional<DatasetAspect> EntityStore::get_aspect(const Urn& urn) const {
  std::shared_lock lock(mutex_);
  auto it = entities_.find(urn);
  if (it == entities_.end() || it->second.record.deleted) return std::nullopt;
  return it->second.aspect;
}

Page<EntityRecord> EntityStore::list_domains(PageRequest page) {
  require_valid_page(page);
  std::shared_lock lock(mutex_);
  std::vector<EntityRecord> all;
  for (const auto& [urn, e] : entities_)
    if (e.record.kind == EntityKind::Domain && !e.record.deleted) all.push_back(e.record);
  return paginate(std::move(all), page);
}

Page<DatasetEntry> EntityStore::list_datasets_in_domain(const Urn& domain, PageRequest page) {
  require_valid_page(page);
  std::shared_lock lock(mutex_);
  auto it = entities_.find(domain);
  if (it == entities_.end() || it->second.record.deleted ||
      it->second.record.kind != EntityKind::Domain)
    throw Error(Errc::UnknownUrn, domain.str());
  std::vector<DatasetEntry> all;
  for (const auto& [urn, e] : entities_) {
    if (e.record.kind == EntityKind::Dataset && !e.record.deleted && e.aspect &&
        e.aspect->domain_urn == domain)
      all.push_back(DatasetEntry{e.record, *e.aspect});
  }
  return paginate(std::move(all), page);
}

DatasetDetail EntityStore::get_dataset_detail(const Urn& urn) {
  std::shared_lock lock(mutex_);
  const auto& e = live_dataset(urn);
  DatasetDetail d{.record = e.record, .aspect = e.aspect, .lineage = {}};
  for (const auto& [up, down] : edges_) {
    if (down == urn) ++d.lineage.upstream;
    if (up == urn) ++d.lineage.downstream;
  }
  return d;
}

Page<EntityRecord> EntityStore::search_datasets(std::string_view query, PageRequest page) const {
  auto needle = trim(query);
  if (needle.empty()) throw Error(Errc::EmptyQuery, "query is empty");
  require_valid_page(page);
  std::shared_lock lock(mutex_);
  std::vector<EntityRecord> hits;
  for (const auto& [urn, e] : entities_) {
    const auto& r = e.record;
    if (r.kind != EntityKind::Dataset || r.deleted) continue;
    bool match = contains_case_insensitive(r.name, needle) ||
                 contains_case_insensitive(r.description, needle) ||
                 std::any_of(r.custom_properties.begin(), r.custom_properties.end(),
                             [&](const auto& kv) { return contains_case_insensitive(kv.second, needle); });
    if (match) hits.push_back(r);
  }
  return paginate(std::move(hits), page);
}

void EntityStore::add_lineage_edge(const Urn& upstream, const Urn& downstream) {
  std::unique_lock lock(mutex_);
  if (upstream == downstream) throw Error(Errc::SelfLoop, upstream.str());
  auto require_live_dataset = [&](const Urn& u) {
    auto it = entities_.find(u);
    if (it == entities_.end() || it->second.record.deleted ||
        it->second.record.kind != EntityKind::Dataset)
      throw Error(Errc::UnknownUrn, u.str());
  };
  require_live_dataset(upstream);
  require_live_dataset(downstream);
  if (edges_.count({upstream, downstream}))
    throw Error(Errc::DuplicateEdge, upstream.str() + " -> " + downstream.str());

  auto ev = emit(downstream, ChangeKind::Update);
  LineageEdge edge{upstream, downstream, ev.at};
  if (journal_) {
    auto line = to_json(ev);
    line["edge"] = to_json(edge);
    journal_->append(line);
  }
  edges_.emplace(upstream, downstream);
  edge_times_[{upstream, downstream}] = edge.created_at;
  events_.push_back(ev);
  if (journal_ && journal_->snapshot_due()) journal_->write_snapshot(*this);
  feed_cv_.notify_all();
}

std::vector<Urn> EntityStore::get_lineage(const Urn& urn, LineageDirection direction) const {
  std::shared_lock lock(mutex_);
  auto it = entities_.find(urn);
  if (it == entities_.end()) throw Error(Errc::UnknownUrn, urn.str());
  std::vector<Urn> out;
  for (const auto& [up, down] : edges_) {
    if (direction == LineageDirection::Upstream && down == urn) out.push_back(up);
    if (direction == LineageDirection::Downstream && up == urn) out.push_back(down);
  }
  return out;
}

namespace {

template <typename T, typename Fetch>
std::vector<T> drain_pages(Fetch fetch) {
  constexpr std::size_t kPage = 100;
  std::vector<T> all;
  for (std::size_t offset = 0;; offset += kPage) {
    auto page = fetch(PageRequest{offset, kPage});
    for (auto& item : page.items) all.push_back(std::move(item));
    if (page.items.empty() || offset + page.items.size() >= page.total) break;
  }
  return all;
}

// Content equality ignoring nothing but the soft-delete marker, which is
// always false for pulled records.
bool same_content(const EntityRecord& a, const std::optional<DatasetAspect>& aa, const EntityRecord& b,
                  const std::optional<DatasetAspect>& ba) {
  return a.name == b.name && a.description == b.description &&
         a.custom_properties == b.custom_properties && a.source_catalog_id == b.source_catalog_id &&
         a.created_at == b.created_at && a.updated_at == b.updated_at && aa == ba;
}

}  // namespace

FederationReport EntityStore::federate_pull(CatalogSource& source) {
  struct Pulled {
    EntityRecord record;
    std::optional<DatasetAspect> aspect;
  };
  std::vector<Pulled> domains;
  std::vector<Pulled> datasets;
  try {
    auto remote_domains = drain_pages<EntityRecord>([&](PageRequest p) { return source.list_domains(p); });
    for (auto& d : remote_domains) {
      auto entries = drain_pages<DatasetEntry>(
          [&](PageRequest p) { return source.list_datasets_in_domain(d.urn, p); });
      for (auto& e : entries) datasets.push_back({std::move(e.record), std::move(e.aspect)});
      domains.push_back({std::move(d), std::nullopt});
    }
  } catch (const Error& e) {
    throw Error(Errc::SourceUnreachable, e.what());
  } catch (const std::exception& e) {
    throw Error(Errc::SourceUnreachable, e.what());
  }

  for (const auto* group : {&domains, &datasets}) {
    for (const auto& p : *group) {
      try {
        check_record(p.record);
        if (p.aspect) check_aspect(*p.aspect);
      } catch (const Error& e) {
        throw Error(Errc::SourceUnreachable, "source returned an invalid record: " + std::string(e.what()));
      }
    }
  }

  std::unique_lock lock(mutex_);
  FederationReport report;
  auto apply = [&](const Pulled& p) {
    Entity incoming{p.record, p.aspect};
    incoming.record.deleted = false;
    if (incoming.record.source_catalog_id.empty()) incoming.record.source_catalog_id = "unknown";

    auto it = entities_.find(p.record.urn);
    if (it == entities_.end() || it->second.record.deleted) {
      persist_entity(emit(p.record.urn, ChangeKind::Create), incoming);
      ++report.created;
      return;
    }
    const auto& current = it->second;
    if (current.record.kind != incoming.record.kind) {
      ++report.conflicts;
      ++report.unchanged;
      return;
    }
    bool take_incoming = true;
    if (current.record.source_catalog_id != incoming.record.source_catalog_id) {
      ++report.conflicts;
      if (incoming.record.updated_at != current.record.updated_at)
        take_incoming = incoming.record.updated_at > current.record.updated_at;
      else
        take_incoming = incoming.record.source_catalog_id < current.record.source_catalog_id;
    }
    if (!take_incoming || same_content(current.record, current.aspect, incoming.record, incoming.aspect)) {
      ++report.unchanged;
      return;
    }
    persist_entity(emit(p.record.urn, ChangeKind::Update), incoming);
    ++report.updated;
  };
  for (const auto& d : domains) apply(d);
  for (const auto& d : datasets) {
    if (d.aspect) {
      auto parent = entities_.find(d.aspect->domain_urn);
      if (parent == entities_.end() || parent->second.record.deleted) continue;
    }
    apply(d);
  }
  log::info("store.federate", {{"created", std::to_string(report.created)},
                               {"updated", std::to_string(report.updated)},
                               {"unchanged", std::to_string(report.unchanged)},
                               {"conflicts", std::to_string(report.conflicts)}});
  return report;
}

std::vector<ChangeEvent> EntityStore::changes_since(std::uint64_t cursor) const {
  std::shared_lock lock(mutex_);
  auto it = std::upper_bound(events_.begin(), events_.end(), cursor,
                             [](std::uint64_t c, const ChangeEvent& e) { return c < e.seq_no; });
  return {it, events_.end()};
}

std::vector<ChangeEvent> EntityStore::wait_changes(std::uint64_t cursor,
                                                   std::chrono::milliseconds timeout) const {
  std::shared_lock lock(mutex_);
  feed_cv_.wait_for(lock, timeout,
                    [&] { return !events_.empty() && events_.back().seq_no > cursor; });
  auto it = std::upper_bound(events_.begin(), events_.end(), cursor,
                             [](std::uint64_t c, const ChangeEvent& e) { return c < e.seq_no; });
  return {it, events_.end()};
}

std::uint64_t EntityStore::last_seq_no() const {
  std::shared_lock lock(mutex_);
  return events_.empty() ? 0 : events_.back().seq_no;
}

std::vector<Urn> EntityStore::live_urns() const {
  std::shared_lock lock(mutex_);
  std::vector<Urn> out;
  for (const auto& [urn, e] : entities_)
    if (!e.record.deleted) out.push_back(urn);
  return out;
}

void EntityStore::snapshot() {
  std::unique_lock lock(mutex_);
  if (journal_) journal_->write_snapshot(*this);
}

std::vector<ChangeEvent> ChangeSubscription::poll() {
  auto events = store_->changes_since(cursor_);
  if (!events.empty()) cursor_ = events.back().seq_no;
  return events;
}

std::vector<ChangeEvent> ChangeSubscription::next(std::chrono::milliseconds timeout) {
  auto events = store_->wait_changes(cursor_, timeout);
  if (!events.empty()) cursor_ = events.back().seq_no;
  return events;
}

}  // namespace fedspace::store
