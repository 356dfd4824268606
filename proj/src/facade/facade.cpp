#include "fedspace/facade/facade.hpp"

#include <cstdlib>

#include "fedspace/common/error.hpp"
#include "fedspace/common/log.hpp"

namespace fedspace::facade {

FacadeConfig facade_config_from_env(FacadeConfig base) {
  auto env = [](const char* key) -> std::optional<std::string> {
    const char* v = std::getenv(key);
    if (!v) return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("FACADE_STORE_URL")) base.store_url = *v;
  if (auto v = env("FACADE_CLIENT_ID")) base.credentials.client_id = *v;
  if (auto v = env("FACADE_CLIENT_SECRET")) base.credentials.client_secret = *v;
  if (auto v = env("FACADE_CACHE_TTL_SECONDS")) base.cache_ttl = std::chrono::seconds(std::stoll(*v));
  if (auto v = env("FACADE_PAGE_SIZE")) base.page_size = static_cast<std::size_t>(std::stoull(*v));
  if (base.page_size == 0) throw Error(Errc::InvalidArgument, "FACADE_PAGE_SIZE must be >= 1");
  return base;
}

dcat::Catalog map_domain(const store::EntityRecord& domain, const std::vector<store::DatasetEntry>& datasets) {
  dcat::Catalog c{.id = domain.urn, .title = domain.name, .description = domain.description};
  for (const auto& e : datasets) {
    auto service_id = "access:" + e.record.urn.str();
    c.services.push_back(dcat::DataService{
        .id = service_id,
        .endpoint_url = e.aspect.access_endpoint,
        .endpoint_description = "authScheme=" + std::string(store::to_string(e.aspect.auth_scheme)) +
                                "; distributionType=" + std::string(store::to_string(e.aspect.distribution_type))});
    c.datasets.push_back(dcat::Dataset{.id = e.record.urn,
                                       .title = e.record.name,
                                       .description = e.record.description,
                                       .version = e.aspect.version_tag,
                                       .distributions = {dcat::Distribution{published_format(e.aspect.format_hint), service_id}}});
  }
  return c;
}

Facade::Facade(std::shared_ptr<StoreQueryClient> client, FacadeConfig config, std::shared_ptr<const Clock> clock)
    : client_(std::move(client)), config_(std::move(config)), clock_(std::move(clock)) {
  if (config_.page_size == 0) throw Error(Errc::InvalidArgument, "page size must be >= 1");
}

SessionToken Facade::authenticate(const Credentials& credentials) { return client_->authenticate(credentials); }

SessionToken Facade::session() {
  std::lock_guard lock(session_mutex_);
  // A little slack so a token never lapses between check and use.
  if (!session_ || session_->expires_at <= clock_->now() + std::chrono::seconds(5))
    session_ = client_->authenticate(config_.credentials);
  return *session_;
}

void Facade::reset_session() {
  std::lock_guard lock(session_mutex_);
  session_.reset();
}

void Facade::check_live(const SessionToken& token) const {
  if (token.expires_at <= clock_->now()) throw Error(Errc::TokenExpired, "facade session");
}

std::optional<Facade::Value> Facade::cached(const std::string& key) {
  if (!config_.cache_enabled) return std::nullopt;
  std::lock_guard lock(mutex_);
  auto it = cache_.find(key);
  if (it == cache_.end()) return std::nullopt;
  if (clock_->now() >= it->second.fetched_at + it->second.ttl) {
    cache_.erase(it);
    return std::nullopt;
  }
  return it->second.value;
}

void Facade::remember(const std::string& key, Value value, std::set<store::Urn> covers, bool listing,
                      std::uint64_t generation) {
  if (!config_.cache_enabled) return;
  std::lock_guard lock(mutex_);
  // An invalidation raced with this fetch; the value may predate it.
  if (generation != generation_) return;
  cache_.insert_or_assign(key, CacheEntry{std::move(value), clock_->now(), config_.cache_ttl, std::move(covers), listing});
}

template <typename T, typename Fetch>
std::vector<T> Facade::fetch_all(Fetch fetch) const {
  std::vector<T> all;
  for (std::size_t offset = 0;; offset += config_.page_size) {
    auto page = fetch(PageRequest{offset, config_.page_size});
    for (auto& item : page.items) all.push_back(std::move(item));
    if (page.items.empty() || offset + page.items.size() >= page.total) break;
  }
  return all;
}

std::vector<CatalogSummary> Facade::list_catalogs(const SessionToken& token) {
  check_live(token);
  const std::string key = "catalogs";
  if (auto hit = cached(key)) return std::get<std::vector<CatalogSummary>>(*hit);

  std::uint64_t generation;
  {
    std::lock_guard lock(mutex_);
    generation = generation_;
  }
  auto domains = fetch_all<store::EntityRecord>(
      [&](PageRequest p) { return client_->list_domains(token.token, p); });
  std::vector<CatalogSummary> out;
  std::set<store::Urn> covers;
  for (const auto& d : domains) {
    auto count = client_->list_datasets_in_domain(token.token, d.urn, PageRequest{0, 1}).total;
    out.push_back(CatalogSummary{d.urn, d.name, count});
    covers.insert(d.urn);
  }
  remember(key, out, std::move(covers), true, generation);
  return out;
}

OperationalMetadata Facade::resolve_dataset(const SessionToken& token, const store::Urn& urn, bool fresh) {
  check_live(token);
  if (!urn.is_dataset()) throw Error(Errc::TargetNotFound, "not a dataset urn: " + urn.str());
  const std::string key = "dataset:" + urn.str();
  if (!fresh) {
    if (auto hit = cached(key)) return std::get<OperationalMetadata>(*hit);
  }
  std::uint64_t generation;
  {
    std::lock_guard lock(mutex_);
    generation = generation_;
  }
  auto meta = client_->operational_metadata(token.token, urn);
  remember(key, meta, {urn}, false, generation);
  return meta;
}

dcat::Catalog Facade::to_dcat(const SessionToken& token, const store::Urn& domain) {
  check_live(token);
  const std::string key = "dcat:" + domain.str();
  if (auto hit = cached(key)) return std::get<dcat::Catalog>(*hit);
  std::uint64_t generation;
  {
    std::lock_guard lock(mutex_);
    generation = generation_;
  }
  auto record = client_->get_domain(token.token, domain);
  if (!record) throw Error(Errc::UnknownUrn, domain.str());
  auto datasets = fetch_all<store::DatasetEntry>(
      [&](PageRequest p) { return client_->list_datasets_in_domain(token.token, domain, p); });
  auto catalog = map_domain(*record, datasets);
  std::set<store::Urn> covers{domain};
  for (const auto& d : datasets) covers.insert(d.record.urn);
  remember(key, catalog, std::move(covers), true, generation);
  return catalog;
}

void Facade::on_change(const store::ChangeEvent& event) {
  Invalidator forward;
  {
    std::lock_guard lock(mutex_);
    if (event.seq_no <= last_seq_) return;
    last_seq_ = event.seq_no;
    ++generation_;
    for (auto it = cache_.begin(); it != cache_.end();) {
      bool stale = it->second.listing || it->second.covers.count(event.urn) > 0;
      it = stale ? cache_.erase(it) : std::next(it);
    }
    if (event.kind == store::ChangeKind::Delete && event.urn.is_dataset()) forward = invalidator_;
  }
  if (forward) {
    auto n = forward(event.urn);
    log::info("facade.target_deleted", {{"urn", event.urn.str()}, {"seq", std::to_string(event.seq_no)},
                                        {"invalidated", std::to_string(n)}});
  }
}

std::size_t Facade::drain_changes() {
  std::lock_guard drain(drain_mutex_);
  auto events = with_session([&](const SessionToken& s) { return client_->changes_since(s.token, last_seq_no()); });
  std::size_t fresh = 0;
  for (const auto& ev : events) {
    auto before = last_seq_no();
    on_change(ev);
    if (last_seq_no() != before) ++fresh;
  }
  return fresh;
}

void Facade::set_invalidator(Invalidator invalidator) {
  std::lock_guard lock(mutex_);
  invalidator_ = std::move(invalidator);
}

void Facade::require_live_target(const store::Urn& urn) {
  with_session([&](const SessionToken& s) { return resolve_dataset(s, urn, true); });
}

std::uint64_t Facade::last_seq_no() const {
  std::lock_guard lock(mutex_);
  return last_seq_;
}

}  // namespace fedspace::facade
