#include "fedspace/facade/store_client.hpp"

#include "fedspace/common/error.hpp"

namespace fedspace::facade {

OperationalMetadata to_operational(const store::EntityRecord& record, const store::DatasetAspect& aspect) {
  return OperationalMetadata{.urn = record.urn,
                             .title = record.name,
                             .domain_urn = aspect.domain_urn,
                             .distribution_type = aspect.distribution_type,
                             .access_endpoint = aspect.access_endpoint,
                             .auth_scheme = aspect.auth_scheme,
                             .format_hint = aspect.format_hint};
}

LocalStoreClient::LocalStoreClient(store::EntityStore& store, std::vector<Credentials> allowed,
                                   std::chrono::seconds token_lifetime, std::shared_ptr<const Clock> clock)
    : store_(store), allowed_(std::move(allowed)), lifetime_(token_lifetime), clock_(std::move(clock)) {}

SessionToken LocalStoreClient::authenticate(const Credentials& credentials) {
  bool ok = false;
  for (const auto& c : allowed_)
    ok = ok || (c.client_id == credentials.client_id && c.client_secret == credentials.client_secret);
  if (!ok) throw Error(Errc::BadCredentials, credentials.client_id);
  SessionToken t{random_hex(24), clock_->now() + lifetime_};
  std::lock_guard lock(tokens_mutex_);
  // Expired tokens are pruned on issue so the map stays bounded.
  auto now = clock_->now();
  for (auto it = tokens_.begin(); it != tokens_.end();) it = it->second <= now ? tokens_.erase(it) : std::next(it);
  tokens_[t.token] = t.expires_at;
  return t;
}

void LocalStoreClient::validate(const std::string& token) {
  std::lock_guard lock(tokens_mutex_);
  auto it = tokens_.find(token);
  if (it == tokens_.end() || it->second <= clock_->now()) throw Error(Errc::TokenExpired, "store session");
}

Page<store::EntityRecord> LocalStoreClient::list_domains(const std::string& token, PageRequest page) {
  validate(token);
  ++queries_;
  return store_.list_domains(page);
}

std::optional<store::EntityRecord> LocalStoreClient::get_domain(const std::string& token, const store::Urn& urn) {
  validate(token);
  ++queries_;
  auto r = store_.get_entity(urn);
  if (!r || r->kind != store::EntityKind::Domain) return std::nullopt;
  return r;
}

Page<store::DatasetEntry> LocalStoreClient::list_datasets_in_domain(const std::string& token,
                                                                    const store::Urn& domain, PageRequest page) {
  validate(token);
  ++queries_;
  return store_.list_datasets_in_domain(domain, page);
}

OperationalMetadata LocalStoreClient::operational_metadata(const std::string& token, const store::Urn& urn) {
  validate(token);
  ++queries_;
  auto record = store_.get_entity(urn);
  if (!record || record->kind != store::EntityKind::Dataset) throw Error(Errc::TargetNotFound, urn.str());
  auto aspect = store_.get_aspect(urn);
  if (!aspect) throw Error(Errc::TargetNotFound, "no distribution registered for " + urn.str());
  return to_operational(*record, *aspect);
}

std::vector<store::ChangeEvent> LocalStoreClient::changes_since(const std::string& token, std::uint64_t cursor) {
  validate(token);
  ++queries_;
  return store_.changes_since(cursor);
}

}  // namespace fedspace::facade
