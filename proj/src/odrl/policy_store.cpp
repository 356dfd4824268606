#include "fedspace/odrl/policy_store.hpp"

#include <algorithm>
#include <cctype>

#include "fedspace/common/error.hpp"
#include "fedspace/common/log.hpp"
#include "fedspace/common/util.hpp"

namespace fedspace::odrl {

namespace {

std::string file_name(const std::string& uid) {
  std::string out;
  for (char c : uid) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_');
  return out + ".json";
}

}  // namespace

PolicyStore::PolicyStore(std::shared_ptr<const Clock> clock) : clock_(std::move(clock)) {}

std::unique_ptr<PolicyStore> PolicyStore::open(const std::filesystem::path& dir, std::shared_ptr<const Clock> clock) {
  std::filesystem::create_directories(dir);
  auto store = std::make_unique<PolicyStore>(std::move(clock));
  store->dir_ = dir;
  std::vector<Entry> loaded;
  for (const auto& f : std::filesystem::directory_iterator(dir)) {
    if (f.path().extension() != ".json") continue;
    auto doc = json::parse(read_file(f.path()));
    loaded.push_back(Entry{policy_record_from_json(doc), doc.value("seq", std::uint64_t{0})});
  }
  std::sort(loaded.begin(), loaded.end(), [](const Entry& a, const Entry& b) { return a.seq < b.seq; });
  for (auto& e : loaded) {
    store->next_seq_ = std::max(store->next_seq_, e.seq + 1);
    store->by_target_.emplace(e.policy.target, e.policy.uid);
    auto uid = e.policy.uid;
    store->by_uid_.emplace(std::move(uid), std::move(e));
  }
  return store;
}

void PolicyStore::persist(const Entry& entry) const {
  if (!dir_) return;
  auto doc = policy_record_to_json(entry.policy);
  doc["seq"] = entry.seq;
  write_file_atomic(*dir_ / file_name(entry.policy.uid), doc.dump(2));
}

Policy PolicyStore::insert_locked(Policy policy) {
  Entry entry{std::move(policy), next_seq_++};
  persist(entry);
  by_target_.emplace(entry.policy.target, entry.policy.uid);
  auto result = entry.policy;
  by_uid_.emplace(entry.policy.uid, std::move(entry));
  return result;
}

Policy PolicyStore::create_policy(PolicyKind kind, const store::Urn& target, std::string assigner, RuleSet rules,
                                  TargetResolver& resolver, std::optional<std::string> assignee) {
  Policy p{.uid = random_uuid_urn(),
           .kind = kind,
           .target = target,
           .assigner = std::move(assigner),
           .assignee = std::move(assignee),
           .rules = std::move(rules),
           .status = PolicyStatus::Active,
           .created_at = clock_->now()};
  check_policy(p);
  // Resolution happens outside the lock; it may call across the network.
  resolver.require_live_target(target);

  std::unique_lock lock(mutex_);
  auto created = insert_locked(std::move(p));
  log::info("policy.created", {{"uid", created.uid}, {"kind", std::string(to_string(created.kind))},
                               {"target", created.target.str()}});
  return created;
}

std::optional<Policy> PolicyStore::get(const std::string& uid) const {
  std::shared_lock lock(mutex_);
  auto it = by_uid_.find(uid);
  if (it == by_uid_.end()) return std::nullopt;
  return it->second.policy;
}

std::vector<Policy> PolicyStore::list_policies_by_target(const store::Urn& target) const {
  std::shared_lock lock(mutex_);
  std::vector<const Entry*> hits;
  auto [lo, hi] = by_target_.equal_range(target);
  for (auto it = lo; it != hi; ++it) hits.push_back(&by_uid_.at(it->second));
  std::sort(hits.begin(), hits.end(), [](const Entry* a, const Entry* b) {
    if (a->policy.created_at != b->policy.created_at) return a->policy.created_at > b->policy.created_at;
    return a->seq > b->seq;
  });
  std::vector<Policy> out;
  for (const auto* e : hits) out.push_back(e->policy);
  return out;
}

std::vector<Policy> PolicyStore::all() const {
  std::shared_lock lock(mutex_);
  std::vector<Policy> out;
  for (const auto& [uid, e] : by_uid_) out.push_back(e.policy);
  return out;
}

Policy PolicyStore::make_agreement(const Policy& offer, const std::string& assignee) {
  std::unique_lock lock(mutex_);
  if (offer.kind != PolicyKind::Offer) throw Error(Errc::NotAnOffer, offer.uid);
  auto status = offer.status;
  if (auto it = by_uid_.find(offer.uid); it != by_uid_.end()) status = it->second.policy.status;
  if (status != PolicyStatus::Active) throw Error(Errc::OfferInvalidated, offer.uid);
  if (assignee.empty()) throw Error(Errc::InvalidArgument, "agreement assignee is empty");

  Policy agreement = offer;
  agreement.uid = random_uuid_urn();
  agreement.kind = PolicyKind::Agreement;
  agreement.assignee = assignee;
  agreement.status = PolicyStatus::Active;
  agreement.created_at = clock_->now();
  agreement.source_offer = offer.uid;
  auto created = insert_locked(std::move(agreement));
  log::info("policy.agreement", {{"uid", created.uid}, {"offer", offer.uid}, {"assignee", assignee}});
  return created;
}

std::size_t PolicyStore::invalidate_by_target(const store::Urn& target) {
  std::unique_lock lock(mutex_);
  std::size_t count = 0;
  auto [lo, hi] = by_target_.equal_range(target);
  for (auto it = lo; it != hi; ++it) {
    auto& entry = by_uid_.at(it->second);
    if (entry.policy.status != PolicyStatus::Active) continue;
    entry.policy.status = PolicyStatus::Invalidated;
    persist(entry);
    ++count;
  }
  if (count > 0) log::info("policy.invalidated", {{"target", target.str()}, {"count", std::to_string(count)}});
  return count;
}

}  // namespace fedspace::odrl
