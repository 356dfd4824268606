#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "fedspace/common/time.hpp"
#include "fedspace/odrl/policy.hpp"

namespace fedspace::odrl {

/// Confirms a policy target is registered and live before anything binds to it.
class TargetResolver {
 public:
  virtual ~TargetResolver() = default;
  /// Throws TargetNotFound when the urn cannot be resolved.
  virtual void require_live_target(const store::Urn& urn) = 0;
};

/// Policies indexed by uid and by target. Mutations are serialized; reads
/// share a lock. With a directory, each policy is kept as one JSON file.
class PolicyStore {
 public:
  explicit PolicyStore(std::shared_ptr<const Clock> clock);
  static std::unique_ptr<PolicyStore> open(const std::filesystem::path& dir, std::shared_ptr<const Clock> clock);

  Policy create_policy(PolicyKind kind, const store::Urn& target, std::string assigner, RuleSet rules,
                       TargetResolver& resolver, std::optional<std::string> assignee = std::nullopt);

  [[nodiscard]] std::optional<Policy> get(const std::string& uid) const;

  /// Every policy bound to `target`, any status, newest first.
  [[nodiscard]] std::vector<Policy> list_policies_by_target(const store::Urn& target) const;

  [[nodiscard]] std::vector<Policy> all() const;

  /// New agreement copying the offer's terms, bound to `assignee`.
  Policy make_agreement(const Policy& offer, const std::string& assignee);

  /// ACTIVE -> INVALIDATED for every policy on `target`; returns how many changed.
  std::size_t invalidate_by_target(const store::Urn& target);

 private:
  struct Entry {
    Policy policy;
    std::uint64_t seq;
  };

  Policy insert_locked(Policy policy);
  void persist(const Entry& entry) const;

  std::shared_ptr<const Clock> clock_;
  std::optional<std::filesystem::path> dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry> by_uid_;
  std::multimap<store::Urn, std::string> by_target_;
  std::uint64_t next_seq_ = 1;
};

}  // namespace fedspace::odrl
