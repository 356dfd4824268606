#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fedspace/common/time.hpp"
#include "fedspace/store/urn.hpp"

namespace fedspace::odrl {

using nlohmann::json;

enum class PolicyKind { Set, Offer, Agreement };
enum class Action { Use, Read, Distribute };
enum class LeftOperand { DateTime, Count, Purpose, Spatial };
enum class Operator { Eq, Neq, Lt, Lteq, Gt, Gteq };
enum class PolicyStatus { Active, Invalidated };
enum class Decision { Permit, Deny, NotApplicable };

std::string_view to_string(PolicyKind k) noexcept;
std::string_view to_string(Action a) noexcept;
std::string_view to_string(LeftOperand o) noexcept;
std::string_view to_string(Operator o) noexcept;
std::string_view to_string(PolicyStatus s) noexcept;
std::string_view to_string(Decision d) noexcept;

std::optional<PolicyKind> parse_policy_kind(std::string_view s) noexcept;
std::optional<Action> parse_action(std::string_view s) noexcept;
std::optional<LeftOperand> parse_left_operand(std::string_view s) noexcept;
std::optional<Operator> parse_operator(std::string_view s) noexcept;
std::optional<PolicyStatus> parse_policy_status(std::string_view s) noexcept;

/// Ordering operators are only meaningful for dateTime and count.
bool operator_applies(LeftOperand left, Operator op) noexcept;

struct Constraint {
  LeftOperand left_operand;
  Operator op;
  /// ISO-8601 UTC for dateTime, a decimal integer for count, a symbol otherwise.
  std::string right_operand;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct Rule {
  Action action;
  std::vector<Constraint> constraints;

  friend bool operator==(const Rule&, const Rule&) = default;
};

struct RuleSet {
  std::vector<Rule> permissions;
  std::vector<Rule> prohibitions;
  std::vector<Rule> obligations;

  friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

struct Policy {
  std::string uid;
  PolicyKind kind;
  store::Urn target;
  std::string assigner;
  std::optional<std::string> assignee;
  RuleSet rules;
  PolicyStatus status = PolicyStatus::Active;
  Timestamp created_at{};
  /// For agreements: uid of the offer they were made from.
  std::optional<std::string> source_offer;

  friend bool operator==(const Policy&, const Policy&) = default;
};

/// Same target, assigner and rules; what an agreement must preserve from its offer.
bool same_terms(const Policy& a, const Policy& b);

struct RequestContext {
  Action action;
  std::string participant;
  std::map<LeftOperand, std::string> attributes;
};

/// Checks the structural invariants; throws InvalidRuleSet or InvalidArgument.
void check_policy(const Policy& policy);

/// Wire document: uid, @type, target, assigner, assignee, permission,
/// prohibition, obligation. Status and bookkeeping are not part of it.
json policy_to_json(const Policy& policy);

/// Parses a wire document. Throws SchemaError (or MalformedUrn for the target).
Policy policy_from_json(const json& j);

RuleSet rules_from_json(const json& j);

/// Wire document plus status, creation time and offer linkage, as served by the admin API.
json policy_record_to_json(const Policy& policy);
Policy policy_record_from_json(const json& j);

/// Pure decision: prohibitions win, then permissions; deny by default.
/// Throws PolicyInvalidated for invalidated policies.
Decision evaluate(const Policy& policy, const RequestContext& ctx);

/// Whether one constraint holds under `ctx`; missing or unreadable
/// attributes make it false.
bool constraint_satisfied(const Constraint& constraint, const RequestContext& ctx);

}  // namespace fedspace::odrl
