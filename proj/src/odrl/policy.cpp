#include "fedspace/odrl/policy.hpp"

#include <algorithm>
#include <charconv>

#include "fedspace/common/error.hpp"

namespace fedspace::odrl {

std::string_view to_string(PolicyKind k) noexcept {
  switch (k) {
    case PolicyKind::Set: return "Set";
    case PolicyKind::Offer: return "Offer";
    case PolicyKind::Agreement: return "Agreement";
  }
  return "Set";
}

std::string_view to_string(Action a) noexcept {
  switch (a) {
    case Action::Use: return "use";
    case Action::Read: return "read";
    case Action::Distribute: return "distribute";
  }
  return "use";
}

std::string_view to_string(LeftOperand o) noexcept {
  switch (o) {
    case LeftOperand::DateTime: return "dateTime";
    case LeftOperand::Count: return "count";
    case LeftOperand::Purpose: return "purpose";
    case LeftOperand::Spatial: return "spatial";
  }
  return "purpose";
}

std::string_view to_string(Operator o) noexcept {
  switch (o) {
    case Operator::Eq: return "eq";
    case Operator::Neq: return "neq";
    case Operator::Lt: return "lt";
    case Operator::Lteq: return "lteq";
    case Operator::Gt: return "gt";
    case Operator::Gteq: return "gteq";
  }
  return "eq";
}

std::string_view to_string(PolicyStatus s) noexcept {
  return s == PolicyStatus::Active ? "ACTIVE" : "INVALIDATED";
}

std::string_view to_string(Decision d) noexcept {
  switch (d) {
    case Decision::Permit: return "PERMIT";
    case Decision::Deny: return "DENY";
    case Decision::NotApplicable: return "NOT_APPLICABLE";
  }
  return "DENY";
}

std::optional<PolicyKind> parse_policy_kind(std::string_view s) noexcept {
  if (s == "Set") return PolicyKind::Set;
  if (s == "Offer") return PolicyKind::Offer;
  if (s == "Agreement") return PolicyKind::Agreement;
  return std::nullopt;
}

std::optional<Action> parse_action(std::string_view s) noexcept {
  if (s == "use") return Action::Use;
  if (s == "read") return Action::Read;
  if (s == "distribute") return Action::Distribute;
  return std::nullopt;
}

std::optional<LeftOperand> parse_left_operand(std::string_view s) noexcept {
  if (s == "dateTime") return LeftOperand::DateTime;
  if (s == "count") return LeftOperand::Count;
  if (s == "purpose") return LeftOperand::Purpose;
  if (s == "spatial") return LeftOperand::Spatial;
  return std::nullopt;
}

std::optional<Operator> parse_operator(std::string_view s) noexcept {
  if (s == "eq") return Operator::Eq;
  if (s == "neq") return Operator::Neq;
  if (s == "lt") return Operator::Lt;
  if (s == "lteq") return Operator::Lteq;
  if (s == "gt") return Operator::Gt;
  if (s == "gteq") return Operator::Gteq;
  return std::nullopt;
}

std::optional<PolicyStatus> parse_policy_status(std::string_view s) noexcept {
  if (s == "ACTIVE") return PolicyStatus::Active;
  if (s == "INVALIDATED") return PolicyStatus::Invalidated;
  return std::nullopt;
}

bool operator_applies(LeftOperand left, Operator op) noexcept {
  if (op == Operator::Eq || op == Operator::Neq) return true;
  return left == LeftOperand::DateTime || left == LeftOperand::Count;
}

bool same_terms(const Policy& a, const Policy& b) {
  return a.target == b.target && a.assigner == b.assigner && a.rules == b.rules;
}

void check_policy(const Policy& p) {
  if (p.uid.empty()) throw Error(Errc::InvalidArgument, "policy uid is empty");
  if (!p.target.is_dataset()) throw Error(Errc::InvalidArgument, "policy target must be a dataset urn: " + p.target.str());
  if (p.kind == PolicyKind::Agreement && (!p.assignee || p.assignee->empty()))
    throw Error(Errc::InvalidArgument, "agreement without assignee");
  if (p.kind == PolicyKind::Offer && p.assigner.empty())
    throw Error(Errc::InvalidArgument, "offer without assigner");
  if (p.rules.permissions.empty() && p.rules.prohibitions.empty())
    throw Error(Errc::InvalidRuleSet, "policy has neither permissions nor prohibitions");
  for (const auto* group : {&p.rules.permissions, &p.rules.prohibitions, &p.rules.obligations}) {
    for (const auto& rule : *group) {
      for (const auto& c : rule.constraints) {
        if (!operator_applies(c.left_operand, c.op))
          throw Error(Errc::InvalidRuleSet, "operator " + std::string(to_string(c.op)) + " does not apply to " +
                                                std::string(to_string(c.left_operand)));
      }
    }
  }
}

namespace {

json rules_to_json(const std::vector<Rule>& rules) {
  json arr = json::array();
  for (const auto& r : rules) {
    json constraints = json::array();
    for (const auto& c : r.constraints)
      constraints.push_back(json{{"leftOperand", to_string(c.left_operand)},
                                 {"operator", to_string(c.op)},
                                 {"rightOperand", c.right_operand}});
    arr.push_back(json{{"action", to_string(r.action)}, {"constraint", std::move(constraints)}});
  }
  return arr;
}

std::string str_at(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw Error(Errc::SchemaError, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

template <typename E, typename Parse>
E enum_at(const json& j, const char* key, Parse parse) {
  auto s = str_at(j, key);
  auto v = parse(s);
  if (!v) throw Error(Errc::SchemaError, std::string("bad value for '") + key + "': " + s);
  return *v;
}

std::vector<Rule> rule_list_from_json(const json& j, const char* key) {
  std::vector<Rule> out;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) throw Error(Errc::SchemaError, std::string("'") + key + "' must be a list");
  for (const auto& r : *it) {
    if (!r.is_object()) throw Error(Errc::SchemaError, "rule must be an object");
    Rule rule{.action = enum_at<Action>(r, "action", parse_action), .constraints = {}};
    if (auto c = r.find("constraint"); c != r.end() && !c->is_null()) {
      if (!c->is_array()) throw Error(Errc::SchemaError, "'constraint' must be a list");
      for (const auto& cj : *c) {
        if (!cj.is_object()) throw Error(Errc::SchemaError, "constraint must be an object");
        rule.constraints.push_back(Constraint{enum_at<LeftOperand>(cj, "leftOperand", parse_left_operand),
                                              enum_at<Operator>(cj, "operator", parse_operator),
                                              str_at(cj, "rightOperand")});
      }
    }
    out.push_back(std::move(rule));
  }
  return out;
}

}  // namespace

json policy_to_json(const Policy& p) {
  json j{{"uid", p.uid},
         {"@type", to_string(p.kind)},
         {"target", p.target.str()},
         {"assigner", p.assigner},
         {"permission", rules_to_json(p.rules.permissions)},
         {"prohibition", rules_to_json(p.rules.prohibitions)},
         {"obligation", rules_to_json(p.rules.obligations)}};
  if (p.assignee) j["assignee"] = *p.assignee;
  return j;
}

RuleSet rules_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "rule set must be an object");
  return RuleSet{rule_list_from_json(j, "permission"), rule_list_from_json(j, "prohibition"),
                 rule_list_from_json(j, "obligation")};
}

Policy policy_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "policy must be an object");
  auto target = store::Urn::try_parse(str_at(j, "target"));
  if (!target) throw Error(Errc::SchemaError, "policy target is not a urn");
  Policy p{.uid = str_at(j, "uid"),
           .kind = enum_at<PolicyKind>(j, "@type", parse_policy_kind),
           .target = *target,
           .assigner = j.contains("assigner") && !j.at("assigner").is_null() ? str_at(j, "assigner") : "",
           .assignee = std::nullopt,
           .rules = rules_from_json(j)};
  if (auto it = j.find("assignee"); it != j.end() && !it->is_null()) p.assignee = str_at(j, "assignee");
  return p;
}

json policy_record_to_json(const Policy& p) {
  json j{{"policy", policy_to_json(p)},
         {"status", to_string(p.status)},
         {"createdAt", format_timestamp(p.created_at)}};
  j["sourceOffer"] = p.source_offer ? json(*p.source_offer) : json(nullptr);
  return j;
}

Policy policy_record_from_json(const json& j) {
  if (!j.is_object() || !j.contains("policy")) throw Error(Errc::SchemaError, "policy record must wrap 'policy'");
  auto p = policy_from_json(j.at("policy"));
  p.status = enum_at<PolicyStatus>(j, "status", parse_policy_status);
  auto t = parse_timestamp(str_at(j, "createdAt"));
  if (!t) throw Error(Errc::SchemaError, "createdAt is not a timestamp");
  p.created_at = *t;
  if (auto it = j.find("sourceOffer"); it != j.end() && it->is_string()) p.source_offer = it->get<std::string>();
  return p;
}

namespace {

std::optional<long long> parse_integer(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

template <typename T>
bool compare(const T& lhs, Operator op, const T& rhs) {
  switch (op) {
    case Operator::Eq: return lhs == rhs;
    case Operator::Neq: return lhs != rhs;
    case Operator::Lt: return lhs < rhs;
    case Operator::Lteq: return lhs <= rhs;
    case Operator::Gt: return lhs > rhs;
    case Operator::Gteq: return lhs >= rhs;
  }
  return false;
}

bool all_satisfied(const Rule& rule, const RequestContext& ctx) {
  return std::all_of(rule.constraints.begin(), rule.constraints.end(),
                     [&](const Constraint& c) { return constraint_satisfied(c, ctx); });
}

}  // namespace

bool constraint_satisfied(const Constraint& c, const RequestContext& ctx) {
  auto it = ctx.attributes.find(c.left_operand);
  if (it == ctx.attributes.end()) return false;
  if (!operator_applies(c.left_operand, c.op)) return false;
  const std::string& actual = it->second;
  switch (c.left_operand) {
    case LeftOperand::DateTime: {
      auto lhs = parse_timestamp(actual);
      auto rhs = parse_timestamp(c.right_operand);
      return lhs && rhs && compare(*lhs, c.op, *rhs);
    }
    case LeftOperand::Count: {
      auto lhs = parse_integer(actual);
      auto rhs = parse_integer(c.right_operand);
      return lhs && rhs && compare(*lhs, c.op, *rhs);
    }
    case LeftOperand::Purpose:
    case LeftOperand::Spatial:
      return compare(actual, c.op, c.right_operand);
  }
  return false;
}

Decision evaluate(const Policy& policy, const RequestContext& ctx) {
  if (policy.status == PolicyStatus::Invalidated) throw Error(Errc::PolicyInvalidated, policy.uid);
  bool applicable = false;
  for (const auto& rule : policy.rules.prohibitions) {
    if (rule.action != ctx.action) continue;
    applicable = true;
    if (all_satisfied(rule, ctx)) return Decision::Deny;
  }
  for (const auto& rule : policy.rules.permissions) {
    if (rule.action != ctx.action) continue;
    applicable = true;
    if (all_satisfied(rule, ctx)) return Decision::Permit;
  }
  return applicable ? Decision::Deny : Decision::NotApplicable;
}

}  // namespace fedspace::odrl
