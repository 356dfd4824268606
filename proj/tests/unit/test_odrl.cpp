#include <doctest.h>

#include <filesystem>

#include "fedspace/common/util.hpp"
#include "fedspace/odrl/policy.hpp"
#include "fedspace/odrl/policy_store.hpp"
#include "generators.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace fedspace;
using namespace fedspace::odrl;

namespace {

struct StubResolver final : TargetResolver {
  std::set<store::Urn> live;
  void require_live_target(const store::Urn& urn) override {
    if (!live.contains(urn)) throw Error(Errc::TargetNotFound, urn.str());
  }
};

const store::Urn kTarget = unit::dataset_urn("traffic.counts");

Policy offer(RuleSet rules) {
  return Policy{.uid = "urn:uuid:offer-1",
                .kind = PolicyKind::Offer,
                .target = kTarget,
                .assigner = "urn:connector:provider",
                .rules = std::move(rules)};
}

RequestContext ctx(Action a, std::map<LeftOperand, std::string> attrs = {}) {
  return RequestContext{a, "urn:connector:consumer", std::move(attrs)};
}

}  // namespace

TEST_CASE("unconstrained permission permits only its action") {
  auto p = offer({.permissions = {{Action::Use, {}}}});
  CHECK(evaluate(p, ctx(Action::Use)) == Decision::Permit);
  CHECK(evaluate(p, ctx(Action::Distribute)) == Decision::NotApplicable);
}

TEST_CASE("dateTime window") {
  auto p = offer({.permissions = {{Action::Use, {{LeftOperand::DateTime, Operator::Lt, "2026-12-31T23:59:59.000Z"}}}}});
  CHECK(evaluate(p, ctx(Action::Use, {{LeftOperand::DateTime, "2026-03-01T09:00:00.000Z"}})) == Decision::Permit);
  CHECK(evaluate(p, ctx(Action::Use, {{LeftOperand::DateTime, "2027-01-01T00:00:00.000Z"}})) == Decision::Deny);
  // A missing attribute fails the constraint.
  CHECK(evaluate(p, ctx(Action::Use)) == Decision::Deny);
}

TEST_CASE("prohibition wins over permission") {
  auto p = offer({.permissions = {{Action::Use, {}}},
                  .prohibitions = {{Action::Use, {{LeftOperand::Purpose, Operator::Eq, "commercial"}}}}});
  CHECK(evaluate(p, ctx(Action::Use, {{LeftOperand::Purpose, "commercial"}})) == Decision::Deny);
  CHECK(evaluate(p, ctx(Action::Use, {{LeftOperand::Purpose, "research"}})) == Decision::Permit);
}

TEST_CASE("count and spatial constraints") {
  auto p = offer({.permissions = {{Action::Read,
                                   {{LeftOperand::Count, Operator::Lteq, "10"},
                                    {LeftOperand::Spatial, Operator::Eq, "EU"}}}}});
  CHECK(evaluate(p, ctx(Action::Read, {{LeftOperand::Count, "10"}, {LeftOperand::Spatial, "EU"}})) == Decision::Permit);
  CHECK(evaluate(p, ctx(Action::Read, {{LeftOperand::Count, "11"}, {LeftOperand::Spatial, "EU"}})) == Decision::Deny);
  CHECK(evaluate(p, ctx(Action::Read, {{LeftOperand::Count, "x"}, {LeftOperand::Spatial, "EU"}})) == Decision::Deny);
  CHECK(evaluate(p, ctx(Action::Read, {{LeftOperand::Count, "1"}, {LeftOperand::Spatial, "eu"}})) == Decision::Deny);
}

TEST_CASE("obligations alone decide nothing") {
  auto p = offer({.prohibitions = {{Action::Distribute, {}}}, .obligations = {{Action::Use, {}}}});
  CHECK(evaluate(p, ctx(Action::Use)) == Decision::NotApplicable);
  CHECK(evaluate(p, ctx(Action::Distribute)) == Decision::Deny);
}

TEST_CASE("invalidated policy cannot be evaluated") {
  auto p = offer({.permissions = {{Action::Use, {}}}});
  p.status = PolicyStatus::Invalidated;
  CHECK_ERRC(evaluate(p, ctx(Action::Use)), Errc::PolicyInvalidated);
}

TEST_CASE("structural checks") {
  CHECK_ERRC(check_policy(offer({})), Errc::InvalidRuleSet);
  CHECK_ERRC(check_policy(offer({.permissions = {{Action::Use, {{LeftOperand::Purpose, Operator::Lt, "a"}}}}})),
             Errc::InvalidRuleSet);
  auto agreement = offer({.permissions = {{Action::Use, {}}}});
  agreement.kind = PolicyKind::Agreement;
  CHECK_ERRC(check_policy(agreement), Errc::InvalidArgument);
}

TEST_CASE("wire and record documents round-trip") {
  testkit::Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    auto p = testkit::random_policy(rng);
    CHECK(same_terms(policy_from_json(policy_to_json(p)), p));
    CHECK(policy_record_from_json(policy_record_to_json(p)) == p);
  }
  auto j = policy_to_json(offer({.permissions = {{Action::Use, {}}}}));
  j["target"] = "not-a-urn";
  CHECK_ERRC(policy_from_json(j), Errc::SchemaError);
}

TEST_CASE("randomized: agrees with the naive evaluator") {
  testkit::Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    auto p = testkit::random_policy(rng);
    auto c = testkit::random_context(rng);
    CHECK(evaluate(p, c) == testkit::naive_evaluate(p, c));
  }
}

TEST_CASE("policy store: create, list, agree, invalidate") {
  auto clock = unit::clock_at();
  PolicyStore store(clock);
  StubResolver resolver;
  RuleSet use{.permissions = {{Action::Use, {}}}};

  CHECK_ERRC(store.create_policy(PolicyKind::Offer, kTarget, "urn:connector:provider", use, resolver),
             Errc::TargetNotFound);
  resolver.live.insert(kTarget);
  auto first = store.create_policy(PolicyKind::Offer, kTarget, "urn:connector:provider", use, resolver);
  clock->advance(std::chrono::seconds(1));
  auto second = store.create_policy(PolicyKind::Set, kTarget, "urn:connector:provider", use, resolver);
  CHECK(first.uid.rfind("urn:uuid:", 0) == 0);
  CHECK(first.uid != second.uid);

  auto listed = store.list_policies_by_target(kTarget);
  REQUIRE(listed.size() == 2);
  CHECK(listed[0].uid == second.uid);

  auto agreement = store.make_agreement(first, "urn:connector:consumer");
  CHECK(agreement.kind == PolicyKind::Agreement);
  CHECK(agreement.assignee == "urn:connector:consumer");
  CHECK(agreement.source_offer == first.uid);
  CHECK(same_terms(agreement, first));
  CHECK_ERRC(store.make_agreement(second, "urn:connector:consumer"), Errc::NotAnOffer);

  CHECK(store.invalidate_by_target(kTarget) == 3);
  CHECK(store.invalidate_by_target(kTarget) == 0);
  for (const auto& p : store.list_policies_by_target(kTarget)) CHECK(p.status == PolicyStatus::Invalidated);
  // The stale copy held by the caller does not get around the stored status.
  CHECK_ERRC(store.make_agreement(first, "urn:connector:consumer"), Errc::OfferInvalidated);
}

TEST_CASE("policy store persists to a directory") {
  auto dir = std::filesystem::temp_directory_path() / ("fedspace-unit-" + random_hex(4)) / "policies";
  auto clock = unit::clock_at();
  StubResolver resolver;
  resolver.live.insert(kTarget);
  std::string uid;
  {
    auto store = PolicyStore::open(dir, clock);
    uid = store->create_policy(PolicyKind::Offer, kTarget, "urn:connector:provider",
                               {.permissions = {{Action::Use, {}}}}, resolver)
              .uid;
    store->invalidate_by_target(kTarget);
  }
  auto store = PolicyStore::open(dir, clock);
  REQUIRE(store->get(uid).has_value());
  CHECK(store->get(uid)->status == PolicyStatus::Invalidated);
}
