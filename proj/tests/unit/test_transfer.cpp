#include <doctest.h>

#include "fedspace/common/util.hpp"
#include "fedspace/transfer/transfer.hpp"
#include "helpers.hpp"
#include "oracle.hpp"
#include "scenarios.hpp"

using namespace fedspace;
using namespace fedspace::transfer;

namespace {

const store::Urn kTraffic = store::Urn::parse("urn:li:dataset:(urn:li:dataPlatform:postgres,traffic.counts,PROD)");
const store::Urn kBikes = store::Urn::parse("urn:li:dataset:(urn:li:dataPlatform:postgres,bike.stations,PROD)");

struct Rig {
  std::unique_ptr<testkit::World> w = testkit::make_world();

  std::string agree(const store::Urn& target, odrl::RuleSet rules = {.permissions = {{odrl::Action::Use, {}}}}) {
    auto offer = w->policies->create_policy(odrl::PolicyKind::Offer, target, testkit::kProvider, rules, *w->facade);
    auto p = w->negotiate(offer);
    REQUIRE(p.state == negotiation::State::Finalized);
    return *p.agreement_uid;
  }

  TransferProcess started(const store::Urn& target = kTraffic) {
    auto t = w->transfers->request_transfer(agree(target), "text/csv", "");
    return w->transfers->start(t.transfer_id);
  }

  void drop(const store::Urn& target) {
    w->store->delete_entity(target);
    w->facade->drain_changes();
  }
};

}  // namespace

TEST_CASE("transition table matches the oracle fixture") {
  auto diffs = testkit::diff_transfer_table(testkit::test_fixture("transfer_transitions.tsv"));
  for (const auto& d : diffs) INFO(d.cell, " expected ", d.expected, " got ", d.actual);
  CHECK(diffs.empty());
}

TEST_CASE("request on a finalized agreement") {
  Rig rig;
  auto t = rig.w->transfers->request_transfer(rig.agree(kTraffic), "text/csv", "");
  CHECK(t.state == State::Requested);
  CHECK(t.target == kTraffic);
  CHECK(t.consumer_pid == testkit::kConsumer);
  CHECK_FALSE(t.data_address.has_value());
  CHECK(process_invariants_hold(t));
}

TEST_CASE("request preconditions") {
  Rig rig;
  CHECK_ERRC(rig.w->transfers->request_transfer("urn:uuid:none", "text/csv", ""), Errc::UnknownAgreement);
  auto agreement = rig.agree(kTraffic);
  CHECK_ERRC(rig.w->transfers->request_transfer(agreement, "application/json", ""), Errc::FormatMismatch);
  auto offer = rig.w->offer_on(kTraffic);
  CHECK_ERRC(rig.w->transfers->request_transfer(offer.uid, "text/csv", ""), Errc::UnknownAgreement);
  rig.w->policies->invalidate_by_target(kTraffic);
  CHECK_ERRC(rig.w->transfers->request_transfer(agreement, "text/csv", ""), Errc::AgreementInvalidated);
}

TEST_CASE("expired dateTime constraint denies the transfer") {
  Rig rig;
  auto agreement = rig.agree(
      kTraffic, {.permissions = {{odrl::Action::Use,
                                  {{odrl::LeftOperand::DateTime, odrl::Operator::Lt, "2026-03-02T00:00:00.000Z"}}}}});
  CHECK(rig.w->transfers->request_transfer(agreement, "text/csv", "").state == State::Requested);
  rig.w->clock->advance(std::chrono::hours(24));
  auto t = rig.w->transfers->request_transfer(agreement, "text/csv", "");
  CHECK(t.state == State::Terminated);
  CHECK(t.reason == "policy denied");
}

TEST_CASE("start grants the dataset endpoint and a token") {
  Rig rig;
  auto t = rig.started();
  CHECK(t.state == State::Started);
  REQUIRE(t.data_address.has_value());
  CHECK(t.data_address->endpoint_url == rig.w->store->get_aspect(kTraffic)->access_endpoint);
  CHECK(t.data_address->valid_until == rig.w->clock->now() + std::chrono::minutes(15));
  CHECK(rig.w->transfers->token_valid(t.data_address->access_token));
  CHECK(process_invariants_hold(t));
}

TEST_CASE("start after the target is deleted") {
  Rig rig;
  auto t = rig.w->transfers->request_transfer(rig.agree(kTraffic), "text/csv", "");
  rig.drop(kTraffic);
  auto s = rig.w->transfers->start(t.transfer_id);
  CHECK(s.state == State::Terminated);
  CHECK(s.reason == "target unresolved");
}

TEST_CASE("commands out of order are illegal") {
  Rig rig;
  auto t = rig.started();
  rig.w->transfers->complete(t.transfer_id);
  CHECK_ERRC(rig.w->transfers->start(t.transfer_id), Errc::IllegalTransition);
  CHECK_ERRC(rig.w->transfers->suspend(t.transfer_id), Errc::IllegalTransition);
  CHECK_ERRC(rig.w->transfers->start("urn:uuid:none"), Errc::UnknownProcess);
  CHECK(rig.w->transfers->get(t.transfer_id)->state == State::Completed);
}

TEST_CASE("suspend invalidates the token, resume issues a new one") {
  Rig rig;
  auto t = rig.started();
  auto old_token = t.data_address->access_token;
  auto s = rig.w->transfers->suspend(t.transfer_id);
  CHECK(s.state == State::Suspended);
  CHECK_FALSE(rig.w->transfers->token_valid(old_token));
  CHECK_ERRC(rig.w->transfers->serve_data(old_token, kTraffic), Errc::TransferNotStarted);

  auto r = rig.w->transfers->resume(t.transfer_id);
  CHECK(r.state == State::Started);
  CHECK(r.data_address->endpoint_url == t.data_address->endpoint_url);
  CHECK(r.data_address->access_token != old_token);
  CHECK_ERRC(rig.w->transfers->serve_data(old_token, kTraffic), Errc::InvalidToken);
  CHECK_FALSE(rig.w->transfers->serve_data(r.data_address->access_token, kTraffic).empty());
}

TEST_CASE("data plane serves the registered bytes to a valid token only") {
  Rig rig;
  auto t = rig.started();
  const auto& token = t.data_address->access_token;
  CHECK(rig.w->transfers->serve_data(token, kTraffic) ==
        read_file(testkit::repo_fixture("catalog_a/data/traffic.counts.csv")));
  CHECK_ERRC(rig.w->transfers->serve_data(token, kBikes), Errc::WrongTarget);
  CHECK_ERRC(rig.w->transfers->serve_data("forged", kTraffic), Errc::InvalidToken);

  auto requested = rig.w->transfers->request_transfer(t.agreement_uid, "text/csv", "");
  CHECK(requested.state == State::Requested);

  rig.w->clock->advance(std::chrono::minutes(15));
  CHECK_ERRC(rig.w->transfers->serve_data(token, kTraffic), Errc::ExpiredToken);
}

TEST_CASE("completed transfer no longer serves") {
  Rig rig;
  auto t = rig.started();
  rig.w->transfers->complete(t.transfer_id);
  CHECK_ERRC(rig.w->transfers->serve_data(t.data_address->access_token, kTraffic), Errc::TransferNotStarted);
}

TEST_CASE("envelope codec") {
  Message m{.type = MessageType::Request, .agreement_id = "urn:uuid:a", .format = "text/csv"};
  auto back = message_from_json(message_to_json(m));
  CHECK(back.type == MessageType::Request);
  CHECK(back.agreement_id == m.agreement_id);
  CHECK(back.format == m.format);
  CHECK_ERRC(message_from_json(json{{"@type", "TransferRequestMessage"}}), Errc::SchemaError);
}
