#include "scenarios.hpp"

#include <map>
#include <sstream>

#include "fedspace/common/error.hpp"
#include "fedspace/common/util.hpp"
#include "fedspace/dcat/catalog.hpp"
#include "fedspace/service/connector.hpp"
#include "fedspace/service/http.hpp"
#include "fedspace/store/codec.hpp"
#include "generators.hpp"
#include "oracle.hpp"

namespace fedspace::testkit {

namespace fs = std::filesystem;
using namespace std::chrono_literals;

odrl::Policy World::offer_on(const store::Urn& dataset) {
  odrl::RuleSet rules{{odrl::Rule{odrl::Action::Use, {}}}, {}, {}};
  return policies->create_policy(odrl::PolicyKind::Offer, dataset, kProvider, rules, *facade);
}

negotiation::NegotiationProcess World::negotiate(const odrl::Policy& offer) {
  return consumer->negotiate(*channel, offer.uid, offer, "");
}

std::unique_ptr<World> make_world(std::optional<fs::path> dir) {
  auto w = std::make_unique<World>();
  auto sub = [&](const char* name) -> std::optional<fs::path> {
    if (!dir) return std::nullopt;
    return *dir / name;
  };
  w->clock = std::make_shared<ManualClock>(*parse_timestamp("2026-03-01T09:00:00.000Z"));
  w->source = std::make_unique<store::EntityStore>("source-a", w->clock);
  w->source->ingest(store::parse_ingest_document(read_file(repo_fixture("catalog_a/catalog.json"))));
  w->store = dir ? store::EntityStore::open(*dir / "store", "federator", w->clock)
                 : std::make_unique<store::EntityStore>("federator", w->clock);
  w->store->federate_pull(*w->source);

  facade::Credentials creds{"world", "secret"};
  w->client = std::make_shared<facade::LocalStoreClient>(*w->store, std::vector{creds}, 3600s, w->clock);
  facade::FacadeConfig fcfg;
  fcfg.credentials = creds;
  w->facade = std::make_unique<facade::Facade>(w->client, fcfg, w->clock);
  w->policies = dir ? odrl::PolicyStore::open(*dir / "policies", w->clock)
                    : std::make_unique<odrl::PolicyStore>(w->clock);
  auto* raw = w.get();
  w->facade->set_invalidator([raw](const store::Urn& urn) { return raw->policies->invalidate_by_target(urn); });
  w->provider = std::make_unique<negotiation::ProviderNegotiator>(kProvider, *w->policies, *w->facade, w->clock,
                                                                  sub("negotiations"));
  w->consumer = std::make_unique<negotiation::ConsumerNegotiator>(kConsumer, w->clock, sub("consumer"));
  auto resolve = [raw](const store::Urn& urn) {
    return raw->facade->with_session(
        [&](const facade::SessionToken& s) { return raw->facade->resolve_dataset(s, urn, true); });
  };
  auto finalized = [raw](const std::string& agreement) {
    auto p = raw->provider->by_agreement(agreement);
    return p && p->state == negotiation::State::Finalized;
  };
  w->transfers = std::make_unique<transfer::TransferManager>(
      *w->policies, resolve, finalized, transfer::EndSystem::load(repo_fixture("catalog_a/end_system.json")), w->clock,
      transfer::TransferConfig{}, sub("transfers"));
  w->channel = std::make_unique<negotiation::InProcessChannel>(*w->provider);
  for (const auto& urn : w->store->live_urns())
    if (urn.is_dataset()) w->datasets.push_back(urn);
  w->facade->drain_changes();
  return w;
}

namespace {

/// Drives one world through random operations and checks invariants after each.
class Fuzzer {
 public:
  Fuzzer(Rng& rng, FuzzReport& report) : rng_(rng), report_(report), w_(make_world()) {
    for (const auto& d : w_->datasets) offers_.push_back(w_->offer_on(d));
  }

  void run(std::size_t steps) {
    for (std::size_t i = 0; i < steps; ++i) {
      auto op = below(rng_, 14);
      try {
        step(op);
      } catch (const Error&) {
        // Rejected operations are expected; the invariants below still have to hold.
      } catch (const std::exception& e) {
        violation("op " + std::to_string(op) + " threw a non-domain exception: " + e.what());
      }
      ++report_.operations;
      check();
    }
  }

 private:
  void violation(std::string what) {
    ++report_.violations;
    if (report_.samples.size() < 20) report_.samples.push_back(std::move(what));
  }

  std::string any_offer_uid() {
    if (offers_.empty() || coin(rng_, 0.1)) return "urn:uuid:no-such-offer";
    return pick(rng_, offers_).uid;
  }

  std::optional<odrl::Policy> terms_for(const std::string& uid) {
    for (const auto& o : offers_)
      if (o.uid == uid) {
        if (coin(rng_, 0.15)) {
          auto tampered = o;
          tampered.rules.permissions.push_back(odrl::Rule{odrl::Action::Distribute, {}});
          return tampered;
        }
        return o;
      }
    return std::nullopt;
  }

  std::string agreement_uid() {
    std::vector<std::string> uids;
    for (const auto& p : w_->policies->all())
      if (p.kind == odrl::PolicyKind::Agreement) uids.push_back(p.uid);
    if (uids.empty() || coin(rng_, 0.1)) return "urn:uuid:no-such-agreement";
    return pick(rng_, uids);
  }

  std::string transfer_id() {
    auto all = w_->transfers->all();
    if (all.empty() || coin(rng_, 0.1)) return "urn:uuid:no-such-transfer";
    return pick(rng_, all).transfer_id;
  }

  negotiation::Message random_message(bool to_provider) {
    using negotiation::MessageType;
    static const std::vector<MessageType> types{
        MessageType::ContractRequest,         MessageType::ContractOffer,
        MessageType::ContractNegotiationEvent, MessageType::ContractAgreement,
        MessageType::ContractAgreementVerification, MessageType::ContractNegotiationTermination};
    negotiation::Message m{.type = pick(rng_, types)};
    std::vector<std::string> ids;
    for (const auto& p : to_provider ? w_->provider->all() : w_->consumer->all()) ids.push_back(p.process_id);
    if (!ids.empty() && coin(rng_, 0.85)) m.process_id = pick(rng_, ids);
    else if (coin(rng_, 0.5)) m.process_id = "urn:uuid:" + std::to_string(rng_() % 1000);
    auto uid = any_offer_uid();
    m.offer = negotiation::OfferPayload{uid, coin(rng_, 0.9) ? std::optional<std::string>(kConsumer) : std::nullopt,
                                        terms_for(uid)};
    if (m.type == MessageType::ContractOffer && !m.offer->terms) m.offer->terms = offers_.empty() ? std::nullopt : std::optional(offers_.front());
    m.event = coin(rng_) ? negotiation::EventType::Accepted : negotiation::EventType::Finalized;
    if (!offers_.empty()) {
      auto a = pick(rng_, offers_);
      a.kind = odrl::PolicyKind::Agreement;
      a.assignee = kConsumer;
      a.uid = "urn:uuid:forged-" + std::to_string(rng_() % 1000);
      m.agreement = a;
    }
    m.reason = "fuzz";
    // Through the wire codec, as a real peer would deliver it.
    return negotiation::message_from_json(negotiation::message_to_json(m));
  }

  void step(std::size_t op) {
    auto& w = *w_;
    switch (op) {
      case 0:
      case 1: {  // consumer-driven negotiation, terms known or reference only
        auto uid = any_offer_uid();
        auto p = w.consumer->negotiate(*w.channel, uid, op == 0 ? terms_for(uid) : std::nullopt, "");
        if (p.state == negotiation::State::Finalized) ++report_.finalized;
        break;
      }
      case 2:
        w.provider->handle(random_message(true));
        break;
      case 3:
        w.consumer->handle(random_message(false));
        break;
      case 4: {
        auto all = w.consumer->all();
        if (!all.empty()) w.consumer->accept(*w.channel, pick(rng_, all).process_id);
        break;
      }
      case 5: {  // provider-initiated offer, pushed to the consumer
        auto out = w.provider->initiate_offer(any_offer_uid(), kConsumer, "");
        if (out.reply) w.consumer->handle(*out.reply);
        break;
      }
      case 6: {  // a dataset disappears upstream and the feed is drained
        auto urn = pick(rng_, w.datasets);
        w.store->delete_entity(urn);
        w.facade->drain_changes();
        break;
      }
      case 7: {
        auto urn = pick(rng_, w.datasets);
        offers_.push_back(w.offer_on(urn));
        break;
      }
      case 8: {
        auto uid = agreement_uid();
        std::string format = "application/xml";
        if (auto a = w.policies->get(uid); a && coin(rng_, 0.85))
          if (auto aspect = w.store->get_aspect(a->target)) format = facade::published_format(aspect->format_hint);
        auto p = w.transfers->request_transfer(uid, format, "");
        // The provider accepted the request, so its negotiation must have finished.
        auto n = w.provider->by_agreement(uid);
        if (!n || n->state != negotiation::State::Finalized)
          violation("transfer request accepted for agreement " + uid + " without a FINALIZED negotiation");
        (void)p;
        break;
      }
      case 9:
      case 10: {
        auto id = transfer_id();
        switch (below(rng_, 5)) {
          case 0: {
            auto p = w.transfers->start(id);
            if (p.state == transfer::State::Started) ++report_.transfers_started;
            break;
          }
          case 1: w.transfers->suspend(id); break;
          case 2: w.transfers->resume(id); break;
          case 3: w.transfers->complete(id); break;
          default: w.transfers->terminate(id, "fuzz"); break;
        }
        break;
      }
      case 11:
      case 12: {  // data plane with a held, stale, foreign or forged token
        std::string token = "forged-" + std::to_string(rng_() % 100);
        store::Urn target = pick(rng_, w.datasets);
        auto all = w.transfers->all();
        if (!all.empty() && coin(rng_, 0.85)) {
          const auto& t = pick(rng_, all);
          auto it = issued_.find(t.transfer_id);
          if (t.data_address) token = t.data_address->access_token;
          else if (it != issued_.end()) token = it->second;
          if (coin(rng_, 0.8)) target = t.target;
        }
        auto bytes = w.transfers->serve_data(token, target);
        report_.bytes_served += bytes.size();
        bool ok = false;
        for (const auto& t : w.transfers->all())
          if (t.data_address && t.data_address->access_token == token)
            ok = t.state == transfer::State::Started && t.target == target;
        if (!ok) violation("serve_data succeeded for a transfer that is not STARTED on " + target.str());
        break;
      }
      default:
        w.clock->advance(std::chrono::milliseconds(below(rng_, 20 * 60 * 1000)));
        break;
    }
  }

  void track(std::map<std::string, int>& last, const std::string& id, int state, bool absorbing_before,
             const char* kind) {
    auto it = last.find(id);
    if (it != last.end() && absorbing_before && it->second != state)
      violation(std::string(kind) + " " + id + " left an absorbing state");
    last[id] = state;
  }

  void check() {
    auto& w = *w_;
    for (const auto& p : w.provider->all()) {
      if (!negotiation::process_invariants_hold(p)) violation("provider process " + p.process_id + " breaks invariants");
      auto it = neg_last_.find("p" + p.process_id);
      bool was_absorbing = it != neg_last_.end() && negotiation::is_absorbing(static_cast<negotiation::State>(it->second));
      track(neg_last_, "p" + p.process_id, static_cast<int>(p.state), was_absorbing, "provider negotiation");
    }
    for (const auto& c : w.consumer->all()) {
      if (!negotiation::process_invariants_hold(c)) violation("consumer process " + c.process_id + " breaks invariants");
      auto it = neg_last_.find("c" + c.process_id);
      bool was_absorbing = it != neg_last_.end() && negotiation::is_absorbing(static_cast<negotiation::State>(it->second));
      track(neg_last_, "c" + c.process_id, static_cast<int>(c.state), was_absorbing, "consumer negotiation");
      if (c.state == negotiation::State::Finalized) {
        auto p = w.provider->get(c.process_id);
        if (!p || p->state != negotiation::State::Finalized || p->agreement_uid != c.agreement_uid)
          violation("consumer FINALIZED " + c.process_id + " without the provider agreeing");
      }
    }
    for (const auto& t : w.transfers->all()) {
      if (!transfer::process_invariants_hold(t)) violation("transfer " + t.transfer_id + " breaks invariants");
      auto it = transfer_last_.find(t.transfer_id);
      bool was_absorbing = it != transfer_last_.end() && transfer::is_absorbing(static_cast<transfer::State>(it->second));
      track(transfer_last_, t.transfer_id, static_cast<int>(t.state), was_absorbing, "transfer");
      if (t.data_address) issued_[t.transfer_id] = t.data_address->access_token;
      auto n = w.provider->by_agreement(t.agreement_uid);
      if (!n || n->state != negotiation::State::Finalized)
        violation("transfer " + t.transfer_id + " exists without a FINALIZED negotiation path");
    }
  }

  Rng& rng_;
  FuzzReport& report_;
  std::unique_ptr<World> w_;
  std::vector<odrl::Policy> offers_;
  std::map<std::string, int> neg_last_;
  std::map<std::string, int> transfer_last_;
  std::map<std::string, std::string> issued_;
};

}  // namespace

FuzzReport fuzz_protocols(std::size_t sequences, std::uint64_t seed) {
  FuzzReport report;
  Rng rng(seed);
  for (std::size_t i = 0; i < sequences; ++i) {
    Fuzzer f(rng, report);
    f.run(6 + below(rng, 13));
    ++report.sequences;
  }
  return report;
}

OdrlReport compare_odrl(std::size_t cases, std::uint64_t seed) {
  OdrlReport report;
  Rng rng(seed);
  for (std::size_t i = 0; i < cases; ++i) {
    auto policy = random_policy(rng);
    auto ctx = random_context(rng);
    auto expected = naive_evaluate(policy, ctx);
    auto actual = odrl::evaluate(policy, ctx);
    ++report.cases;
    if (expected == actual) ++report.agreements;
    else if (report.samples.size() < 10)
      report.samples.push_back(odrl::policy_to_json(policy).dump() + " action=" +
                               std::string(odrl::to_string(ctx.action)) + " expected=" +
                               std::string(odrl::to_string(expected)) + " actual=" +
                               std::string(odrl::to_string(actual)));
    switch (expected) {
      case odrl::Decision::Permit: ++report.permits; break;
      case odrl::Decision::Deny: ++report.denies; break;
      case odrl::Decision::NotApplicable: ++report.not_applicable; break;
    }
  }
  return report;
}

RoundTripReport dcat_round_trip(std::size_t catalogs, std::size_t stores, std::uint64_t seed) {
  RoundTripReport report;
  Rng rng(seed);
  for (std::size_t i = 0; i < catalogs; ++i) {
    auto c = random_catalog(rng);
    ++report.catalogs;
    auto text = dcat::serialize_catalog(c);
    auto back = dcat::deserialize_catalog(text);
    if (back.value == c && back.warnings.empty()) ++report.identical;
    else if (report.samples.size() < 5) report.samples.push_back("round trip differs: " + text);
  }
  auto clock = std::make_shared<ManualClock>(*parse_timestamp("2026-03-01T09:00:00.000Z"));
  for (std::size_t i = 0; i < stores; ++i) {
    store::EntityStore s("random", clock);
    s.ingest(random_store_content(rng, 1 + below(rng, 4), below(rng, 15)));
    facade::Credentials creds{"c", "s"};
    auto client = std::make_shared<facade::LocalStoreClient>(s, std::vector{creds}, 3600s, clock);
    facade::FacadeConfig cfg;
    cfg.credentials = creds;
    cfg.page_size = 1 + below(rng, 5);  // small pages exercise the paging loop
    facade::Facade f(client, cfg, clock);
    auto token = f.session();
    for (const auto& summary : f.list_catalogs(token)) {
      auto c = f.to_dcat(token, summary.domain);
      ++report.mapped;
      auto violations = dcat::validate_catalog(c);
      if (violations.empty()) ++report.mapped_valid;
      else if (report.samples.size() < 5) report.samples.push_back("mapped catalog invalid: " + violations[0].rule);
    }
  }
  return report;
}

FederationReport federation_scenario(const fs::path& work_dir) {
  FederationReport report;
  auto clock = std::make_shared<SystemClock>();
  store::EntityStore source_a("source-a", clock);
  store::EntityStore source_b("source-b", clock);
  source_a.ingest(store::parse_ingest_document(read_file(repo_fixture("catalog_a/catalog.json"))));
  source_b.ingest(store::parse_ingest_document(read_file(repo_fixture("catalog_b/catalog.json"))));

  service::ConnectorConfig cfg;
  cfg.role = service::Role::Provider;
  cfg.participant_id = "urn:connector:federator";
  cfg.data_dir = work_dir / "federator";
  cfg.admin_token = "admin";
  cfg.catalog_id = "federator";
  fs::create_directories(cfg.data_dir);
  service::Connector connector(cfg, clock);
  report.first_a = connector.store().federate_pull(source_a);
  report.first_b = connector.store().federate_pull(source_b);
  connector.start();

  service::HttpClient http(connector.url(), Errc::ProviderUnreachable);
  auto res = http.get("/catalog");
  if (!res.ok()) {
    report.failure = "GET /catalog returned " + std::to_string(res.status) + ": " + res.body;
  } else {
    auto root = dcat::deserialize_root(res.body).value;
    report.catalogs = root.catalogs.size();
    for (const auto& c : root.catalogs) {
      report.datasets += c.datasets.size();
      if (!dcat::validate_catalog(c).empty()) report.failure = "catalog " + c.id.str() + " fails validation";
    }
  }
  report.second_a = connector.store().federate_pull(source_a);
  report.second_b = connector.store().federate_pull(source_b);
  connector.stop();
  return report;
}

InvalidationReport invalidation_chain() {
  InvalidationReport report;
  auto w = make_world();
  const auto& dataset = w->datasets.front();
  auto offer = w->offer_on(dataset);
  auto cursor = w->store->last_seq_no();

  w->store->delete_entity(dataset);
  for (const auto& ev : w->store->changes_since(cursor))
    if (ev.urn == dataset && ev.kind == store::ChangeKind::Delete) report.delete_event_seen = true;
  w->facade->drain_changes();

  report.offer_status = w->policies->get(offer.uid)->status;
  auto p = w->negotiate(offer);
  report.state = p.state;
  report.reason = p.reason.value_or("");
  return report;
}

}  // namespace fedspace::testkit
