#include <doctest.h>

#include "fedspace/common/util.hpp"
#include "fedspace/dcat/catalog.hpp"
#include "fedspace/facade/facade.hpp"
#include "fedspace/store/codec.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace fedspace;
using namespace fedspace::facade;
using unit::aspect_for;
using unit::dataset_record;
using unit::dataset_urn;
using unit::domain_record;

namespace {

const Credentials kCreds{"facade", "s3cret"};

struct Rig {
  std::shared_ptr<ManualClock> clock = unit::clock_at();
  store::EntityStore store{"local", clock};
  std::shared_ptr<LocalStoreClient> client =
      std::make_shared<LocalStoreClient>(store, std::vector<Credentials>{kCreds}, std::chrono::seconds(300), clock);
  Facade facade{client, FacadeConfig{.credentials = kCreds, .cache_ttl = std::chrono::seconds(30), .page_size = 2},
                clock};

  Rig() {
    store.ingest(store::parse_ingest_document(read_file(testkit::repo_fixture("catalog_a/catalog.json"))));
    facade.drain_changes();
  }
};

const store::Urn kTraffic = store::Urn::parse("urn:li:dataset:(urn:li:dataPlatform:postgres,traffic.counts,PROD)");
const store::Urn kMobility = store::Urn::domain("mobility");

}  // namespace

TEST_CASE("authentication") {
  Rig rig;
  auto token = rig.facade.authenticate(kCreds);
  CHECK_FALSE(token.token.empty());
  CHECK(token.expires_at == rig.clock->now() + std::chrono::seconds(300));
  CHECK_ERRC(rig.facade.authenticate({"facade", "wrong"}), Errc::BadCredentials);

  rig.clock->advance(std::chrono::seconds(301));
  CHECK_ERRC(rig.facade.list_catalogs(token), Errc::TokenExpired);
  // The store side enforces expiry too.
  CHECK_ERRC(rig.client->list_domains(token.token, {}), Errc::TokenExpired);
  // The managed session renews itself.
  CHECK(rig.facade.list_catalogs(rig.facade.session()).size() == 1);
}

TEST_CASE("listing and resolution") {
  Rig rig;
  auto s = rig.facade.session();
  auto catalogs = rig.facade.list_catalogs(s);
  REQUIRE(catalogs.size() == 1);
  CHECK(catalogs[0] == CatalogSummary{kMobility, "Mobility", 3});
  auto meta = rig.facade.resolve_dataset(s, kTraffic);
  CHECK(meta.domain_urn == kMobility);
  CHECK(meta.access_endpoint == rig.store.get_aspect(kTraffic)->access_endpoint);
  CHECK_ERRC(rig.facade.resolve_dataset(s, dataset_urn("missing")), Errc::TargetNotFound);
  CHECK_ERRC(rig.facade.resolve_dataset(s, kMobility), Errc::TargetNotFound);
}

TEST_CASE("cache serves repeats without store queries until a change") {
  Rig rig;
  auto s = rig.facade.session();
  rig.facade.resolve_dataset(s, kTraffic);
  rig.facade.list_catalogs(s);
  auto before = rig.facade.store_queries();
  rig.facade.resolve_dataset(s, kTraffic);
  rig.facade.list_catalogs(s);
  CHECK(rig.facade.store_queries() == before);

  // UPDATE on the dataset drops its entry.
  auto r = *rig.store.get_entity(kTraffic);
  r.description = "changed";
  rig.store.upsert_entity(r);
  rig.facade.drain_changes();
  auto after_drain = rig.facade.store_queries();
  rig.facade.resolve_dataset(s, kTraffic);
  CHECK(rig.facade.store_queries() == after_drain + 1);

  // TTL expiry refetches too.
  rig.clock->advance(std::chrono::seconds(31));
  auto t = rig.facade.session();
  auto q = rig.facade.store_queries();
  rig.facade.resolve_dataset(t, kTraffic);
  CHECK(rig.facade.store_queries() == q + 1);
}

TEST_CASE("CREATE invalidates listings") {
  Rig rig;
  auto s = rig.facade.session();
  CHECK(rig.facade.list_catalogs(s).size() == 1);
  rig.store.upsert_entity(domain_record("energy"));
  CHECK(rig.facade.list_catalogs(s).size() == 1);  // still cached
  rig.facade.drain_changes();
  CHECK(rig.facade.list_catalogs(s).size() == 2);
}

TEST_CASE("DELETE invalidates resolution and is forwarded once") {
  Rig rig;
  std::vector<store::Urn> forwarded;
  rig.facade.set_invalidator([&](const store::Urn& u) {
    forwarded.push_back(u);
    return std::size_t{1};
  });
  auto s = rig.facade.session();
  rig.facade.resolve_dataset(s, kTraffic);
  rig.store.delete_entity(kTraffic);
  CHECK(rig.facade.drain_changes() == 1);
  CHECK_ERRC(rig.facade.resolve_dataset(s, kTraffic), Errc::TargetNotFound);

  // Redelivery of the same event is ignored.
  auto ev = rig.store.changes_since(0).back();
  rig.facade.on_change(ev);
  rig.facade.on_change(ev);
  CHECK(rig.facade.drain_changes() == 0);
  CHECK(forwarded == std::vector<store::Urn>{kTraffic});
}

TEST_CASE("to_dcat maps a domain and validates") {
  Rig rig;
  auto s = rig.facade.session();
  auto c = rig.facade.to_dcat(s, kMobility);
  CHECK(c.id == kMobility);
  CHECK(c.title == "Mobility");
  CHECK(c.datasets.size() == 3);
  CHECK(dcat::validate_catalog(c).empty());
  auto traffic = std::find_if(c.datasets.begin(), c.datasets.end(), [](const auto& d) { return d.id == kTraffic; });
  REQUIRE(traffic != c.datasets.end());
  REQUIRE(traffic->distributions.size() == 1);
  CHECK(traffic->distributions[0].format == "text/csv");
  CHECK_ERRC(rig.facade.to_dcat(s, store::Urn::domain("nope")), Errc::UnknownUrn);
}

TEST_CASE("empty domain maps to a catalog without datasets") {
  Rig rig;
  rig.store.upsert_entity(domain_record("empty"));
  rig.facade.drain_changes();
  auto c = rig.facade.to_dcat(rig.facade.session(), store::Urn::domain("empty"));
  CHECK(c.datasets.empty());
  CHECK(c.services.empty());
  CHECK(dcat::validate_catalog(c).empty());
}

TEST_CASE("empty format hint is published as octet-stream") {
  Rig rig;
  rig.store.upsert_entity(dataset_record("blob"), aspect_for("blob", "mobility", ""));
  rig.facade.drain_changes();
  auto c = rig.facade.to_dcat(rig.facade.session(), kMobility);
  auto blob = std::find_if(c.datasets.begin(), c.datasets.end(), [](const auto& d) { return d.id == dataset_urn("blob"); });
  REQUIRE(blob != c.datasets.end());
  CHECK(blob->distributions.at(0).format == kUnspecifiedFormat);
  CHECK(dcat::validate_catalog(c).empty());
}
