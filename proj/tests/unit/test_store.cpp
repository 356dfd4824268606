#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "fedspace/common/util.hpp"
#include "fedspace/store/codec.hpp"
#include "fedspace/store/entity_store.hpp"
#include "generators.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace fedspace;
using namespace fedspace::store;
using unit::aspect_for;
using unit::dataset_record;
using unit::dataset_urn;
using unit::domain_record;

namespace {

std::unique_ptr<EntityStore> fixture_store(const std::string& catalog, std::shared_ptr<ManualClock> clock) {
  auto s = std::make_unique<EntityStore>(catalog, clock);
  s->ingest(parse_ingest_document(read_file(testkit::repo_fixture(catalog + "/catalog.json"))));
  return s;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fedspace-unit-" + random_hex(4)) / name;
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("urn grammar") {
  auto d = Urn::parse("urn:li:dataset:(urn:li:dataPlatform:postgres,traffic.counts,PROD)");
  CHECK(d.is_dataset());
  CHECK(d.platform() == "postgres");
  CHECK(d.name() == "traffic.counts");
  CHECK(d.env() == Env::Prod);
  CHECK(Urn::domain("mobility").str() == "urn:li:domain:mobility");
  CHECK_ERRC(Urn::parse("urn:li:dataset:(urn:li:dataPlatform:postgres,a,b,PROD)"), Errc::MalformedUrn);
  CHECK_ERRC(Urn::parse("urn:li:dataset:(urn:li:dataPlatform:postgres,t,STAGING)"), Errc::MalformedUrn);
  CHECK_ERRC(Urn::parse("urn:li:domain:"), Errc::MalformedUrn);
  CHECK_FALSE(Urn::try_parse("not a urn").has_value());
}

TEST_CASE("upsert emits CREATE then UPDATE and keeps created_at") {
  auto clock = unit::clock_at();
  EntityStore s("local", clock);
  s.upsert_entity(domain_record("mobility"));
  s.upsert_entity(dataset_record("t"), aspect_for("t", "mobility"));
  auto created = s.get_entity(dataset_urn("t"))->created_at;
  clock->advance(std::chrono::minutes(5));
  auto changed = dataset_record("t");
  changed.description = "now described";
  s.upsert_entity(changed);

  auto events = s.changes_since(0);
  REQUIRE(events.size() == 3);
  CHECK(events[1].kind == ChangeKind::Create);
  CHECK(events[2].kind == ChangeKind::Update);
  CHECK(events[2].seq_no == 3);
  auto r = *s.get_entity(dataset_urn("t"));
  CHECK(r.created_at == created);
  CHECK(r.updated_at == created + std::chrono::minutes(5));
  CHECK(r.source_catalog_id == "local");
  // An aspect-less update keeps the previous aspect.
  CHECK(s.get_aspect(dataset_urn("t"))->domain_urn == Urn::domain("mobility"));
}

TEST_CASE("dataset needs a live parent domain") {
  EntityStore s("local", unit::clock_at());
  CHECK_ERRC(s.upsert_entity(dataset_record("t"), aspect_for("t", "nowhere")), Errc::MissingParentDomain);
  s.upsert_entity(domain_record("gone"));
  s.delete_entity(Urn::domain("gone"));
  CHECK_ERRC(s.upsert_entity(dataset_record("t"), aspect_for("t", "gone")), Errc::MissingParentDomain);
  CHECK(s.last_seq_no() == 2);
}

TEST_CASE("kind and urn must agree") {
  EntityStore s("local", unit::clock_at());
  auto bad = domain_record("x");
  bad.kind = EntityKind::Dataset;
  CHECK_ERRC(s.upsert_entity(bad), Errc::MalformedUrn);
}

TEST_CASE("delete is a tombstone") {
  EntityStore s("local", unit::clock_at());
  s.upsert_entity(domain_record("mobility"));
  s.upsert_entity(dataset_record("t"), aspect_for("t", "mobility"));
  s.delete_entity(dataset_urn("t"));
  CHECK_ERRC(s.delete_entity(dataset_urn("t")), Errc::AlreadyDeleted);
  CHECK_ERRC(s.delete_entity(dataset_urn("never")), Errc::UnknownUrn);
  CHECK_FALSE(s.get_entity(dataset_urn("t")).has_value());
  CHECK(s.get_entity(dataset_urn("t"), true)->deleted);
  CHECK_ERRC(s.get_dataset_detail(dataset_urn("t")), Errc::DeletedEntity);
  CHECK_ERRC(s.get_dataset_detail(dataset_urn("never")), Errc::UnknownUrn);
  CHECK(s.list_datasets_in_domain(Urn::domain("mobility"), {}).total == 0);
  CHECK(s.changes_since(2).at(0).kind == ChangeKind::Delete);

  // Re-creating a tombstoned urn is a CREATE.
  s.upsert_entity(dataset_record("t"), aspect_for("t", "mobility"));
  CHECK(s.changes_since(3).at(0).kind == ChangeKind::Create);
}

TEST_CASE("domains list in urn order with pagination") {
  EntityStore s("local", unit::clock_at());
  for (auto name : {"energy", "mobility", "air", "water"}) s.upsert_entity(domain_record(name));
  auto first = s.list_domains({0, 3});
  CHECK(first.total == 4);
  REQUIRE(first.items.size() == 3);
  CHECK(first.items[0].urn == Urn::domain("air"));
  CHECK(first.items[2].urn == Urn::domain("mobility"));
  auto rest = s.list_domains({3, 3});
  REQUIRE(rest.items.size() == 1);
  CHECK(rest.items[0].urn == Urn::domain("water"));
  CHECK(s.list_domains({10, 3}).items.empty());
  CHECK_ERRC(s.list_domains({0, 0}), Errc::InvalidArgument);
  CHECK_ERRC(s.list_datasets_in_domain(Urn::domain("nope"), {}), Errc::UnknownUrn);
}

TEST_CASE("fixture catalog: domains, datasets, detail") {
  auto s = fixture_store("catalog_a", unit::clock_at());
  CHECK(s->list_domains({}).total == 1);
  auto datasets = s->list_datasets_in_domain(Urn::domain("mobility"), {});
  CHECK(datasets.total == 3);
  for (const auto& e : datasets.items) CHECK(e.aspect.domain_urn == Urn::domain("mobility"));
  auto detail = s->get_dataset_detail(datasets.items[0].record.urn);
  CHECK(detail.aspect.has_value());
  CHECK(detail.lineage == LineageSummary{});
}

TEST_CASE("lineage edges") {
  EntityStore s("local", unit::clock_at());
  s.upsert_entity(domain_record("d"));
  for (auto n : {"a", "b", "c"}) s.upsert_entity(dataset_record(n), aspect_for(n, "d"));
  auto before = s.last_seq_no();
  s.add_lineage_edge(dataset_urn("a"), dataset_urn("b"));
  s.add_lineage_edge(dataset_urn("c"), dataset_urn("b"));
  CHECK_ERRC(s.add_lineage_edge(dataset_urn("a"), dataset_urn("a")), Errc::SelfLoop);
  CHECK_ERRC(s.add_lineage_edge(dataset_urn("a"), dataset_urn("b")), Errc::DuplicateEdge);
  CHECK_ERRC(s.add_lineage_edge(dataset_urn("a"), dataset_urn("zz")), Errc::UnknownUrn);

  auto detail = s.get_dataset_detail(dataset_urn("b"));
  CHECK(detail.lineage.upstream == 2);
  CHECK(detail.lineage.downstream == 0);
  CHECK(s.get_dataset_detail(dataset_urn("a")).lineage.downstream == 1);
  CHECK(s.get_lineage(dataset_urn("b"), LineageDirection::Upstream) ==
        std::vector<Urn>{dataset_urn("a"), dataset_urn("c")});
  // Each edge shows up as an UPDATE of the downstream dataset.
  auto events = s.changes_since(before);
  REQUIRE(events.size() == 2);
  for (const auto& e : events) {
    CHECK(e.kind == ChangeKind::Update);
    CHECK(e.urn == dataset_urn("b"));
  }
}

TEST_CASE("search matches name, description and custom properties") {
  EntityStore s("local", unit::clock_at());
  s.upsert_entity(domain_record("d"));
  auto r = dataset_record("t");
  r.custom_properties["owner"] = "Mobility-Team";
  s.upsert_entity(r, aspect_for("t", "d"));
  auto other = dataset_record("u");
  other.description = "Hourly counts";
  s.upsert_entity(other, aspect_for("u", "d"));
  CHECK(s.search_datasets("mobility-team", {}).total == 1);
  CHECK(s.search_datasets("HOURLY", {}).items.at(0).urn == dataset_urn("u"));
  CHECK(s.search_datasets("absent", {}).total == 0);
  CHECK_ERRC(s.search_datasets("   ", {}), Errc::EmptyQuery);
  s.delete_entity(dataset_urn("u"));
  CHECK(s.search_datasets("hourly", {}).total == 0);
}

TEST_CASE("federation pulls everything once, then nothing") {
  auto clock = unit::clock_at();
  auto a = fixture_store("catalog_a", clock);
  auto b = fixture_store("catalog_b", clock);
  EntityStore hub("hub", clock);
  auto ra = hub.federate_pull(*a);
  auto rb = hub.federate_pull(*b);
  CHECK(ra.created + rb.created == 9);
  CHECK(hub.list_domains({}).total == 2);
  std::size_t datasets = 0;
  for (const auto& d : hub.list_domains({}).items) datasets += hub.list_datasets_in_domain(d.urn, {}).total;
  CHECK(datasets == 7);
  CHECK(hub.get_entity(Urn::domain("mobility"))->source_catalog_id == "catalog_a");

  clock->advance(std::chrono::hours(1));
  CHECK(hub.federate_pull(*a) == FederationReport{0, 0, ra.created, 0});
  CHECK(hub.federate_pull(*b) == FederationReport{0, 0, rb.created, 0});
}

TEST_CASE("federation conflict: newer record wins") {
  auto clock = unit::clock_at();
  EntityStore a("src-a", clock);
  EntityStore b("src-b", clock);
  for (auto* s : {&a, &b}) s->upsert_entity(domain_record("d"));
  auto rec = dataset_record("shared");
  rec.description = "old";
  a.upsert_entity(rec, aspect_for("shared", "d"));
  clock->advance(std::chrono::minutes(1));
  rec.description = "new";
  b.upsert_entity(rec, aspect_for("shared", "d"));

  EntityStore hub("hub", clock);
  hub.federate_pull(a);
  auto r = hub.federate_pull(b);
  CHECK(r.conflicts == 2);  // the domain and the dataset
  CHECK(r.updated == 1);
  CHECK(hub.get_entity(dataset_urn("shared"))->description == "new");

  // Pulling the older source again does not roll back.
  auto again = hub.federate_pull(a);
  CHECK(again.updated == 0);
  CHECK(hub.get_entity(dataset_urn("shared"))->description == "new");
}

TEST_CASE("federation deletions do not propagate") {
  auto clock = unit::clock_at();
  auto a = fixture_store("catalog_a", clock);
  EntityStore hub("hub", clock);
  hub.federate_pull(*a);
  auto victim = hub.live_urns().back();
  a->delete_entity(victim);
  hub.federate_pull(*a);
  CHECK(hub.get_entity(victim).has_value());
}

TEST_CASE("change feed replays from any cursor") {
  auto s = fixture_store("catalog_a", unit::clock_at());
  auto all = s->changes_since(0);
  REQUIRE(all.size() == 4);
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].seq_no == i + 1);
  auto sub = subscribe_changes(*s, 2);
  auto tail = sub.poll();
  CHECK(tail.size() == 2);
  CHECK(sub.cursor() == 4);
  CHECK(sub.poll().empty());
  CHECK(sub.next(std::chrono::milliseconds(10)).empty());
}

TEST_CASE("randomized: every successful mutation is in the feed exactly once") {
  testkit::Rng rng(1234);
  auto clock = unit::clock_at();
  EntityStore s("local", clock);
  std::size_t ok = 0;
  std::vector<std::string> names{"a", "b", "c", "d", "e"};
  for (int i = 0; i < 2000; ++i) {
    clock->advance(std::chrono::milliseconds(testkit::below(rng, 1000)));
    auto name = testkit::pick(rng, names);
    try {
      switch (testkit::below(rng, 4)) {
        case 0: s.upsert_entity(domain_record(testkit::pick(rng, names))); break;
        case 1: s.upsert_entity(dataset_record(name), aspect_for(name, testkit::pick(rng, names))); break;
        case 2: s.delete_entity(testkit::coin(rng) ? dataset_urn(name) : Urn::domain(name)); break;
        case 3: s.add_lineage_edge(dataset_urn(name), dataset_urn(testkit::pick(rng, names))); break;
      }
      ++ok;
    } catch (const Error&) {
    }
  }
  auto events = s.changes_since(0);
  CHECK(events.size() == ok);
  for (std::size_t i = 1; i < events.size(); ++i) {
    CHECK(events[i].seq_no == events[i - 1].seq_no + 1);
    CHECK(events[i].at >= events[i - 1].at);
  }
}

TEST_CASE("randomized: pages partition the listing") {
  testkit::Rng rng(77);
  EntityStore s("local", unit::clock_at());
  s.ingest(testkit::random_store_content(rng, 3, 40));
  for (const auto& d : s.list_domains({}).items) {
    auto all = s.list_datasets_in_domain(d.urn, {0, 1000});
    for (std::size_t limit : {1u, 2u, 7u}) {
      std::vector<DatasetEntry> joined;
      for (std::size_t off = 0; off < all.total; off += limit) {
        auto page = s.list_datasets_in_domain(d.urn, {off, limit});
        CHECK(page.total == all.total);
        joined.insert(joined.end(), page.items.begin(), page.items.end());
      }
      CHECK(joined == all.items);
    }
  }
}

TEST_CASE("randomized: search hits all contain the query") {
  testkit::Rng rng(5);
  EntityStore s("local", unit::clock_at());
  s.ingest(testkit::random_store_content(rng, 2, 60));
  for (std::string q : {"a", "z", "7", "é", "数据"}) {
    auto hits = s.search_datasets(q, {0, 1000});
    for (const auto& r : hits.items) {
      bool found = contains_case_insensitive(r.name, q) || contains_case_insensitive(r.description, q);
      for (const auto& [k, v] : r.custom_properties) found = found || contains_case_insensitive(v, q);
      CHECK(found);
    }
  }
}

TEST_CASE("durable store reloads from journal and snapshot") {
  auto dir = temp_dir("store");
  auto clock = unit::clock_at();
  std::vector<ChangeEvent> events;
  std::vector<Urn> live;
  {
    auto s = EntityStore::open(dir, "local", clock, 3);
    s->ingest(parse_ingest_document(read_file(testkit::repo_fixture("catalog_a/catalog.json"))));
    s->delete_entity(s->live_urns().back());
    s->upsert_entity(domain_record("extra"));
    events = s->changes_since(0);
    live = s->live_urns();
  }
  auto s = EntityStore::open(dir, "local", clock, 3);
  CHECK(s->changes_since(0) == events);
  CHECK(s->live_urns() == live);
  s->upsert_entity(domain_record("after"));
  CHECK(s->last_seq_no() == events.back().seq_no + 1);
}

TEST_CASE("ingest document errors carry a line number") {
  try {
    parse_ingest_document("[\n  {\"urn\": \"urn:li:domain:x\",\n  \"kind\": \n}\n]");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
  CHECK_ERRC(parse_ingest_document(R"([{"urn": "urn:li:domain:x"}])"), Errc::SchemaError);
  CHECK_ERRC(parse_ingest_document(R"({"urn": "urn:li:domain:x"})"), Errc::SchemaError);
}
