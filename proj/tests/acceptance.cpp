// Acceptance run: one PASS/FAIL line per criterion, with its time limit.
#include <chrono>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "cluster.hpp"
#include "fedspace/common/error.hpp"
#include "fedspace/common/log.hpp"
#include "fedspace/common/subprocess.hpp"
#include "fedspace/common/util.hpp"
#include "fedspace/service/http.hpp"
#include "oracle.hpp"
#include "scenarios.hpp"

#ifndef FEDSPACE_CLI
#error "FEDSPACE_CLI must name the fedspace executable"
#endif

namespace fs = std::filesystem;
using namespace fedspace;
using namespace fedspace::testkit;

namespace {

struct Verdict {
  bool ok = false;
  std::string detail;
};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("fedspace-acceptance-" + random_hex(4)) / name;
  fs::create_directories(dir);
  return dir;
}

int failures = 0;

void criterion(int n, const std::string& title, double limit_s, const std::function<Verdict()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool pass = v.ok && secs < limit_s;
  if (!pass) ++failures;
  std::ostringstream line;
  line << "criterion " << n << ": " << (pass ? "PASS" : "FAIL") << "  " << title << "  [" << std::fixed
       << std::setprecision(3) << secs << " s, limit " << limit_s << " s]  " << v.detail;
  std::cout << line.str() << std::endl;
}

}  // namespace

int main() {
  log::set_level(log::Level::Error);
  criterion(1, "state machines match the hand-derived oracle tables", 1.0, [] {
    std::size_t neg_cells = 0;
    std::size_t tr_cells = 0;
    auto neg = diff_negotiation_table(test_fixture("negotiation_transitions.tsv"), &neg_cells);
    auto tr = diff_transfer_table(test_fixture("transfer_transitions.tsv"), &tr_cells);
    std::ostringstream d;
    d << "negotiation " << neg_cells << " cells, " << neg.size() << " diffs; transfer " << tr_cells << " cells, "
      << tr.size() << " diffs";
    for (const auto& x : neg) d << "; " << x.cell << " expected " << x.expected << " got " << x.actual;
    for (const auto& x : tr) d << "; " << x.cell << " expected " << x.expected << " got " << x.actual;
    return Verdict{neg.empty() && tr.empty(), d.str()};
  });

  criterion(2, "10000 random protocol sequences keep every invariant", 60.0, [] {
    auto r = fuzz_protocols(10000, 20261018);
    std::ostringstream d;
    d << r.sequences << " sequences, " << r.operations << " operations, " << r.finalized << " finalized, "
      << r.transfers_started << " transfers started, " << r.bytes_served << " bytes served, " << r.violations
      << " violations";
    for (const auto& s : r.samples) d << "; " << s;
    return Verdict{r.sequences == 10000 && r.violations == 0, d.str()};
  });

  criterion(3, "1000 random policy evaluations agree with the naive evaluator", 5.0, [] {
    auto r = compare_odrl(1000, 7);
    std::ostringstream d;
    d << r.agreements << "/" << r.cases << " agree (permit " << r.permits << ", deny " << r.denies
      << ", not applicable " << r.not_applicable << ")";
    for (const auto& s : r.samples) d << "; " << s;
    return Verdict{r.cases == 1000 && r.agreements == r.cases, d.str()};
  });

  criterion(4, "two source catalogs federate into 2 catalogs / 7 datasets, idempotently", 10.0, [] {
    auto r = federation_scenario(scratch("federation"));
    std::ostringstream d;
    d << r.catalogs << " catalogs, " << r.datasets << " datasets; first pull created " << r.first_a.created << "+"
      << r.first_b.created << "; second pull created " << r.second_a.created + r.second_b.created << " updated "
      << r.second_a.updated + r.second_b.updated;
    if (!r.failure.empty()) d << "; " << r.failure;
    bool ok = r.failure.empty() && r.catalogs == 2 && r.datasets == 7 && r.second_a.created == 0 &&
              r.second_a.updated == 0 && r.second_b.created == 0 && r.second_b.updated == 0;
    return Verdict{ok, d.str()};
  });

  criterion(5, "demo runs ingest to byte-identical transfer", 30.0, [] {
    auto dir = scratch("demo");
    auto log = dir / "demo.log";
    auto child = Child::spawn({FEDSPACE_CLI, "demo", "--work-dir", (dir / "work").string()}, log);
    auto status = child.wait_for(std::chrono::seconds(60));
    if (!status) child.kill_hard();
    auto out = read_file(log);
    bool passed = status && *status == 0 && out.find("PASS demo") != std::string::npos;
    std::istringstream lines(out);
    std::string line;
    std::string last;
    while (std::getline(lines, line))
      if (line.rfind("catalog:", 0) == 0 || line.rfind("negotiation", 0) == 0 || line.rfind("transfer:", 0) == 0)
        last += (last.empty() ? "" : "; ") + line;
    return Verdict{passed, "exit " + (status ? std::to_string(*status) : std::string("timeout")) + "; " + last};
  });

  criterion(6, "deleting a federated dataset invalidates its offer and ends negotiation", 5.0, [] {
    auto r = invalidation_chain();
    bool reason_ok = r.reason == "policy invalidated" || r.reason == "target unresolved";
    std::ostringstream d;
    d << "DELETE event " << (r.delete_event_seen ? "seen" : "missing") << ", offer "
      << odrl::to_string(r.offer_status) << ", negotiation " << negotiation::to_string(r.state) << " (" << r.reason
      << ")";
    return Verdict{r.delete_event_seen && r.offer_status == odrl::PolicyStatus::Invalidated &&
                       r.state == negotiation::State::Terminated && reason_ok,
                   d.str()};
  });

  criterion(7, "500 random catalogs round-trip; mapped catalogs always validate", 10.0, [] {
    auto r = dcat_round_trip(500, 100, 99);
    std::ostringstream d;
    d << r.identical << "/" << r.catalogs << " identical after round trip; " << r.mapped_valid << "/" << r.mapped
      << " mapped catalogs valid";
    for (const auto& s : r.samples) d << "; " << s;
    return Verdict{r.catalogs == 500 && r.identical == r.catalogs && r.mapped > 0 && r.mapped_valid == r.mapped,
                   d.str()};
  });

  criterion(8, "provider killed after agreement, restarted: agreement kept, transfer runs", 15.0, [] {
    auto dir = scratch("restart");
    tools::Cluster cluster(FEDSPACE_CLI, dir, random_hex(16));
    tools::start_demo_nodes(cluster, FEDSPACE_FIXTURES_DIR);
    std::ostringstream sink;
    auto demo = tools::run_demo(cluster, FEDSPACE_FIXTURES_DIR, sink);
    if (demo.agreement_uid.empty()) return Verdict{false, "no agreement before the kill: " + demo.failure};

    cluster.kill("provider");
    auto old_url = cluster.url("provider");
    auto url = cluster.restart("provider");
    service::HttpClient http(url, Errc::ProviderUnreachable);
    auto agreement = http.get("/agreements/" + percent_encode(demo.agreement_uid));
    if (!agreement.ok()) return Verdict{false, "agreement lookup after restart returned " + std::to_string(agreement.status)};
    auto status = agreement.json_body().value("status", "");
    auto bytes = tools::consumer_transfer(cluster, demo.agreement_uid);
    auto expected = read_file(fs::path(FEDSPACE_FIXTURES_DIR) / tools::kDemoFile);
    std::ostringstream d;
    d << "agreement " << demo.agreement_uid << " " << status << " after restart (" << old_url << " -> " << url
      << "); transfer " << bytes.size() << " bytes, " << (bytes == expected ? "identical" : "DIFFERENT");
    return Verdict{status == "ACTIVE" && bytes == expected, d.str()};
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
