#include "cluster.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "fedspace/common/error.hpp"
#include "fedspace/common/util.hpp"

namespace fedspace::tools {

namespace fs = std::filesystem;
using service::HttpClient;

namespace {

std::string tail(const fs::path& file, std::size_t bytes = 2000) {
  std::error_code ec;
  if (!fs::exists(file, ec)) return {};
  auto text = read_file(file);
  return text.size() > bytes ? text.substr(text.size() - bytes) : text;
}

json checked(const service::HttpResponse& r) {
  if (!r.ok()) r.raise(Errc::InvalidArgument);
  return r.json_body();
}

}  // namespace

Cluster::Cluster(fs::path cli, fs::path work_dir, std::string admin_token)
    : cli_(std::move(cli)), work_(std::move(work_dir)), admin_token_(std::move(admin_token)) {
  fs::create_directories(work_);
}

Cluster::~Cluster() { stop_all(); }

std::string Cluster::start(const std::string& name, json config) {
  Node node;
  node.dir = work_ / name;
  fs::create_directories(node.dir / "data");
  config["dataDir"] = (node.dir / "data").string();
  if (!config.contains("adminToken")) config["adminToken"] = admin_token_;
  if (!config.contains("listen")) config["listen"] = "127.0.0.1:0";
  node.config = node.dir / "config.json";
  write_file_atomic(node.config, config.dump(2));
  auto& slot = nodes_[name] = std::move(node);
  return launch(slot, name);
}

std::string Cluster::restart(const std::string& name) {
  auto it = nodes_.find(name);
  if (it == nodes_.end()) throw Error(Errc::InvalidArgument, "no node " + name);
  if (it->second.child.running()) it->second.child.terminate();
  return launch(it->second, name);
}

std::string Cluster::launch(Node& node, const std::string& name) {
  auto endpoint = node.dir / "data" / "endpoint.json";
  std::error_code ec;
  fs::remove(endpoint, ec);
  auto log = node.dir / "serve.log";
  node.child = Child::spawn({cli_.string(), "serve", "--config", node.config.string()}, log);

  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(20);
  while (std::chrono::steady_clock::now() < deadline) {
    if (!node.child.running())
      throw Error(Errc::Io, name + " exited during startup:\n" + tail(log));
    if (fs::exists(endpoint, ec)) {
      auto doc = json::parse(read_file(endpoint), nullptr, false);
      if (!doc.is_discarded() && doc.contains("url")) {
        node.url = doc.at("url").get<std::string>();
        try {
          HttpClient http(node.url, Errc::ProviderUnreachable, std::chrono::seconds(2));
          if (http.get("/healthz").ok()) return node.url;
        } catch (const Error&) {
          // not listening yet
        }
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  throw Error(Errc::Io, name + " did not become healthy:\n" + tail(log));
}

void Cluster::kill(const std::string& name) {
  auto it = nodes_.find(name);
  if (it != nodes_.end()) it->second.child.kill_hard();
}

void Cluster::stop_all() {
  for (auto& [name, node] : nodes_) node.child.terminate();
}

std::string Cluster::url(const std::string& name) const {
  auto it = nodes_.find(name);
  if (it == nodes_.end()) throw Error(Errc::InvalidArgument, "no node " + name);
  return it->second.url;
}

fs::path Cluster::data_dir(const std::string& name) const { return work_ / name / "data"; }

json Cluster::admin_post(const std::string& name, const std::string& path, const std::string& body) {
  HttpClient http(url(name), Errc::ProviderUnreachable, std::chrono::seconds(30));
  return checked(http.post(path, body, "application/json", {{"X-Admin-Token", admin_token_}}));
}

json Cluster::admin_get(const std::string& name, const std::string& path) {
  HttpClient http(url(name), Errc::ProviderUnreachable, std::chrono::seconds(30));
  return checked(http.get(path, {{"X-Admin-Token", admin_token_}}));
}

void start_demo_nodes(Cluster& cluster, const fs::path& fixtures) {
  json federator_creds{{"clientId", "federator"}, {"clientSecret", random_hex(12)}};
  json provider_creds{{"clientId", "provider"}, {"clientSecret", random_hex(12)}};

  for (const auto& [name, catalog] : {std::pair{"source-a", "source-a"}, std::pair{"source-b", "source-b"}})
    cluster.start(name, json{{"role", "provider"},
                             {"participantId", std::string("urn:connector:") + name},
                             {"catalogId", catalog},
                             {"storeCredentials", json::array({federator_creds})}});
  auto federator = cluster.start("federator", json{{"role", "provider"},
                                                   {"participantId", "urn:connector:federator"},
                                                   {"catalogId", "federator"},
                                                   {"storeCredentials", json::array({provider_creds})},
                                                   {"clientCredentials", federator_creds}});
  cluster.start("provider", json{{"role", "provider"},
                                 {"participantId", "urn:connector:provider"},
                                 {"catalogId", "urn:connector:provider:catalog"},
                                 {"catalogTitle", "Federated data space catalog"},
                                 {"storeUrl", federator},
                                 {"clientCredentials", provider_creds},
                                 {"endSystems", json::array({(fixtures / "catalog_a" / "end_system.json").string(),
                                                             (fixtures / "catalog_b" / "end_system.json").string()})}});
  cluster.start("consumer", json{{"role", "consumer"}, {"participantId", "urn:connector:consumer"}});
}

std::string consumer_transfer(Cluster& cluster, const std::string& agreement) {
  HttpClient consumer(cluster.url("consumer"), Errc::ProviderUnreachable, std::chrono::seconds(30));
  auto out = checked(consumer.post(
      "/consumer/transfers", json{{"provider", cluster.url("provider")}, {"agreementId", agreement}}.dump()));
  auto state = out.at("transfer").at("state").get<std::string>();
  if (state != "COMPLETED")
    throw Error(Errc::InvariantViolation, "transfer ended " + state + ": " + out.at("transfer").value("reason", ""));
  return read_file(out.at("file").get<std::string>());
}

DemoResult run_demo(Cluster& cluster, const fs::path& fixtures, std::ostream& out) {
  DemoResult result;
  result.dataset = kDemoDataset;
  auto fail = [&](std::string why) {
    result.failure = std::move(why);
    return result;
  };

  for (const auto& [node, dir] : {std::pair{"source-a", "catalog_a"}, std::pair{"source-b", "catalog_b"}}) {
    auto report = cluster.admin_post(node, "/admin/ingest", read_file(fixtures / dir / "catalog.json"));
    out << "ingest " << dir << " -> " << node << ": created=" << report.at("created") << '\n';
  }

  for (int round = 0; round < 2; ++round) {
    for (const char* node : {"source-a", "source-b"}) {
      auto report = cluster.admin_post("federator", "/admin/federate", json{{"source", cluster.url(node)}}.dump());
      out << "federate " << node << " (pass " << round + 1 << "): created=" << report.value("created", 0)
          << " updated=" << report.value("updated", 0) << '\n';
      if (round == 1 && (report.value("created", 0) != 0 || report.value("updated", 0) != 0))
        return fail("repeated federation changed the store");
    }
  }

  HttpClient provider(cluster.url("provider"), Errc::ProviderUnreachable, std::chrono::seconds(30));
  auto catalog = checked(provider.get("/catalog"));
  std::size_t catalogs = 0;
  std::size_t datasets = 0;
  for (const auto& c : catalog.value("dcat:catalog", json::array())) {
    ++catalogs;
    datasets += c.value("dcat:dataset", json::array()).size();
  }
  out << "catalog: " << catalogs << " catalogs, " << datasets << " datasets\n";
  if (catalogs != 2 || datasets != 7) return fail("expected 2 catalogs and 7 datasets");

  auto policy = json::parse(read_file(fixtures / "policy_use.json"));
  policy["target"] = kDemoDataset;
  auto offer = cluster.admin_post("provider", "/admin/policies", policy.dump());
  result.offer_uid = offer.at("policy").at("uid").get<std::string>();
  out << "offer " << result.offer_uid << " on " << kDemoDataset << '\n';

  HttpClient consumer(cluster.url("consumer"), Errc::ProviderUnreachable, std::chrono::seconds(30));
  auto negotiation = checked(consumer.post(
      "/consumer/negotiations", json{{"provider", cluster.url("provider")}, {"offerId", result.offer_uid}}.dump()));
  auto state = negotiation.at("state").get<std::string>();
  out << "negotiation " << negotiation.at("processId").get<std::string>() << ": " << state << '\n';
  if (state != "FINALIZED") return fail("negotiation ended " + state + ": " + negotiation.value("reason", ""));
  result.agreement_uid = negotiation.at("agreementId").get<std::string>();

  auto bytes = consumer_transfer(cluster, result.agreement_uid);
  auto expected = read_file(fixtures / kDemoFile);
  out << "transfer: " << bytes.size() << " bytes received, " << expected.size() << " expected\n";
  if (bytes != expected) return fail("received bytes differ from the fixture");
  result.ok = true;
  return result;
}

}  // namespace fedspace::tools
