// fedspace: run a connector, administer a store, negotiate and transfer.
#include <signal.h>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "cluster.hpp"
#include "fedspace/common/error.hpp"
#include "fedspace/common/log.hpp"
#include "fedspace/common/subprocess.hpp"
#include "fedspace/common/util.hpp"
#include "fedspace/negotiation/negotiator.hpp"
#include "fedspace/service/config.hpp"
#include "fedspace/service/connector.hpp"
#include "fedspace/service/http.hpp"
#include "fedspace/store/codec.hpp"

#ifndef FEDSPACE_FIXTURES_DIR
#define FEDSPACE_FIXTURES_DIR "fixtures"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fedspace;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kConnectivity = 2, kTerminated = 3, kDenied = 4 };

int exit_code(Errc code) {
  switch (code) {
    case Errc::ProviderUnreachable:
    case Errc::SourceUnreachable:
      return kConnectivity;
    default:
      return kUsage;
  }
}

json checked(const service::HttpResponse& r) {
  if (!r.ok()) r.raise(Errc::InvalidArgument);
  return r.json_body();
}

service::HttpClient::Headers admin_headers(const std::string& token) {
  if (token.empty()) throw Error(Errc::InvalidArgument, "an admin token is required (--admin-token or FEDSPACE_ADMIN_TOKEN)");
  return {{"X-Admin-Token", token}};
}

/// Runs `fn` once, or every `every` seconds until killed.
template <typename F>
int repeat(double every, F&& fn) {
  for (;;) {
    int rc = fn();
    if (every <= 0) return rc;
    std::this_thread::sleep_for(std::chrono::duration<double>(every));
  }
}

int serve(const fs::path& config_file) {
  auto config = service::apply_env(service::load_config(config_file));

  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::Connector connector(std::move(config));
  connector.start();
  int sig = 0;
  sigwait(&signals, &sig);
  log::info("service.stopping", {{"signal", std::to_string(sig)}});
  connector.stop();
  return kOk;
}

int print_catalog(const std::string& provider, bool datasets, const std::string& domain) {
  service::ProviderClient client(provider);
  auto path = domain.empty() ? std::string("/catalog") : "/catalog?domain=" + percent_encode(domain);
  auto root = checked(client.http().get(path));
  for (const auto& c : root.value("dcat:catalog", json::array())) {
    if (!datasets) {
      std::cout << c.value("@id", "") << '\t' << c.value("dct:title", "") << '\t'
                << c.value("dcat:dataset", json::array()).size() << " datasets\n";
      continue;
    }
    for (const auto& d : c.value("dcat:dataset", json::array()))
      std::cout << d.value("@id", "") << '\t' << d.value("dct:title", "") << '\n';
  }
  return kOk;
}

int negotiate(const std::string& provider, const std::string& offer, const std::string& consumer,
              const std::string& participant) {
  json process;
  if (!consumer.empty()) {
    service::HttpClient http(consumer, Errc::ProviderUnreachable, std::chrono::seconds(60));
    process = checked(http.post("/consumer/negotiations", json{{"provider", provider}, {"offerId", offer}}.dump()));
  } else {
    service::ProviderClient client(provider);
    auto terms = client.find_offer(offer);
    service::HttpProviderChannel channel(provider);
    negotiation::ConsumerNegotiator negotiator(participant, std::make_shared<SystemClock>());
    process = negotiation::process_to_json(negotiator.negotiate(channel, offer, terms, ""));
  }
  std::cout << process.dump(2) << '\n';
  return process.value("state", "") == "FINALIZED" ? kOk : kTerminated;
}

int transfer_cmd(const std::string& provider, const std::string& agreement, const fs::path& out,
                 const std::string& consumer, const std::string& format) {
  json process;
  std::string bytes;
  if (!consumer.empty()) {
    service::HttpClient http(consumer, Errc::ProviderUnreachable, std::chrono::seconds(60));
    json body{{"provider", provider}, {"agreementId", agreement}};
    if (!format.empty()) body["format"] = format;
    auto result = checked(http.post("/consumer/transfers", body.dump()));
    process = result.at("transfer");
    if (result.at("file").is_string()) bytes = read_file(result.at("file").get<std::string>());
  } else {
    service::ProviderClient client(provider);
    auto result = client.run_transfer(agreement, format.empty() ? std::nullopt : std::optional(format), "");
    process = transfer::process_to_json(result.process);
    bytes = std::move(result.bytes);
  }
  if (process.value("state", "") != "COMPLETED") {
    std::cerr << "transfer " << process.value("state", "") << ": " << process.value("reason", "") << '\n';
    return process.value("reason", "") == "policy denied" ? kDenied : kTerminated;
  }
  write_file_atomic(out, bytes);
  std::cout << process.value("transferId", "") << ": " << bytes.size() << " bytes -> " << out.string() << '\n';
  return kOk;
}

int demo(fs::path work, bool keep, const fs::path& fixtures) {
  bool temporary = work.empty();
  if (temporary) work = fs::temp_directory_path() / ("fedspace-demo-" + random_hex(4));
  int rc = kTerminated;
  {
    tools::Cluster cluster(self_executable(), work, random_hex(16));
    std::cout << "work directory: " << work.string() << '\n';
    tools::start_demo_nodes(cluster, fixtures);
    for (const char* n : {"source-a", "source-b", "federator", "provider", "consumer"})
      std::cout << n << ": " << cluster.url(n) << '\n';
    auto result = tools::run_demo(cluster, fixtures, std::cout);
    if (result.ok) {
      std::cout << "PASS demo\n";
      rc = kOk;
    } else {
      std::cout << "FAIL demo: " << result.failure << '\n';
    }
  }
  if (temporary && !keep) {
    std::error_code ec;
    fs::remove_all(work, ec);
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedspace: federated catalog connector"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn or error")->check(CLI::IsMember({"debug", "info", "warn", "error"}));
  std::string admin_token;
  app.add_option("--admin-token", admin_token, "admin token of the target instance")->envname("FEDSPACE_ADMIN_TOKEN");

  fs::path config_file;
  auto* serve_cmd = app.add_subcommand("serve", "run a connector");
  serve_cmd->add_option("--config", config_file, "JSON config file")->required()->check(CLI::ExistingFile);

  fs::path ingest_file;
  std::string store_url;
  double every = 0;
  bool as_json = false;
  auto* ingest_cmd = app.add_subcommand("ingest", "load a metadata document into a store");
  ingest_cmd->add_option("--file", ingest_file, "JSON list of records")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--store", store_url, "instance URL")->required();
  ingest_cmd->add_option("--every", every, "repeat every N seconds");
  ingest_cmd->add_flag("--json", as_json, "print the report as JSON");

  std::string source_url;
  auto* federate_cmd = app.add_subcommand("federate", "pull a source store into a store");
  federate_cmd->add_option("--source", source_url, "source instance URL")->required();
  federate_cmd->add_option("--store", store_url, "target instance URL")->required();
  federate_cmd->add_option("--every", every, "repeat every N seconds");
  federate_cmd->add_flag("--json", as_json, "print the report as JSON");

  std::string provider_url;
  std::string domain;
  auto* domains_cmd = app.add_subcommand("domains", "list the catalogs a provider publishes");
  domains_cmd->add_option("--provider", provider_url, "provider URL")->required();
  auto* datasets_cmd = app.add_subcommand("datasets", "list the datasets a provider publishes");
  datasets_cmd->add_option("--provider", provider_url, "provider URL")->required();
  datasets_cmd->add_option("--domain", domain, "restrict to one domain urn");

  std::string query;
  auto* search_cmd = app.add_subcommand("search", "search dataset metadata");
  search_cmd->add_option("--store", store_url, "instance URL")->required();
  search_cmd->add_option("--query,-q", query, "search text")->required();

  std::string target;
  fs::path policy_file;
  auto* policy_cmd = app.add_subcommand("policy", "manage policies");
  policy_cmd->require_subcommand(1);
  auto* policy_create = policy_cmd->add_subcommand("create", "create an offer on a dataset");
  policy_create->add_option("--provider", provider_url, "provider URL")->required();
  policy_create->add_option("--target", target, "dataset urn")->required();
  policy_create->add_option("--file", policy_file, "rules as JSON")->required()->check(CLI::ExistingFile);
  auto* policy_list = policy_cmd->add_subcommand("list", "list policies");
  policy_list->add_option("--provider", provider_url, "provider URL")->required();
  policy_list->add_option("--target", target, "dataset urn");

  std::string offer_uid;
  std::string consumer_url;
  std::string participant = "urn:connector:cli";
  auto* negotiate_cmd = app.add_subcommand("negotiate", "negotiate an agreement for an offer");
  negotiate_cmd->add_option("--provider", provider_url, "provider URL")->required();
  negotiate_cmd->add_option("--offer", offer_uid, "offer uid")->required();
  negotiate_cmd->add_option("--consumer", consumer_url, "consumer instance to negotiate through");
  negotiate_cmd->add_option("--participant", participant, "participant id when negotiating directly");

  std::string agreement_uid;
  fs::path out_file;
  std::string format;
  auto* transfer_cmd_app = app.add_subcommand("transfer", "transfer the data an agreement covers");
  transfer_cmd_app->add_option("--provider", provider_url, "provider URL")->required();
  transfer_cmd_app->add_option("--agreement", agreement_uid, "agreement uid")->required();
  transfer_cmd_app->add_option("--out", out_file, "output file")->required();
  transfer_cmd_app->add_option("--consumer", consumer_url, "consumer instance to transfer through");
  transfer_cmd_app->add_option("--format", format, "requested format");

  fs::path work_dir;
  bool keep = false;
  fs::path fixtures = FEDSPACE_FIXTURES_DIR;
  auto* demo_cmd = app.add_subcommand("demo", "run five local instances end to end");
  demo_cmd->add_option("--work-dir", work_dir, "keep state here instead of a temp dir");
  demo_cmd->add_flag("--keep", keep, "keep the temp work dir");
  demo_cmd->add_option("--fixtures", fixtures, "fixture directory")->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  log::set_level(log_level == "debug"  ? log::Level::Debug
                 : log_level == "warn" ? log::Level::Warn
                 : log_level == "error" ? log::Level::Error
                                        : log::Level::Info);

  try {
    if (*serve_cmd) return serve(config_file);

    if (*ingest_cmd) {
      auto text = read_file(ingest_file);
      auto records = store::parse_ingest_document(text);  // reports the offending line before anything is sent
      return repeat(every, [&] {
        service::HttpClient http(store_url, Errc::SourceUnreachable, std::chrono::seconds(60));
        auto report = checked(http.post("/admin/ingest", text, "application/json", admin_headers(admin_token)));
        if (as_json) std::cout << report.dump() << '\n';
        else
          std::cout << records.size() << " records: created=" << report.value("created", 0)
                    << " updated=" << report.value("updated", 0) << '\n';
        return kOk;
      });
    }

    if (*federate_cmd) {
      return repeat(every, [&] {
        service::HttpClient http(store_url, Errc::SourceUnreachable, std::chrono::seconds(120));
        auto report = checked(http.post("/admin/federate", json{{"source", source_url}}.dump(), "application/json",
                                        admin_headers(admin_token)));
        if (as_json) std::cout << report.dump() << '\n';
        else
          std::cout << "created=" << report.value("created", 0) << " updated=" << report.value("updated", 0)
                    << " unchanged=" << report.value("unchanged", 0) << " conflicts=" << report.value("conflicts", 0)
                    << '\n';
        return kOk;
      });
    }

    if (*domains_cmd) return print_catalog(provider_url, false, "");
    if (*datasets_cmd) return print_catalog(provider_url, true, domain);

    if (*search_cmd) {
      service::HttpClient http(store_url, Errc::SourceUnreachable);
      auto page = checked(http.get("/admin/search?q=" + percent_encode(query), admin_headers(admin_token)));
      for (const auto& r : page.at("items")) std::cout << r.value("urn", "") << '\t' << r.value("name", "") << '\n';
      std::cerr << page.value("total", 0) << " matches\n";
      return kOk;
    }

    if (*policy_create) {
      auto body = json::parse(read_file(policy_file));
      body["target"] = target;
      service::HttpClient http(provider_url, Errc::ProviderUnreachable);
      auto created = checked(http.post("/admin/policies", body.dump(), "application/json", admin_headers(admin_token)));
      std::cout << created.dump(2) << '\n';
      return kOk;
    }
    if (*policy_list) {
      service::HttpClient http(provider_url, Errc::ProviderUnreachable);
      auto path = target.empty() ? std::string("/admin/policies") : "/admin/policies?target=" + percent_encode(target);
      for (const auto& p : checked(http.get(path, admin_headers(admin_token))))
        std::cout << p.at("policy").value("uid", "") << '\t' << p.at("policy").value("@type", "") << '\t'
                  << p.value("status", "") << '\t' << p.at("policy").value("target", "") << '\n';
      return kOk;
    }

    if (*negotiate_cmd) return negotiate(provider_url, offer_uid, consumer_url, participant);
    if (*transfer_cmd_app) return transfer_cmd(provider_url, agreement_uid, out_file, consumer_url, format);
    if (*demo_cmd) return demo(work_dir, keep, fixtures);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.detail() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
