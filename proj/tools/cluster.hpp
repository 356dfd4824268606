#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include <json.hpp>

#include "fedspace/common/subprocess.hpp"
#include "fedspace/service/http.hpp"

namespace fedspace::tools {

using nlohmann::json;

/// A set of `fedspace serve` processes, one data directory each, under a work directory.
class Cluster {
 public:
  Cluster(std::filesystem::path cli, std::filesystem::path work_dir, std::string admin_token);
  ~Cluster();

  /// Writes `config` (dataDir and adminToken filled in), spawns the node, waits
  /// for its endpoint and health check. Returns the base URL.
  std::string start(const std::string& name, json config);
  /// Starts a node again from its existing config and data directory.
  std::string restart(const std::string& name);
  /// SIGKILL, no shutdown hooks.
  void kill(const std::string& name);
  void stop_all();

  [[nodiscard]] std::string url(const std::string& name) const;
  [[nodiscard]] std::filesystem::path data_dir(const std::string& name) const;
  [[nodiscard]] const std::string& admin_token() const noexcept { return admin_token_; }
  [[nodiscard]] const std::filesystem::path& work_dir() const noexcept { return work_; }

  /// Admin call; throws the decoded error on a non-2xx answer.
  json admin_post(const std::string& name, const std::string& path, const std::string& body);
  json admin_get(const std::string& name, const std::string& path);

 private:
  struct Node {
    std::filesystem::path dir;
    std::filesystem::path config;
    Child child;
    std::string url;
  };
  std::string launch(Node& node, const std::string& name);

  std::filesystem::path cli_;
  std::filesystem::path work_;
  std::string admin_token_;
  std::map<std::string, Node> nodes_;
};

struct DemoResult {
  bool ok = false;
  std::string failure;
  std::string offer_uid;
  std::string agreement_uid;
  std::string dataset;
};

/// Source A, source B, a federator, a provider mapping the federator's store,
/// and a consumer. Returns after everything is healthy.
void start_demo_nodes(Cluster& cluster, const std::filesystem::path& fixtures);

/// Ingest, federate, catalog check, policy, negotiation, transfer, byte comparison.
/// Progress lines go to `out`.
DemoResult run_demo(Cluster& cluster, const std::filesystem::path& fixtures, std::ostream& out);

/// Consumer-driven transfer of `agreement`; returns the bytes received, throws on failure.
std::string consumer_transfer(Cluster& cluster, const std::string& agreement);

/// The dataset the demo negotiates for and its fixture file.
inline constexpr const char* kDemoDataset = "urn:li:dataset:(urn:li:dataPlatform:postgres,traffic.counts,PROD)";
inline constexpr const char* kDemoFile = "catalog_a/data/traffic.counts.csv";

}  // namespace fedspace::tools
