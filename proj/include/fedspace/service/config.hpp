#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedspace/facade/facade.hpp"

namespace fedspace::service {

enum class Role { Provider, Consumer, Both };

std::string_view to_string(Role r) noexcept;
std::optional<Role> parse_role(std::string_view s) noexcept;

struct ConnectorConfig {
  Role role = Role::Both;
  std::string host = "127.0.0.1";
  int port = 0;  ///< 0 picks a free port
  std::string participant_id;
  std::filesystem::path data_dir;
  std::string admin_token;
  /// Stamped on records ingested into this instance's store.
  std::string catalog_id;
  std::string catalog_title = "Federated catalog";
  /// Empty: the facade reads this instance's own store. Otherwise the base URL
  /// of another instance whose store is queried over HTTP.
  std::string store_url;
  /// Accepted by this instance's store routes.
  std::vector<facade::Credentials> store_credentials;
  /// Presented to stores this instance queries or federates from.
  facade::Credentials client_credentials;
  std::chrono::seconds cache_ttl{30};
  std::size_t page_size = 50;
  std::chrono::seconds session_lifetime{3600};
  std::chrono::seconds transfer_token_lifetime{15 * 60};
  std::chrono::milliseconds sync_interval{200};
  std::vector<std::filesystem::path> end_systems;
};

/// Reads a JSON config file (keys in camelCase, e.g. `participantId`, `dataDir`).
ConnectorConfig load_config(const std::filesystem::path& file);
ConnectorConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
nlohmann::json config_to_json(const ConnectorConfig& c);

/// Applies `FEDSPACE_*` environment overrides.
ConnectorConfig apply_env(ConnectorConfig c);

/// Throws InvalidArgument for an empty participant id or an unwritable data dir.
void validate(const ConnectorConfig& c);

facade::FacadeConfig facade_config(const ConnectorConfig& c);

}  // namespace fedspace::service
