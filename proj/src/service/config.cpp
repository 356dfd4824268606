#include "fedspace/service/config.hpp"

#include <cstdlib>
#include <fstream>

#include "fedspace/common/error.hpp"
#include "fedspace/common/util.hpp"

namespace fedspace::service {

using nlohmann::json;

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::Provider: return "provider";
    case Role::Consumer: return "consumer";
    case Role::Both: return "both";
  }
  return "both";
}

std::optional<Role> parse_role(std::string_view s) noexcept {
  auto lower = to_lower(s);
  if (lower == "provider") return Role::Provider;
  if (lower == "consumer") return Role::Consumer;
  if (lower == "both") return Role::Both;
  return std::nullopt;
}

namespace {

facade::Credentials credentials_from_json(const json& j) {
  return facade::Credentials{j.value("clientId", ""), j.value("clientSecret", "")};
}

json credentials_to_json(const facade::Credentials& c) {
  return json{{"clientId", c.client_id}, {"clientSecret", c.client_secret}};
}

void parse_listen(ConnectorConfig& c, std::string_view listen) {
  auto colon = listen.rfind(':');
  if (colon == std::string_view::npos) throw Error(Errc::InvalidArgument, "listen must be host:port");
  c.host = std::string(listen.substr(0, colon));
  try {
    c.port = std::stoi(std::string(listen.substr(colon + 1)));
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "bad port in listen address");
  }
  if (c.port < 0 || c.port > 65535) throw Error(Errc::InvalidArgument, "port out of range");
}

}  // namespace

ConnectorConfig config_from_json(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "config must be an object");
  ConnectorConfig c;
  try {
    if (j.contains("role")) {
      auto r = parse_role(j.at("role").get<std::string>());
      if (!r) throw Error(Errc::InvalidArgument, "role must be provider, consumer or both");
      c.role = *r;
    }
    if (j.contains("listen")) parse_listen(c, j.at("listen").get<std::string>());
    c.participant_id = j.value("participantId", "");
    if (j.contains("dataDir")) {
      std::filesystem::path d = j.at("dataDir").get<std::string>();
      c.data_dir = d.is_relative() && !base.empty() ? base / d : d;
    }
    c.admin_token = j.value("adminToken", "");
    c.catalog_id = j.value("catalogId", "");
    c.catalog_title = j.value("catalogTitle", c.catalog_title);
    c.store_url = j.value("storeUrl", "");
    if (j.contains("storeCredentials"))
      for (const auto& cred : j.at("storeCredentials")) c.store_credentials.push_back(credentials_from_json(cred));
    if (j.contains("clientCredentials")) c.client_credentials = credentials_from_json(j.at("clientCredentials"));
    c.cache_ttl = std::chrono::seconds(j.value("cacheTtlSeconds", c.cache_ttl.count()));
    c.page_size = j.value("pageSize", c.page_size);
    c.session_lifetime = std::chrono::seconds(j.value("sessionTokenSeconds", c.session_lifetime.count()));
    c.transfer_token_lifetime =
        std::chrono::seconds(j.value("transferTokenSeconds", c.transfer_token_lifetime.count()));
    c.sync_interval = std::chrono::milliseconds(j.value("syncIntervalMs", c.sync_interval.count()));
    if (j.contains("endSystems"))
      for (const auto& e : j.at("endSystems")) {
        std::filesystem::path p = e.get<std::string>();
        c.end_systems.push_back(p.is_relative() && !base.empty() ? base / p : p);
      }
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("config: ") + e.what());
  }
  return c;
}

json config_to_json(const ConnectorConfig& c) {
  json creds = json::array();
  for (const auto& s : c.store_credentials) creds.push_back(credentials_to_json(s));
  json ends = json::array();
  for (const auto& e : c.end_systems) ends.push_back(e.string());
  return json{{"role", to_string(c.role)},
              {"listen", c.host + ":" + std::to_string(c.port)},
              {"participantId", c.participant_id},
              {"dataDir", c.data_dir.string()},
              {"adminToken", c.admin_token},
              {"catalogId", c.catalog_id},
              {"catalogTitle", c.catalog_title},
              {"storeUrl", c.store_url},
              {"storeCredentials", std::move(creds)},
              {"clientCredentials", credentials_to_json(c.client_credentials)},
              {"cacheTtlSeconds", c.cache_ttl.count()},
              {"pageSize", c.page_size},
              {"sessionTokenSeconds", c.session_lifetime.count()},
              {"transferTokenSeconds", c.transfer_token_lifetime.count()},
              {"syncIntervalMs", c.sync_interval.count()},
              {"endSystems", std::move(ends)}};
}

ConnectorConfig load_config(const std::filesystem::path& file) {
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, file.string() + ": " + e.what());
  }
  return config_from_json(j, file.parent_path());
}

ConnectorConfig apply_env(ConnectorConfig c) {
  auto env = [](const char* key) -> std::optional<std::string> {
    const char* v = std::getenv(key);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  auto number = [](const std::string& key, const std::string& v) {
    try {
      return std::stoll(v);
    } catch (const std::exception&) {
      throw Error(Errc::InvalidArgument, key + " must be a number");
    }
  };
  if (auto v = env("FEDSPACE_ROLE")) {
    auto r = parse_role(*v);
    if (!r) throw Error(Errc::InvalidArgument, "FEDSPACE_ROLE must be provider, consumer or both");
    c.role = *r;
  }
  if (auto v = env("FEDSPACE_LISTEN")) parse_listen(c, *v);
  if (auto v = env("FEDSPACE_PARTICIPANT_ID")) c.participant_id = *v;
  if (auto v = env("FEDSPACE_DATA_DIR")) c.data_dir = *v;
  if (auto v = env("FEDSPACE_ADMIN_TOKEN")) c.admin_token = *v;
  if (auto v = env("FEDSPACE_CATALOG_ID")) c.catalog_id = *v;
  if (auto v = env("FEDSPACE_STORE_URL")) c.store_url = *v;
  if (auto v = env("FEDSPACE_CLIENT_ID")) c.client_credentials.client_id = *v;
  if (auto v = env("FEDSPACE_CLIENT_SECRET")) c.client_credentials.client_secret = *v;
  if (auto v = env("FEDSPACE_PAGE_SIZE")) c.page_size = static_cast<std::size_t>(number("FEDSPACE_PAGE_SIZE", *v));
  if (auto v = env("FEDSPACE_CACHE_TTL_SECONDS"))
    c.cache_ttl = std::chrono::seconds(number("FEDSPACE_CACHE_TTL_SECONDS", *v));
  if (auto v = env("FEDSPACE_TRANSFER_TOKEN_SECONDS"))
    c.transfer_token_lifetime = std::chrono::seconds(number("FEDSPACE_TRANSFER_TOKEN_SECONDS", *v));
  if (auto v = env("FEDSPACE_SYNC_INTERVAL_MS"))
    c.sync_interval = std::chrono::milliseconds(number("FEDSPACE_SYNC_INTERVAL_MS", *v));
  return c;
}

void validate(const ConnectorConfig& c) {
  if (c.participant_id.empty()) throw Error(Errc::InvalidArgument, "participantId must not be empty");
  if (c.data_dir.empty()) throw Error(Errc::InvalidArgument, "dataDir must be set");
  if (c.page_size == 0) throw Error(Errc::InvalidArgument, "pageSize must be >= 1");
  if (c.transfer_token_lifetime <= std::chrono::seconds(0))
    throw Error(Errc::InvalidArgument, "transferTokenSeconds must be positive");
  std::error_code ec;
  std::filesystem::create_directories(c.data_dir, ec);
  auto probe = c.data_dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (ec || !out) throw Error(Errc::InvalidArgument, "dataDir is not writable: " + c.data_dir.string());
  }
  std::filesystem::remove(probe, ec);
}

facade::FacadeConfig facade_config(const ConnectorConfig& c) {
  facade::FacadeConfig f{.store_url = c.store_url,
                         .credentials = c.client_credentials,
                         .cache_ttl = c.cache_ttl,
                         .page_size = c.page_size};
  return facade::facade_config_from_env(f);
}

}  // namespace fedspace::service
