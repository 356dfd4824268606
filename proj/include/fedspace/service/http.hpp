#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "fedspace/common/error.hpp"
#include "fedspace/facade/store_client.hpp"
#include "fedspace/negotiation/negotiator.hpp"
#include "fedspace/store/catalog_source.hpp"
#include "fedspace/transfer/transfer.hpp"

namespace fedspace::service {

using nlohmann::json;

/// HTTP status for an error code.
int http_status(Errc code) noexcept;
/// `{"error": <code>, "detail": <text>}`.
json error_body(const Error& e);

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;

  [[nodiscard]] bool ok() const noexcept { return status >= 200 && status < 300; }
  /// Throws the error a failed response carries, or `fallback` when the body has none.
  void raise(Errc fallback) const;
  [[nodiscard]] json json_body() const;
};

/// Blocking HTTP client on one base URL (`http://host:port`). Transport
/// failures throw `unreachable`.
class HttpClient {
 public:
  using Headers = std::multimap<std::string, std::string>;

  HttpClient(std::string base_url, Errc unreachable, std::chrono::milliseconds timeout = std::chrono::seconds(10));
  ~HttpClient();
  HttpClient(const HttpClient&) = delete;
  HttpClient& operator=(const HttpClient&) = delete;

  HttpResponse get(const std::string& path, const Headers& headers = {});
  HttpResponse post(const std::string& path, const std::string& body,
                    const std::string& content_type = "application/json", const Headers& headers = {});
  HttpResponse del(const std::string& path, const Headers& headers = {});

  [[nodiscard]] const std::string& base_url() const noexcept { return base_url_; }

 private:
  struct Impl;
  std::string base_url_;
  Errc unreachable_;
  std::unique_ptr<Impl> impl_;
};

json operational_to_json(const facade::OperationalMetadata& m);
facade::OperationalMetadata operational_from_json(const json& j);

/// Another instance's store, reached through its token-gated store routes.
/// Serves both as the facade's query client and as a federation source.
class HttpStore final : public facade::StoreQueryClient, public store::CatalogSource {
 public:
  HttpStore(std::string base_url, facade::Credentials credentials);

  facade::SessionToken authenticate(const facade::Credentials& credentials) override;
  Page<store::EntityRecord> list_domains(const std::string& token, PageRequest page) override;
  std::optional<store::EntityRecord> get_domain(const std::string& token, const store::Urn& urn) override;
  Page<store::DatasetEntry> list_datasets_in_domain(const std::string& token, const store::Urn& domain,
                                                    PageRequest page) override;
  facade::OperationalMetadata operational_metadata(const std::string& token, const store::Urn& urn) override;
  std::vector<store::ChangeEvent> changes_since(const std::string& token, std::uint64_t cursor) override;
  [[nodiscard]] std::uint64_t query_count() const override { return queries_.load(); }

  Page<store::EntityRecord> list_domains(PageRequest page) override;
  Page<store::DatasetEntry> list_datasets_in_domain(const store::Urn& domain, PageRequest page) override;
  store::DatasetDetail get_dataset_detail(const store::Urn& urn) override;

 private:
  HttpResponse query(const std::string& token, const std::string& path);
  std::string own_session();

  HttpClient http_;
  facade::Credentials credentials_;
  std::mutex session_mutex_;
  std::optional<facade::SessionToken> session_;
  std::atomic<std::uint64_t> queries_{0};
};

struct TransferResult {
  transfer::TransferProcess process;
  std::string bytes;
};

/// Consumer-side view of a provider's public routes.
class ProviderClient {
 public:
  explicit ProviderClient(std::string provider_url);

  json catalog();
  /// Throws TargetNotFound.
  json dataset(const store::Urn& urn);
  /// Looks the offer up among the policies the catalog publishes.
  std::optional<odrl::Policy> find_offer(const std::string& offer_uid);
  /// Throws UnknownAgreement.
  odrl::Policy agreement(const std::string& agreement_uid);

  transfer::TransferProcess request_transfer(const std::string& agreement_uid, const std::string& format,
                                             const std::string& callback_address);
  transfer::TransferProcess command(const std::string& transfer_id, transfer::Command command,
                                    std::optional<std::string> reason = std::nullopt);
  std::string fetch_data(const store::Urn& urn, const std::string& access_token);

  /// Request, start, fetch and complete. Stops early (with empty bytes) when
  /// the provider terminates the transfer. `format` defaults to the dataset's.
  TransferResult run_transfer(const std::string& agreement_uid, std::optional<std::string> format,
                              const std::string& callback_address);

  HttpClient& http() noexcept { return http_; }

 private:
  HttpClient http_;
};

/// Negotiation messages over HTTP to a provider's negotiation routes.
class HttpProviderChannel final : public negotiation::ProviderChannel {
 public:
  explicit HttpProviderChannel(std::string provider_url);
  negotiation::ProviderReply send(const negotiation::Message& message) override;

 private:
  HttpClient http_;
};

}  // namespace fedspace::service
