#include "fedspace/service/http.hpp"

#include <httplib.h>

#include "fedspace/common/log.hpp"
#include "fedspace/common/util.hpp"
#include "fedspace/store/codec.hpp"

namespace fedspace::service {

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::MalformedUrn:
    case Errc::MissingParentDomain:
    case Errc::EmptyQuery:
    case Errc::SelfLoop:
    case Errc::ParseError:
    case Errc::SchemaError:
    case Errc::InvalidRuleSet:
    case Errc::FormatMismatch: return 400;
    case Errc::BadCredentials:
    case Errc::TokenExpired:
    case Errc::InvalidToken:
    case Errc::ExpiredToken: return 401;
    case Errc::TransferNotStarted:
    case Errc::WrongTarget: return 403;
    case Errc::UnknownUrn:
    case Errc::DeletedEntity:
    case Errc::TargetNotFound:
    case Errc::UnknownPolicy:
    case Errc::UnknownProcess:
    case Errc::UnknownAgreement: return 404;
    case Errc::AlreadyDeleted:
    case Errc::DuplicateEdge:
    case Errc::NotAnOffer:
    case Errc::OfferInvalidated:
    case Errc::PolicyInvalidated:
    case Errc::IllegalTransition:
    case Errc::AgreementMismatch:
    case Errc::AgreementInvalidated:
    case Errc::NegotiationNotFinalized: return 409;
    case Errc::ProviderUnreachable: return 502;
    case Errc::SourceUnreachable: return 503;
    case Errc::InvariantViolation:
    case Errc::Io: return 500;
  }
  return 500;
}

json error_body(const Error& e) { return json{{"error", to_string(e.code())}, {"detail", e.detail()}}; }

void HttpResponse::raise(Errc fallback) const {
  auto doc = json::parse(body, nullptr, false);
  if (doc.is_object() && doc.contains("error") && doc["error"].is_string()) {
    if (auto code = parse_errc(doc["error"].get<std::string>()))
      throw Error(*code, doc.value("detail", std::string()));
  }
  throw Error(fallback, "HTTP " + std::to_string(status) + (body.empty() ? "" : ": " + body.substr(0, 200)));
}

json HttpResponse::json_body() const {
  auto doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::ParseError, "response is not JSON");
  return doc;
}

struct HttpClient::Impl {
  explicit Impl(const std::string& base) : client(base) {}
  httplib::Client client;
  std::mutex mutex;
};

HttpClient::HttpClient(std::string base_url, Errc unreachable, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), unreachable_(unreachable) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (!is_absolute_url(base_url_)) throw Error(Errc::InvalidArgument, "not an http(s) URL: " + base_url_);
  impl_ = std::make_unique<Impl>(base_url_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  impl_->client.set_connection_timeout(secs.count(), usecs.count());
  impl_->client.set_read_timeout(secs.count(), usecs.count());
  impl_->client.set_write_timeout(secs.count(), usecs.count());
  impl_->client.set_url_encode(false);
}

HttpClient::~HttpClient() = default;

namespace {

httplib::Headers to_headers(const HttpClient::Headers& h) { return httplib::Headers(h.begin(), h.end()); }

}  // namespace

template <typename Call>
static HttpResponse finish(Call&& call, const std::string& what, Errc unreachable) {
  auto res = call();
  if (!res) throw Error(unreachable, what + ": " + httplib::to_string(res.error()));
  return HttpResponse{res->status, res->body, res->get_header_value("Content-Type")};
}

HttpResponse HttpClient::get(const std::string& path, const Headers& headers) {
  std::lock_guard lock(impl_->mutex);
  return finish([&] { return impl_->client.Get(path, to_headers(headers)); }, "GET " + base_url_ + path, unreachable_);
}

HttpResponse HttpClient::post(const std::string& path, const std::string& body, const std::string& content_type,
                              const Headers& headers) {
  std::lock_guard lock(impl_->mutex);
  return finish([&] { return impl_->client.Post(path, to_headers(headers), body, content_type); },
                "POST " + base_url_ + path, unreachable_);
}

HttpResponse HttpClient::del(const std::string& path, const Headers& headers) {
  std::lock_guard lock(impl_->mutex);
  return finish([&] { return impl_->client.Delete(path, to_headers(headers)); }, "DELETE " + base_url_ + path,
                unreachable_);
}

json operational_to_json(const facade::OperationalMetadata& m) {
  return json{{"urn", m.urn.str()},
              {"title", m.title},
              {"domainUrn", m.domain_urn.str()},
              {"distributionType", store::to_string(m.distribution_type)},
              {"accessEndpoint", m.access_endpoint},
              {"authScheme", store::to_string(m.auth_scheme)},
              {"formatHint", m.format_hint}};
}

facade::OperationalMetadata operational_from_json(const json& j) {
  try {
    auto dist = store::parse_distribution_type(j.at("distributionType").get<std::string>());
    auto auth = store::parse_auth_scheme(j.at("authScheme").get<std::string>());
    if (!dist || !auth) throw Error(Errc::SchemaError, "operational metadata: bad enum value");
    return facade::OperationalMetadata{.urn = store::Urn::parse(j.at("urn").get<std::string>()),
                                       .title = j.at("title").get<std::string>(),
                                       .domain_urn = store::Urn::parse(j.at("domainUrn").get<std::string>()),
                                       .distribution_type = *dist,
                                       .access_endpoint = j.at("accessEndpoint").get<std::string>(),
                                       .auth_scheme = *auth,
                                       .format_hint = j.at("formatHint").get<std::string>()};
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("operational metadata: ") + e.what());
  }
}

namespace {

std::string page_query(PageRequest p) {
  return "offset=" + std::to_string(p.offset) + "&limit=" + std::to_string(p.limit);
}

template <typename T, typename Decode>
Page<T> page_from_json(const json& j, Decode decode) {
  Page<T> page;
  for (const auto& item : j.at("items")) page.items.push_back(decode(item));
  page.total = j.at("total").get<std::size_t>();
  return page;
}

}  // namespace

HttpStore::HttpStore(std::string base_url, facade::Credentials credentials)
    : http_(std::move(base_url), Errc::SourceUnreachable), credentials_(std::move(credentials)) {}

facade::SessionToken HttpStore::authenticate(const facade::Credentials& credentials) {
  json body{{"clientId", credentials.client_id}, {"clientSecret", credentials.client_secret}};
  auto res = http_.post("/store/auth", body.dump());
  if (res.status == 401) throw Error(Errc::BadCredentials, credentials.client_id);
  if (!res.ok()) res.raise(Errc::SourceUnreachable);
  auto doc = res.json_body();
  auto expires = parse_timestamp(doc.value("expiresAt", ""));
  if (!expires) throw Error(Errc::SourceUnreachable, "store returned a malformed session");
  return facade::SessionToken{doc.value("token", ""), *expires};
}

HttpResponse HttpStore::query(const std::string& token, const std::string& path) {
  ++queries_;
  auto res = http_.get(path, {{"Authorization", "Bearer " + token}});
  if (res.status == 401) throw Error(Errc::TokenExpired, "store session");
  return res;
}

Page<store::EntityRecord> HttpStore::list_domains(const std::string& token, PageRequest page) {
  auto res = query(token, "/store/domains?" + page_query(page));
  if (!res.ok()) res.raise(Errc::SourceUnreachable);
  return page_from_json<store::EntityRecord>(res.json_body(), store::record_from_json);
}

std::optional<store::EntityRecord> HttpStore::get_domain(const std::string& token, const store::Urn& urn) {
  auto res = query(token, "/store/domains/" + percent_encode(urn.str()));
  if (res.status == 404) return std::nullopt;
  if (!res.ok()) res.raise(Errc::SourceUnreachable);
  return store::record_from_json(res.json_body());
}

Page<store::DatasetEntry> HttpStore::list_datasets_in_domain(const std::string& token, const store::Urn& domain,
                                                             PageRequest page) {
  auto res = query(token, "/store/domains/" + percent_encode(domain.str()) + "/datasets?" + page_query(page));
  if (!res.ok()) res.raise(Errc::SourceUnreachable);
  return page_from_json<store::DatasetEntry>(res.json_body(), store::entry_from_json);
}

facade::OperationalMetadata HttpStore::operational_metadata(const std::string& token, const store::Urn& urn) {
  auto res = query(token, "/store/datasets/" + percent_encode(urn.str()) + "/operational");
  if (res.status == 404) throw Error(Errc::TargetNotFound, urn.str());
  if (!res.ok()) res.raise(Errc::SourceUnreachable);
  return operational_from_json(res.json_body());
}

std::vector<store::ChangeEvent> HttpStore::changes_since(const std::string& token, std::uint64_t cursor) {
  auto res = query(token, "/store/changes?since=" + std::to_string(cursor));
  if (!res.ok()) res.raise(Errc::SourceUnreachable);
  std::vector<store::ChangeEvent> out;
  for (const auto& e : res.json_body()) out.push_back(store::event_from_json(e));
  return out;
}

std::string HttpStore::own_session() {
  std::lock_guard lock(session_mutex_);
  if (!session_ || session_->expires_at <= SystemClock().now() + std::chrono::seconds(5))
    session_ = authenticate(credentials_);
  return session_->token;
}

Page<store::EntityRecord> HttpStore::list_domains(PageRequest page) { return list_domains(own_session(), page); }

Page<store::DatasetEntry> HttpStore::list_datasets_in_domain(const store::Urn& domain, PageRequest page) {
  return list_datasets_in_domain(own_session(), domain, page);
}

store::DatasetDetail HttpStore::get_dataset_detail(const store::Urn& urn) {
  auto res = query(own_session(), "/store/datasets/" + percent_encode(urn.str()));
  if (!res.ok()) res.raise(Errc::SourceUnreachable);
  return store::detail_from_json(res.json_body());
}

ProviderClient::ProviderClient(std::string provider_url) : http_(std::move(provider_url), Errc::ProviderUnreachable) {}

json ProviderClient::catalog() {
  auto res = http_.get("/catalog");
  if (!res.ok()) res.raise(Errc::ProviderUnreachable);
  return res.json_body();
}

json ProviderClient::dataset(const store::Urn& urn) {
  auto res = http_.get("/catalog/datasets/" + percent_encode(urn.str()));
  if (res.status == 404) throw Error(Errc::TargetNotFound, urn.str());
  if (!res.ok()) res.raise(Errc::ProviderUnreachable);
  return res.json_body();
}

std::optional<odrl::Policy> ProviderClient::find_offer(const std::string& offer_uid) {
  auto root = catalog();
  for (const auto& cat : root.value("dcat:catalog", json::array())) {
    for (const auto& ds : cat.value("dcat:dataset", json::array())) {
      auto id = store::Urn::try_parse(ds.value("dct:identifier", ""));
      if (!id) continue;
      json doc;
      try {
        doc = dataset(*id);
      } catch (const Error& e) {
        if (e.code() == Errc::TargetNotFound) continue;
        throw;
      }
      for (const auto& p : doc.value("odrl:hasPolicy", json::array()))
        if (p.value("uid", "") == offer_uid) return odrl::policy_from_json(p);
    }
  }
  return std::nullopt;
}

odrl::Policy ProviderClient::agreement(const std::string& agreement_uid) {
  auto res = http_.get("/agreements/" + percent_encode(agreement_uid));
  if (res.status == 404) throw Error(Errc::UnknownAgreement, agreement_uid);
  if (!res.ok()) res.raise(Errc::ProviderUnreachable);
  return odrl::policy_from_json(res.json_body());
}

namespace {

transfer::TransferProcess transfer_doc(const HttpResponse& res) {
  if (!res.ok()) res.raise(Errc::ProviderUnreachable);
  return transfer::process_from_json(res.json_body());
}

}  // namespace

transfer::TransferProcess ProviderClient::request_transfer(const std::string& agreement_uid, const std::string& format,
                                                           const std::string& callback_address) {
  transfer::Message m{.type = transfer::MessageType::Request,
                      .agreement_id = agreement_uid,
                      .format = format,
                      .callback_address = callback_address};
  return transfer_doc(http_.post("/transfers/request", transfer::message_to_json(m).dump()));
}

transfer::TransferProcess ProviderClient::command(const std::string& transfer_id, transfer::Command command,
                                                  std::optional<std::string> reason) {
  json body = json::object();
  if (reason) body["reason"] = *reason;
  return transfer_doc(http_.post("/transfers/" + percent_encode(transfer_id) + "/" +
                                     std::string(transfer::to_string(command)),
                                 body.dump()));
}

std::string ProviderClient::fetch_data(const store::Urn& urn, const std::string& access_token) {
  auto res = http_.get("/data/" + percent_encode(urn.str()), {{"Authorization", "Bearer " + access_token}});
  if (!res.ok()) res.raise(Errc::ProviderUnreachable);
  return res.body;
}

TransferResult ProviderClient::run_transfer(const std::string& agreement_uid, std::optional<std::string> format,
                                            const std::string& callback_address) {
  auto terms = agreement(agreement_uid);
  if (!format) {
    auto doc = dataset(terms.target);
    auto dists = doc.value("dcat:distribution", json::array());
    if (dists.empty()) throw Error(Errc::FormatMismatch, "dataset publishes no distribution");
    format = dists.front().value("dct:format", "");
  }
  auto p = request_transfer(agreement_uid, *format, callback_address);
  if (p.state != transfer::State::Requested) return TransferResult{std::move(p), {}};
  p = command(p.transfer_id, transfer::Command::Start);
  if (p.state != transfer::State::Started || !p.data_address) return TransferResult{std::move(p), {}};
  auto bytes = fetch_data(p.target, p.data_address->access_token);
  p = command(p.transfer_id, transfer::Command::Complete);
  log::info("transfer.fetched", {{"transfer", p.transfer_id}, {"bytes", std::to_string(bytes.size())}});
  return TransferResult{std::move(p), std::move(bytes)};
}

HttpProviderChannel::HttpProviderChannel(std::string provider_url)
    : http_(std::move(provider_url), Errc::ProviderUnreachable) {}

negotiation::ProviderReply HttpProviderChannel::send(const negotiation::Message& message) {
  using negotiation::MessageType;
  std::string path;
  const std::string id = message.process_id ? percent_encode(*message.process_id) : "";
  switch (message.type) {
    case MessageType::ContractRequest: path = "/negotiations/request"; break;
    case MessageType::ContractNegotiationEvent: path = "/negotiations/" + id + "/events"; break;
    case MessageType::ContractAgreementVerification: path = "/negotiations/" + id + "/agreement/verification"; break;
    case MessageType::ContractNegotiationTermination: path = "/negotiations/" + id + "/termination"; break;
    default: throw Error(Errc::InvalidArgument, "a consumer does not send " + std::string(to_string(message.type)));
  }
  auto res = http_.post(path, negotiation::message_to_json(message).dump());
  if (!res.ok() && res.status != 409) res.raise(Errc::ProviderUnreachable);
  auto doc = res.json_body();
  if (!doc.contains("processId")) res.raise(Errc::ProviderUnreachable);
  negotiation::ProviderReply out{negotiation::process_from_json(doc), std::nullopt};
  if (auto it = doc.find("reply"); it != doc.end() && !it->is_null()) out.reply = negotiation::message_from_json(*it);
  return out;
}

}  // namespace fedspace::service
