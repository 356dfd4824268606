#include "fedspace/service/connector.hpp"

#include <httplib.h>

#include <condition_variable>
#include <thread>

#include "fedspace/common/error.hpp"
#include "fedspace/common/log.hpp"
#include "fedspace/common/util.hpp"
#include "fedspace/service/http.hpp"
#include "fedspace/store/codec.hpp"

namespace fedspace::service {

using nlohmann::json;
using httplib::Request;
using httplib::Response;

struct Connector::Http {
  httplib::Server server;
  int port = -1;
  std::thread serve_thread;

  std::mutex pump_mutex;
  std::condition_variable pump_cv;
  bool stopping = false;
  std::thread pump_thread;
};

namespace {

void send_json(Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, const Error& e, std::optional<int> status = std::nullopt) {
  send_json(res, error_body(e), status.value_or(http_status(e.code())));
}

/// Runs a handler and turns thrown errors into status codes.
template <typename F>
void guarded(const Request& req, Response& res, F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, e);
  } catch (const json::exception& e) {
    send_error(res, Error(Errc::SchemaError, e.what()));
  } catch (const std::exception& e) {
    log::error("http.internal", {{"path", req.path}, {"what", e.what()}});
    send_json(res, json{{"error", "Internal"}, {"detail", e.what()}}, 500);
  }
}

json parse_body(const Request& req) {
  auto doc = json::parse(req.body, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::ParseError, "request body is not JSON");
  return doc;
}

json parse_body_or_empty(const Request& req) {
  if (trim(req.body).empty()) return json::object();
  return parse_body(req);
}

PageRequest page_of(const Request& req, std::size_t default_limit) {
  PageRequest p{0, default_limit};
  try {
    if (req.has_param("offset")) p.offset = std::stoull(req.get_param_value("offset"));
    if (req.has_param("limit")) p.limit = std::stoull(req.get_param_value("limit"));
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "offset and limit must be non-negative integers");
  }
  require_valid_page(p);
  return p;
}

template <typename T, typename Encode>
json page_json(const Page<T>& page, Encode encode) {
  json items = json::array();
  for (const auto& item : page.items) items.push_back(encode(item));
  return json{{"items", std::move(items)}, {"total", page.total}};
}

std::string bearer(const Request& req) {
  auto h = req.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (h.size() <= prefix.size() || h.compare(0, prefix.size(), prefix) != 0) return {};
  return h.substr(prefix.size());
}

json with_reply(json doc, const std::optional<negotiation::Message>& reply) {
  doc["reply"] = reply ? negotiation::message_to_json(*reply) : json(nullptr);
  return doc;
}

json with_reply(const transfer::TransferProcess& p) {
  auto doc = transfer::process_to_json(p);
  auto m = transfer::announce(p);
  doc["reply"] = m ? transfer::message_to_json(*m) : json(nullptr);
  return doc;
}

std::string file_safe(const std::string& id) {
  std::string out;
  for (char c : id) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_');
  return out;
}

}  // namespace

Connector::Connector(ConnectorConfig config, std::shared_ptr<const Clock> clock)
    : config_(std::move(config)), clock_(std::move(clock)), http_(std::make_unique<Http>()) {
  validate(config_);
  const auto& dir = config_.data_dir;
  auto catalog_id = config_.catalog_id.empty() ? config_.participant_id : config_.catalog_id;
  store_ = store::EntityStore::open(dir / "store", catalog_id, clock_);

  // The facade of a self-contained instance reads its own store with a credential nobody else holds.
  auto allowed = config_.store_credentials;
  facade::Credentials internal{"internal-" + random_hex(4), random_hex(16)};
  allowed.push_back(internal);
  local_client_ = std::make_shared<facade::LocalStoreClient>(*store_, allowed, config_.session_lifetime, clock_);

  auto fcfg = facade_config(config_);
  std::shared_ptr<facade::StoreQueryClient> client;
  if (fcfg.store_url.empty() || fcfg.store_url == "local") {
    fcfg.credentials = internal;
    client = local_client_;
  } else {
    client = std::make_shared<HttpStore>(fcfg.store_url, fcfg.credentials);
  }
  facade_ = std::make_unique<facade::Facade>(client, fcfg, clock_);
  policies_ = odrl::PolicyStore::open(dir / "policies", clock_);
  facade_->set_invalidator([this](const store::Urn& urn) { return policies_->invalidate_by_target(urn); });

  if (is_provider()) {
    provider_ = std::make_unique<negotiation::ProviderNegotiator>(config_.participant_id, *policies_, *facade_, clock_,
                                                                  dir / "negotiations");
    transfer::EndSystem ends;
    for (const auto& f : config_.end_systems) ends.merge(transfer::EndSystem::load(f));
    auto resolve = [this](const store::Urn& urn) {
      return facade_->with_session([&](const facade::SessionToken& s) { return facade_->resolve_dataset(s, urn, true); });
    };
    auto finalized = [this](const std::string& agreement_uid) {
      auto p = provider_->by_agreement(agreement_uid);
      return p && p->state == negotiation::State::Finalized;
    };
    transfers_ = std::make_unique<transfer::TransferManager>(
        *policies_, resolve, finalized, std::move(ends), clock_,
        transfer::TransferConfig{config_.transfer_token_lifetime}, dir / "transfers");
  }
  if (is_consumer())
    consumer_ = std::make_unique<negotiation::ConsumerNegotiator>(config_.participant_id, clock_,
                                                                  dir / "consumer-negotiations");
  routes();
}

Connector::~Connector() { stop(); }

int Connector::bind() {
  if (http_->port >= 0) return http_->port;
  int port = config_.port == 0 ? http_->server.bind_to_any_port(config_.host)
                               : (http_->server.bind_to_port(config_.host, config_.port) ? config_.port : -1);
  if (port < 0) throw Error(Errc::Io, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
  http_->port = port;
  write_file_atomic(config_.data_dir / "endpoint.json", json{{"url", url()}}.dump());
  log::info("service.listening", {{"url", url()}, {"role", std::string(to_string(config_.role))},
                                  {"participant", config_.participant_id}});
  return port;
}

std::string Connector::url() const { return "http://" + config_.host + ":" + std::to_string(http_->port); }

void Connector::serve() {
  bind();
  {
    std::lock_guard lock(http_->pump_mutex);
    http_->stopping = false;
  }
  if (!http_->pump_thread.joinable()) http_->pump_thread = std::thread([this] { pump(); });
  http_->server.listen_after_bind();
}

void Connector::start() {
  bind();
  http_->serve_thread = std::thread([this] { serve(); });
  http_->server.wait_until_ready();
}

void Connector::stop() {
  {
    std::lock_guard lock(http_->pump_mutex);
    http_->stopping = true;
  }
  http_->pump_cv.notify_all();
  http_->server.stop();
  if (http_->serve_thread.joinable()) http_->serve_thread.join();
  if (http_->pump_thread.joinable()) http_->pump_thread.join();
}

void Connector::pump() {
  std::unique_lock lock(http_->pump_mutex);
  while (!http_->stopping) {
    lock.unlock();
    try {
      facade_->drain_changes();
    } catch (const Error& e) {
      log::warn("facade.drain_failed", {{"error", std::string(to_string(e.code()))}, {"detail", e.detail()}});
    }
    lock.lock();
    http_->pump_cv.wait_for(lock, config_.sync_interval, [this] { return http_->stopping; });
  }
}

void Connector::routes() {
  auto& svr = http_->server;
  svr.set_payload_max_length(64 * 1024 * 1024);

  svr.Get("/healthz", [](const Request&, Response& res) { send_json(res, json{{"status", "ok"}}); });

  auto admin = [this](const Request& req, Response& res) {
    auto token = req.get_header_value("X-Admin-Token");
    if (config_.admin_token.empty() || token != config_.admin_token) {
      send_json(res, json{{"error", "Unauthorized"}, {"detail", "missing or wrong X-Admin-Token"}}, 401);
      return false;
    }
    return true;
  };

  // Store routes: the query surface other instances federate from or map through.
  svr.Post("/store/auth", [this](const Request& req, Response& res) {
    guarded(req, res, [&] {
      auto body = parse_body(req);
      facade::Credentials c{body.value("clientId", ""), body.value("clientSecret", "")};
      auto t = local_client_->authenticate(c);
      send_json(res, json{{"token", t.token}, {"expiresAt", format_timestamp(t.expires_at)}});
    });
  });
  auto store_gate = [this](const Request& req) { local_client_->validate(bearer(req)); };
  svr.Get("/store/domains", [this, store_gate](const Request& req, Response& res) {
    guarded(req, res, [&] {
      store_gate(req);
      auto page = store_->list_domains(page_of(req, config_.page_size));
      send_json(res, page_json(page, [](const store::EntityRecord& r) { return store::to_json(r); }));
    });
  });
  svr.Get(R"(/store/domains/(.+)/datasets)", [this, store_gate](const Request& req, Response& res) {
    guarded(req, res, [&] {
      store_gate(req);
      auto page = store_->list_datasets_in_domain(store::Urn::parse(req.matches[1].str()),
                                                  page_of(req, config_.page_size));
      send_json(res, page_json(page, [](const store::DatasetEntry& e) { return store::to_json(e); }));
    });
  });
  svr.Get(R"(/store/domains/(.+))", [this, store_gate](const Request& req, Response& res) {
    guarded(req, res, [&] {
      store_gate(req);
      auto r = store_->get_entity(store::Urn::parse(req.matches[1].str()));
      if (!r || r->kind != store::EntityKind::Domain) throw Error(Errc::UnknownUrn, req.matches[1].str());
      send_json(res, store::to_json(*r));
    });
  });
  svr.Get(R"(/store/datasets/(.+)/operational)", [this](const Request& req, Response& res) {
    guarded(req, res, [&] {
      auto meta = local_client_->operational_metadata(bearer(req), store::Urn::parse(req.matches[1].str()));
      send_json(res, operational_to_json(meta));
    });
  });
  svr.Get(R"(/store/datasets/(.+))", [this, store_gate](const Request& req, Response& res) {
    guarded(req, res, [&] {
      store_gate(req);
      send_json(res, store::to_json(store_->get_dataset_detail(store::Urn::parse(req.matches[1].str()))));
    });
  });
  svr.Get("/store/changes", [this, store_gate](const Request& req, Response& res) {
    guarded(req, res, [&] {
      store_gate(req);
      std::uint64_t since = 0;
      if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
      json out = json::array();
      for (const auto& ev : store_->changes_since(since)) out.push_back(store::to_json(ev));
      send_json(res, out);
    });
  });

  // Admin routes.
  svr.Post("/admin/ingest", [this, admin](const Request& req, Response& res) {
    if (!admin(req, res)) return;
    guarded(req, res, [&] {
      auto report = store_->ingest(store::parse_ingest_document(req.body));
      log::info("admin.ingest", {{"created", std::to_string(report.created)}, {"updated", std::to_string(report.updated)}});
      send_json(res, json{{"created", report.created}, {"updated", report.updated}});
    });
  });
  svr.Post("/admin/federate", [this, admin](const Request& req, Response& res) {
    if (!admin(req, res)) return;
    guarded(req, res, [&] {
      std::string source = trim(req.body);
      if (!source.empty() && source.front() == '{') source = parse_body(req).value("source", "");
      HttpStore remote(source, config_.client_credentials);
      auto report = store_->federate_pull(remote);
      log::info("admin.federate", {{"source", source}, {"created", std::to_string(report.created)},
                                   {"updated", std::to_string(report.updated)}});
      send_json(res, store::to_json(report));
    });
  });
  svr.Post("/admin/sync", [this, admin](const Request& req, Response& res) {
    if (!admin(req, res)) return;
    guarded(req, res, [&] {
      auto applied = facade_->drain_changes();
      send_json(res, json{{"applied", applied}, {"lastSeqNo", facade_->last_seq_no()}});
    });
  });
  svr.Delete(R"(/admin/entities/(.+))", [this, admin](const Request& req, Response& res) {
    if (!admin(req, res)) return;
    guarded(req, res, [&] {
      auto urn = store::Urn::parse(req.matches[1].str());
      store_->delete_entity(urn);
      send_json(res, json{{"deleted", urn.str()}, {"seqNo", store_->last_seq_no()}});
    });
  });
  svr.Post("/admin/lineage", [this, admin](const Request& req, Response& res) {
    if (!admin(req, res)) return;
    guarded(req, res, [&] {
      auto body = parse_body(req);
      auto up = store::Urn::parse(body.at("upstream").get<std::string>());
      auto down = store::Urn::parse(body.at("downstream").get<std::string>());
      store_->add_lineage_edge(up, down);
      send_json(res, json{{"upstream", up.str()}, {"downstream", down.str()}}, 201);
    });
  });
  svr.Get("/admin/search", [this, admin](const Request& req, Response& res) {
    if (!admin(req, res)) return;
    guarded(req, res, [&] {
      auto page = store_->search_datasets(req.get_param_value("q"), page_of(req, config_.page_size));
      send_json(res, page_json(page, [](const store::EntityRecord& r) { return store::to_json(r); }));
    });
  });
  svr.Post("/admin/policies", [this, admin](const Request& req, Response& res) {
    if (!admin(req, res)) return;
    guarded(req, res, [&] {
      auto body = parse_body(req);
      auto kind = odrl::PolicyKind::Offer;
      if (body.contains("@type")) {
        auto k = odrl::parse_policy_kind(body.at("@type").get<std::string>());
        if (!k || *k == odrl::PolicyKind::Agreement)
          throw Error(Errc::InvalidArgument, "@type must be Offer or Set; agreements come from negotiation");
        kind = *k;
      }
      auto target = store::Urn::parse(body.at("target").get<std::string>());
      auto assigner = body.value("assigner", config_.participant_id);
      std::optional<std::string> assignee;
      if (body.contains("assignee") && body.at("assignee").is_string()) assignee = body.at("assignee").get<std::string>();
      auto p = policies_->create_policy(kind, target, assigner, odrl::rules_from_json(body), *facade_, assignee);
      send_json(res, odrl::policy_record_to_json(p), 201);
    });
  });
  svr.Get("/admin/policies", [this, admin](const Request& req, Response& res) {
    if (!admin(req, res)) return;
    guarded(req, res, [&] {
      auto list = req.has_param("target")
                      ? policies_->list_policies_by_target(store::Urn::parse(req.get_param_value("target")))
                      : policies_->all();
      json out = json::array();
      for (const auto& p : list) out.push_back(odrl::policy_record_to_json(p));
      send_json(res, out);
    });
  });

  if (is_provider()) {
    svr.Get("/catalog", [this](const Request& req, Response& res) {
      guarded(req, res, [&] {
        dcat::RootCatalog root{.id = config_.catalog_id.empty() ? config_.participant_id : config_.catalog_id,
                               .title = config_.catalog_title};
        try {
          facade_->with_session([&](const facade::SessionToken& s) {
            root.catalogs.clear();
            for (const auto& summary : facade_->list_catalogs(s)) {
              if (req.has_param("domain") && summary.domain.str() != req.get_param_value("domain")) continue;
              root.catalogs.push_back(facade_->to_dcat(s, summary.domain));
            }
            return 0;
          });
        } catch (const Error& e) {
          if (e.code() == Errc::BadCredentials || e.code() == Errc::SourceUnreachable ||
              e.code() == Errc::TokenExpired) {
            send_error(res, e, 503);
            return;
          }
          throw;
        }
        res.status = 200;
        res.set_content(dcat::serialize_root(root), "application/json");
      });
    });
    svr.Get(R"(/catalog/datasets/(.+))", [this](const Request& req, Response& res) {
      guarded(req, res, [&] {
        auto urn = store::Urn::try_parse(req.matches[1].str());
        if (!urn || !urn->is_dataset()) throw Error(Errc::TargetNotFound, req.matches[1].str());
        std::optional<dcat::Dataset> found;
        try {
          facade_->with_session([&](const facade::SessionToken& s) {
            auto meta = facade_->resolve_dataset(s, *urn);
            auto catalog = facade_->to_dcat(s, meta.domain_urn);
            for (const auto& d : catalog.datasets)
              if (d.id == *urn) found = d;
            return 0;
          });
        } catch (const Error& e) {
          if (e.code() == Errc::UnknownUrn) throw Error(Errc::TargetNotFound, urn->str());
          if (e.code() == Errc::BadCredentials || e.code() == Errc::SourceUnreachable) {
            send_error(res, e, 503);
            return;
          }
          throw;
        }
        if (!found) throw Error(Errc::TargetNotFound, urn->str());
        auto doc = dcat::dataset_to_json(*found);
        doc["@context"] = dcat::kContext;
        json offers = json::array();
        for (const auto& p : policies_->list_policies_by_target(*urn))
          if (p.kind == odrl::PolicyKind::Offer && p.status == odrl::PolicyStatus::Active)
            offers.push_back(odrl::policy_to_json(p));
        doc["odrl:hasPolicy"] = std::move(offers);
        send_json(res, doc);
      });
    });
    svr.Get(R"(/agreements/([^/]+))", [this](const Request& req, Response& res) {
      guarded(req, res, [&] {
        auto p = policies_->get(req.matches[1].str());
        if (!p || p->kind != odrl::PolicyKind::Agreement) throw Error(Errc::UnknownAgreement, req.matches[1].str());
        auto doc = odrl::policy_to_json(*p);
        doc["status"] = odrl::to_string(p->status);
        send_json(res, doc);
      });
    });

    auto negotiation_route = [this](negotiation::MessageType expected, bool with_id) {
      return [this, expected, with_id](const Request& req, Response& res) {
        guarded(req, res, [&] {
          auto message = negotiation::message_from_json(parse_body(req));
          if (message.type != expected)
            throw Error(Errc::SchemaError, "this route takes " + std::string(to_string(expected)));
          if (with_id) {
            auto id = req.matches[1].str();
            if (message.process_id && *message.process_id != id)
              throw Error(Errc::SchemaError, "processId does not match the route");
            message.process_id = id;
          }
          auto out = provider_->handle(message);
          send_json(res, with_reply(negotiation::process_to_json(out.process), out.reply), out.illegal ? 409 : 200);
        });
      };
    };
    svr.Post("/negotiations/request", negotiation_route(negotiation::MessageType::ContractRequest, false));
    svr.Post(R"(/negotiations/([^/]+)/events)",
             negotiation_route(negotiation::MessageType::ContractNegotiationEvent, true));
    svr.Post(R"(/negotiations/([^/]+)/agreement/verification)",
             negotiation_route(negotiation::MessageType::ContractAgreementVerification, true));
    svr.Post(R"(/negotiations/([^/]+)/termination)",
             negotiation_route(negotiation::MessageType::ContractNegotiationTermination, true));
    svr.Get(R"(/negotiations/([^/]+))", [this](const Request& req, Response& res) {
      guarded(req, res, [&] {
        auto p = provider_->get(req.matches[1].str());
        if (!p) throw Error(Errc::UnknownProcess, req.matches[1].str());
        send_json(res, negotiation::process_to_json(*p));
      });
    });

    svr.Post("/transfers/request", [this](const Request& req, Response& res) {
      guarded(req, res, [&] {
        auto m = transfer::message_from_json(parse_body(req));
        if (m.type != transfer::MessageType::Request) throw Error(Errc::SchemaError, "expected TransferRequestMessage");
        auto p = transfers_->request_transfer(*m.agreement_id, *m.format, m.callback_address.value_or(""));
        send_json(res, with_reply(p));
      });
    });
    svr.Post(R"(/transfers/([^/]+)/(start|suspend|resume|complete|terminate))",
             [this](const Request& req, Response& res) {
               guarded(req, res, [&] {
                 auto id = req.matches[1].str();
                 auto command = *transfer::parse_command(req.matches[2].str());
                 auto body = parse_body_or_empty(req);
                 transfer::TransferProcess p = [&] {
                   switch (command) {
                     case transfer::Command::Start: return transfers_->start(id);
                     case transfer::Command::Suspend: return transfers_->suspend(id);
                     case transfer::Command::Resume: return transfers_->resume(id);
                     case transfer::Command::Complete: return transfers_->complete(id);
                     default: return transfers_->terminate(id, body.value("reason", "terminated by request"));
                   }
                 }();
                 send_json(res, with_reply(p));
               });
             });
    svr.Get(R"(/transfers/([^/]+))", [this](const Request& req, Response& res) {
      guarded(req, res, [&] {
        auto p = transfers_->get(req.matches[1].str());
        if (!p) throw Error(Errc::UnknownProcess, req.matches[1].str());
        send_json(res, transfer::process_to_json(*p));
      });
    });
    svr.Get(R"(/data/(.+))", [this](const Request& req, Response& res) {
      guarded(req, res, [&] {
        auto token = bearer(req);
        if (token.empty()) throw Error(Errc::InvalidToken, "missing bearer token");
        auto urn = store::Urn::parse(req.matches[1].str());
        auto bytes = transfers_->serve_data(token, urn);
        res.status = 200;
        res.set_content(std::move(bytes), "application/octet-stream");
      });
    });

    svr.Post("/admin/negotiations/offer", [this, admin](const Request& req, Response& res) {
      if (!admin(req, res)) return;
      guarded(req, res, [&] {
        auto body = parse_body(req);
        auto callback = body.at("callbackAddress").get<std::string>();
        auto out = provider_->initiate_offer(body.at("offerId").get<std::string>(),
                                             body.at("consumerPid").get<std::string>(), callback);
        HttpClient consumer(callback, Errc::ProviderUnreachable);
        auto delivered = consumer.post("/callback/negotiations/offers", negotiation::message_to_json(*out.reply).dump());
        if (!delivered.ok()) delivered.raise(Errc::ProviderUnreachable);
        send_json(res, with_reply(negotiation::process_to_json(out.process), out.reply), 201);
      });
    });
    svr.Get("/admin/negotiations", [this, admin](const Request& req, Response& res) {
      if (!admin(req, res)) return;
      guarded(req, res, [&] {
        json out = json::array();
        for (const auto& p : provider_->all()) out.push_back(negotiation::process_to_json(p));
        send_json(res, out);
      });
    });
    svr.Get("/admin/transfers", [this, admin](const Request& req, Response& res) {
      if (!admin(req, res)) return;
      guarded(req, res, [&] {
        json out = json::array();
        for (const auto& p : transfers_->all()) out.push_back(transfer::process_to_json(p));
        send_json(res, out);
      });
    });
  }

  if (is_consumer()) {
    svr.Post("/callback/negotiations/offers", [this](const Request& req, Response& res) {
      guarded(req, res, [&] {
        auto m = negotiation::message_from_json(parse_body(req));
        auto out = consumer_->handle(m);
        send_json(res, with_reply(negotiation::process_to_json(out.process), out.reply), out.illegal ? 409 : 200);
      });
    });
    svr.Post("/consumer/negotiations", [this](const Request& req, Response& res) {
      guarded(req, res, [&] {
        auto body = parse_body(req);
        auto provider = body.at("provider").get<std::string>();
        auto offer = body.at("offerId").get<std::string>();
        ProviderClient client(provider);
        auto terms = client.find_offer(offer);
        HttpProviderChannel channel(provider);
        auto p = consumer_->negotiate(channel, offer, terms, url());
        send_json(res, negotiation::process_to_json(p));
      });
    });
    svr.Post(R"(/consumer/negotiations/([^/]+)/accept)", [this](const Request& req, Response& res) {
      guarded(req, res, [&] {
        auto body = parse_body(req);
        HttpProviderChannel channel(body.at("provider").get<std::string>());
        send_json(res, negotiation::process_to_json(consumer_->accept(channel, req.matches[1].str())));
      });
    });
    svr.Get(R"(/consumer/negotiations/([^/]+))", [this](const Request& req, Response& res) {
      guarded(req, res, [&] {
        auto p = consumer_->get(req.matches[1].str());
        if (!p) throw Error(Errc::UnknownProcess, req.matches[1].str());
        send_json(res, negotiation::process_to_json(*p));
      });
    });
    svr.Post("/consumer/transfers", [this](const Request& req, Response& res) {
      guarded(req, res, [&] {
        auto body = parse_body(req);
        ProviderClient client(body.at("provider").get<std::string>());
        std::optional<std::string> format;
        if (body.contains("format") && body.at("format").is_string()) format = body.at("format").get<std::string>();
        auto result = client.run_transfer(body.at("agreementId").get<std::string>(), format, url());
        json out{{"transfer", transfer::process_to_json(result.process)}, {"file", nullptr}, {"size", 0}};
        if (result.process.state == transfer::State::Completed) {
          auto file = config_.data_dir / "received" / (file_safe(result.process.transfer_id) + ".bin");
          std::filesystem::create_directories(file.parent_path());
          write_file_atomic(file, result.bytes);
          out["file"] = file.string();
          out["size"] = result.bytes.size();
        }
        send_json(res, out);
      });
    });
  }
}

}  // namespace fedspace::service
