#include "fedspace/transfer/transfer.hpp"

#include "fedspace/common/error.hpp"
#include "fedspace/common/log.hpp"
#include "fedspace/common/util.hpp"

namespace fedspace::transfer {

std::string_view to_string(State s) noexcept {
  switch (s) {
    case State::Requested: return "REQUESTED";
    case State::Started: return "STARTED";
    case State::Suspended: return "SUSPENDED";
    case State::Completed: return "COMPLETED";
    case State::Terminated: return "TERMINATED";
  }
  return "TERMINATED";
}

std::string_view to_string(Command c) noexcept {
  switch (c) {
    case Command::Request: return "request";
    case Command::Start: return "start";
    case Command::Suspend: return "suspend";
    case Command::Resume: return "resume";
    case Command::Complete: return "complete";
    case Command::Terminate: return "terminate";
  }
  return "terminate";
}

std::optional<State> parse_state(std::string_view s) noexcept {
  for (auto st : kAllStates)
    if (to_string(st) == s) return st;
  return std::nullopt;
}

std::optional<Command> parse_command(std::string_view s) noexcept {
  for (auto c : kAllCommands)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

bool is_absorbing(State s) noexcept { return s == State::Completed || s == State::Terminated; }

std::optional<State> transition(std::optional<State> current, Command command) noexcept {
  if (!current) {
    if (command == Command::Request) return State::Requested;
    return std::nullopt;
  }
  const State s = *current;
  if (is_absorbing(s)) return std::nullopt;
  switch (command) {
    case Command::Request: break;
    case Command::Start:
      if (s == State::Requested) return State::Started;
      break;
    case Command::Suspend:
      if (s == State::Started) return State::Suspended;
      break;
    case Command::Resume:
      if (s == State::Suspended) return State::Started;
      break;
    case Command::Complete:
      if (s == State::Started) return State::Completed;
      break;
    case Command::Terminate: return State::Terminated;
  }
  return std::nullopt;
}

json data_address_to_json(const DataAddress& a) {
  return json{{"endpointUrl", a.endpoint_url},
              {"authScheme", store::to_string(a.auth_scheme)},
              {"accessToken", a.access_token},
              {"validUntil", format_timestamp(a.valid_until)}};
}

namespace {

std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(Errc::SchemaError, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

std::string req_string(const json& j, const char* key) {
  auto v = opt_string(j, key);
  if (!v) throw Error(Errc::SchemaError, std::string("missing '") + key + "'");
  return *v;
}

}  // namespace

DataAddress data_address_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "dataAddress must be an object");
  auto scheme = store::parse_auth_scheme(req_string(j, "authScheme"));
  auto until = parse_timestamp(req_string(j, "validUntil"));
  if (!scheme) throw Error(Errc::SchemaError, "unknown authScheme");
  if (!until) throw Error(Errc::SchemaError, "bad validUntil");
  return DataAddress{req_string(j, "endpointUrl"), *scheme, opt_string(j, "accessToken").value_or(""), *until};
}

json process_to_json(const TransferProcess& p) {
  json history = json::array();
  for (const auto& h : p.history)
    history.push_back(json{{"at", format_timestamp(h.at)}, {"message", to_string(h.command)}, {"state", to_string(h.state)}});
  return json{{"transferId", p.transfer_id},
              {"agreementId", p.agreement_uid},
              {"consumerPid", p.consumer_pid},
              {"target", p.target.str()},
              {"state", to_string(p.state)},
              {"format", p.requested_format},
              {"dataAddress", p.data_address ? data_address_to_json(*p.data_address) : json(nullptr)},
              {"callbackAddress", p.callback_address},
              {"history", std::move(history)},
              {"reason", p.reason ? json(*p.reason) : json(nullptr)}};
}

TransferProcess process_from_json(const json& j) {
  auto state = parse_state(req_string(j, "state"));
  if (!state) throw Error(Errc::SchemaError, "unknown transfer state");
  TransferProcess p{.transfer_id = req_string(j, "transferId"),
                    .agreement_uid = req_string(j, "agreementId"),
                    .consumer_pid = opt_string(j, "consumerPid").value_or(""),
                    .target = store::Urn::parse(req_string(j, "target")),
                    .state = *state,
                    .requested_format = req_string(j, "format"),
                    .callback_address = opt_string(j, "callbackAddress").value_or(""),
                    .reason = opt_string(j, "reason")};
  if (auto it = j.find("dataAddress"); it != j.end() && !it->is_null()) p.data_address = data_address_from_json(*it);
  for (const auto& h : j.at("history")) {
    auto at = parse_timestamp(h.at("at").get<std::string>());
    auto cmd = parse_command(h.at("message").get<std::string>());
    auto st = parse_state(h.at("state").get<std::string>());
    if (!at || !cmd || !st) throw Error(Errc::SchemaError, "malformed history entry");
    p.history.push_back(HistoryEntry{*at, *cmd, *st});
  }
  return p;
}

bool process_invariants_hold(const TransferProcess& p) {
  std::optional<State> current;
  for (const auto& h : p.history) {
    if (transition(current, h.command) != h.state) return false;
    current = h.state;
  }
  if (current != p.state) return false;
  bool addressed = p.state == State::Started || p.state == State::Suspended || p.state == State::Completed;
  return addressed == p.data_address.has_value();
}

std::string_view to_string(MessageType t) noexcept {
  switch (t) {
    case MessageType::Request: return "TransferRequestMessage";
    case MessageType::Start: return "TransferStartMessage";
    case MessageType::Suspension: return "TransferSuspensionMessage";
    case MessageType::Completion: return "TransferCompletionMessage";
    case MessageType::Termination: return "TransferTerminationMessage";
  }
  return "";
}

json message_to_json(const Message& m) {
  json j{{"@type", to_string(m.type)}};
  if (m.transfer_id) j["transferId"] = *m.transfer_id;
  if (m.agreement_id) j["agreementId"] = *m.agreement_id;
  if (m.format) j["format"] = *m.format;
  if (m.callback_address) j["callbackAddress"] = *m.callback_address;
  if (m.data_address) j["dataAddress"] = data_address_to_json(*m.data_address);
  if (m.reason) j["reason"] = *m.reason;
  return j;
}

Message message_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "envelope must be an object");
  auto type_text = req_string(j, "@type");
  std::optional<MessageType> type;
  for (auto t : {MessageType::Request, MessageType::Start, MessageType::Suspension, MessageType::Completion,
                 MessageType::Termination})
    if (to_string(t) == type_text) type = t;
  if (!type) throw Error(Errc::SchemaError, "unknown @type " + type_text);
  Message m{.type = *type,
            .transfer_id = opt_string(j, "transferId"),
            .agreement_id = opt_string(j, "agreementId"),
            .format = opt_string(j, "format"),
            .callback_address = opt_string(j, "callbackAddress"),
            .reason = opt_string(j, "reason")};
  if (auto it = j.find("dataAddress"); it != j.end() && !it->is_null()) m.data_address = data_address_from_json(*it);
  if (m.type == MessageType::Request && (!m.agreement_id || !m.format))
    throw Error(Errc::SchemaError, "TransferRequestMessage needs agreementId and format");
  return m;
}

std::optional<Message> announce(const TransferProcess& p) {
  Message m{.type = MessageType::Request, .transfer_id = p.transfer_id};
  switch (p.state) {
    case State::Requested: return std::nullopt;
    case State::Started:
      m.type = MessageType::Start;
      m.data_address = p.data_address;
      break;
    case State::Suspended: m.type = MessageType::Suspension; break;
    case State::Completed: m.type = MessageType::Completion; break;
    case State::Terminated:
      m.type = MessageType::Termination;
      m.reason = p.reason;
      break;
  }
  return m;
}

EndSystem EndSystem::load(const std::filesystem::path& mapping_file) {
  auto doc = json::parse(read_file(mapping_file));
  if (!doc.is_object()) throw Error(Errc::SchemaError, mapping_file.string() + ": expected an object");
  EndSystem out;
  auto base = mapping_file.parent_path();
  for (const auto& [urn, rel] : doc.items()) out.add(store::Urn::parse(urn), base / rel.get<std::string>());
  return out;
}

void EndSystem::add(const store::Urn& urn, std::filesystem::path file) { files_.insert_or_assign(urn, std::move(file)); }

void EndSystem::merge(const EndSystem& other) {
  for (const auto& [urn, file] : other.files_) files_.insert_or_assign(urn, file);
}

bool EndSystem::has(const store::Urn& urn) const { return files_.count(urn) > 0; }

std::string EndSystem::read(const store::Urn& urn) const {
  auto it = files_.find(urn);
  if (it == files_.end()) throw Error(Errc::TargetNotFound, "no data registered for " + urn.str());
  return read_file(it->second);
}

TransferManager::TransferManager(odrl::PolicyStore& policies, Resolve resolve, Finalized finalized,
                                 EndSystem end_system, std::shared_ptr<const Clock> clock, TransferConfig config,
                                 std::optional<std::filesystem::path> dir)
    : policies_(policies),
      resolve_(std::move(resolve)),
      finalized_(std::move(finalized)),
      end_system_(std::move(end_system)),
      clock_(std::move(clock)),
      config_(config),
      table_(std::move(dir), process_to_json, process_from_json) {
  if (config_.token_lifetime <= std::chrono::seconds(0)) throw Error(Errc::InvalidArgument, "token lifetime must be positive");
  for (const auto& p : table_.all()) bind_token(p);
}

void TransferManager::step(TransferProcess& p, Command command) {
  std::optional<State> current;
  if (!p.history.empty()) current = p.state;
  auto next = transition(current, command);
  if (!next)
    throw Error(Errc::IllegalTransition, std::string(to_string(command)) + " in " +
                                             (current ? std::string(to_string(*current)) : "initial state"));
  p.state = *next;
  p.history.push_back(HistoryEntry{clock_->now(), command, *next});
  if (p.state == State::Terminated) p.data_address.reset();
}

void TransferManager::bind_token(const TransferProcess& p) {
  if (!p.data_address || p.data_address->access_token.empty()) return;
  std::lock_guard lock(tokens_mutex_);
  tokens_.insert_or_assign(p.data_address->access_token, p.transfer_id);
}

DataAddress TransferManager::grant(const facade::OperationalMetadata& meta) {
  return DataAddress{meta.access_endpoint, meta.auth_scheme, random_hex(32), clock_->now() + config_.token_lifetime};
}

TransferProcess TransferManager::request_transfer(const std::string& agreement_uid, const std::string& requested_format,
                                                  const std::string& callback_address,
                                                  std::map<odrl::LeftOperand, std::string> attributes) {
  auto agreement = policies_.get(agreement_uid);
  if (!agreement || agreement->kind != odrl::PolicyKind::Agreement) throw Error(Errc::UnknownAgreement, agreement_uid);
  if (agreement->status != odrl::PolicyStatus::Active) throw Error(Errc::AgreementInvalidated, agreement_uid);
  if (!finalized_(agreement_uid)) throw Error(Errc::NegotiationNotFinalized, agreement_uid);

  TransferProcess p{.transfer_id = random_uuid_urn(),
                    .agreement_uid = agreement_uid,
                    .consumer_pid = agreement->assignee.value_or(""),
                    .target = agreement->target,
                    .requested_format = requested_format,
                    .callback_address = callback_address};
  step(p, Command::Request);

  std::optional<facade::OperationalMetadata> meta;
  try {
    meta = resolve_(agreement->target);
  } catch (const Error& e) {
    if (e.code() != Errc::TargetNotFound) throw;
  }
  if (!meta) {
    step(p, Command::Terminate);
    p.reason = "target unresolved";
  } else {
    auto published = facade::published_format(meta->format_hint);
    if (published != requested_format)
      throw Error(Errc::FormatMismatch, "requested " + requested_format + ", dataset is " + published);
    attributes.insert_or_assign(odrl::LeftOperand::DateTime, format_timestamp(clock_->now()));
    odrl::RequestContext ctx{odrl::Action::Use, p.consumer_pid, std::move(attributes)};
    if (odrl::evaluate(*agreement, ctx) != odrl::Decision::Permit) {
      step(p, Command::Terminate);
      p.reason = "policy denied";
    }
  }
  table_.insert(p.transfer_id, p);
  log::info("transfer.request", {{"transfer", p.transfer_id}, {"agreement", agreement_uid},
                                 {"state", std::string(to_string(p.state))}});
  return p;
}

TransferProcess TransferManager::start(const std::string& transfer_id) {
  auto p = table_.update(transfer_id, [&](TransferProcess& p) {
    if (!transition(p.state, Command::Start))
      throw Error(Errc::IllegalTransition, "start in " + std::string(to_string(p.state)));
    std::optional<facade::OperationalMetadata> meta;
    try {
      meta = resolve_(p.target);
    } catch (const Error& e) {
      if (e.code() != Errc::TargetNotFound) throw;
    }
    if (!meta) {
      step(p, Command::Terminate);
      p.reason = "target unresolved";
      return p;
    }
    step(p, Command::Start);
    p.data_address = grant(*meta);
    return p;
  });
  bind_token(p);
  return p;
}

TransferProcess TransferManager::suspend(const std::string& transfer_id) {
  return table_.update(transfer_id, [&](TransferProcess& p) {
    step(p, Command::Suspend);
    return p;
  });
}

TransferProcess TransferManager::resume(const std::string& transfer_id) {
  auto p = table_.update(transfer_id, [&](TransferProcess& p) {
    step(p, Command::Resume);
    std::optional<facade::OperationalMetadata> meta;
    try {
      meta = resolve_(p.target);
    } catch (const Error& e) {
      if (e.code() != Errc::TargetNotFound) throw;
    }
    if (!meta) {
      step(p, Command::Terminate);
      p.reason = "target unresolved";
      return p;
    }
    // The endpoint stays the one granted at start; only the token is re-minted.
    auto fresh = grant(*meta);
    p.data_address->access_token = fresh.access_token;
    p.data_address->valid_until = fresh.valid_until;
    return p;
  });
  bind_token(p);
  return p;
}

TransferProcess TransferManager::complete(const std::string& transfer_id) {
  return table_.update(transfer_id, [&](TransferProcess& p) {
    step(p, Command::Complete);
    return p;
  });
}

TransferProcess TransferManager::terminate(const std::string& transfer_id, std::string reason) {
  return table_.update(transfer_id, [&](TransferProcess& p) {
    step(p, Command::Terminate);
    p.reason = std::move(reason);
    return p;
  });
}

std::optional<TransferProcess> TransferManager::by_token(const std::string& token) const {
  std::string id;
  {
    std::lock_guard lock(tokens_mutex_);
    auto it = tokens_.find(token);
    if (it == tokens_.end()) return std::nullopt;
    id = it->second;
  }
  return table_.get(id);
}

std::string TransferManager::serve_data(const std::string& access_token, const store::Urn& urn) {
  auto p = by_token(access_token);
  if (!p) throw Error(Errc::InvalidToken, "unknown access token");
  if (p->state != State::Started) throw Error(Errc::TransferNotStarted, p->transfer_id);
  if (!p->data_address || p->data_address->access_token != access_token)
    throw Error(Errc::InvalidToken, "access token was replaced");
  if (clock_->now() >= p->data_address->valid_until) throw Error(Errc::ExpiredToken, p->transfer_id);
  if (p->target != urn) throw Error(Errc::WrongTarget, urn.str());
  return end_system_.read(urn);
}

bool TransferManager::token_valid(const std::string& access_token) const {
  auto p = by_token(access_token);
  return p && p->state == State::Started && p->data_address && p->data_address->access_token == access_token &&
         clock_->now() < p->data_address->valid_until;
}

std::optional<TransferProcess> TransferManager::get(const std::string& transfer_id) const {
  return table_.get(transfer_id);
}

std::vector<TransferProcess> TransferManager::all() const { return table_.all(); }

}  // namespace fedspace::transfer
