#include "fedspace/negotiation/protocol.hpp"

#include "fedspace/common/error.hpp"

namespace fedspace::negotiation {

std::string_view to_string(State s) noexcept {
  switch (s) {
    case State::Requested: return "REQUESTED";
    case State::Offered: return "OFFERED";
    case State::Accepted: return "ACCEPTED";
    case State::Agreed: return "AGREED";
    case State::Verified: return "VERIFIED";
    case State::Finalized: return "FINALIZED";
    case State::Terminated: return "TERMINATED";
  }
  return "TERMINATED";
}

std::string_view to_string(Role r) noexcept { return r == Role::Consumer ? "CONSUMER" : "PROVIDER"; }

std::string_view to_string(MessageType t) noexcept {
  switch (t) {
    case MessageType::ContractRequest: return "ContractRequestMessage";
    case MessageType::ContractOffer: return "ContractOfferMessage";
    case MessageType::ContractNegotiationEvent: return "ContractNegotiationEventMessage";
    case MessageType::ContractAgreement: return "ContractAgreementMessage";
    case MessageType::ContractAgreementVerification: return "ContractAgreementVerificationMessage";
    case MessageType::ContractNegotiationTermination: return "ContractNegotiationTerminationMessage";
  }
  return "";
}

std::string_view to_string(EventType e) noexcept { return e == EventType::Accepted ? "ACCEPTED" : "FINALIZED"; }

std::string_view to_string(Signal s) noexcept {
  switch (s) {
    case Signal::Request: return "Request";
    case Signal::Offer: return "Offer";
    case Signal::Accepted: return "Event:ACCEPTED";
    case Signal::Finalized: return "Event:FINALIZED";
    case Signal::Agreement: return "Agreement";
    case Signal::Verification: return "Verification";
    case Signal::Termination: return "Termination";
  }
  return "";
}

std::optional<State> parse_state(std::string_view s) noexcept {
  for (auto st : kAllStates)
    if (to_string(st) == s) return st;
  return std::nullopt;
}

std::optional<MessageType> parse_message_type(std::string_view s) noexcept {
  for (auto t : {MessageType::ContractRequest, MessageType::ContractOffer, MessageType::ContractNegotiationEvent,
                 MessageType::ContractAgreement, MessageType::ContractAgreementVerification,
                 MessageType::ContractNegotiationTermination})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

std::optional<Signal> parse_signal(std::string_view s) noexcept {
  for (auto sig : kAllSignals)
    if (to_string(sig) == s) return sig;
  return std::nullopt;
}

bool is_absorbing(State s) noexcept { return s == State::Finalized || s == State::Terminated; }

std::optional<State> transition(std::optional<State> current, Signal signal, Role sender) noexcept {
  const bool by_consumer = sender == Role::Consumer;
  const bool by_provider = sender == Role::Provider;
  if (!current) {
    if (signal == Signal::Request && by_consumer) return State::Requested;
    if (signal == Signal::Offer && by_provider) return State::Offered;
    return std::nullopt;
  }
  const State s = *current;
  if (is_absorbing(s)) return std::nullopt;
  switch (signal) {
    case Signal::Termination: return State::Terminated;
    case Signal::Offer:
      if (s == State::Requested && by_provider) return State::Offered;
      break;
    case Signal::Request:
      if (s == State::Offered && by_consumer) return State::Requested;
      break;
    case Signal::Accepted:
      if (s == State::Offered && by_consumer) return State::Accepted;
      break;
    case Signal::Agreement:
      if ((s == State::Requested || s == State::Accepted) && by_provider) return State::Agreed;
      break;
    case Signal::Verification:
      if (s == State::Agreed && by_consumer) return State::Verified;
      break;
    case Signal::Finalized:
      if (s == State::Verified && by_provider) return State::Finalized;
      break;
  }
  return std::nullopt;
}

Signal signal_of(const Message& m) {
  switch (m.type) {
    case MessageType::ContractRequest: return Signal::Request;
    case MessageType::ContractOffer: return Signal::Offer;
    case MessageType::ContractNegotiationEvent:
      return m.event.value_or(EventType::Accepted) == EventType::Accepted ? Signal::Accepted : Signal::Finalized;
    case MessageType::ContractAgreement: return Signal::Agreement;
    case MessageType::ContractAgreementVerification: return Signal::Verification;
    case MessageType::ContractNegotiationTermination: return Signal::Termination;
  }
  return Signal::Termination;
}

json message_to_json(const Message& m) {
  json j{{"@type", to_string(m.type)}};
  if (m.process_id) j["processId"] = *m.process_id;
  if (m.callback_address) j["callbackAddress"] = *m.callback_address;
  if (m.offer) {
    json offer = m.offer->terms ? odrl::policy_to_json(*m.offer->terms) : json{{"uid", m.offer->uid}};
    offer["uid"] = m.offer->uid;
    if (m.offer->assignee) offer["assignee"] = *m.offer->assignee;
    j["offer"] = std::move(offer);
  }
  if (m.agreement) j["agreement"] = odrl::policy_to_json(*m.agreement);
  if (m.event) j["event"] = to_string(*m.event);
  if (m.reason) j["reason"] = *m.reason;
  return j;
}

namespace {

std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(Errc::SchemaError, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

Message message_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "envelope must be an object");
  auto type_text = opt_string(j, "@type");
  if (!type_text) throw Error(Errc::SchemaError, "envelope has no @type");
  auto type = parse_message_type(*type_text);
  if (!type) throw Error(Errc::SchemaError, "unknown @type " + *type_text);

  Message m{.type = *type,
            .process_id = opt_string(j, "processId"),
            .callback_address = opt_string(j, "callbackAddress")};
  m.reason = opt_string(j, "reason");
  if (auto ev = opt_string(j, "event")) {
    if (*ev == "ACCEPTED") m.event = EventType::Accepted;
    else if (*ev == "FINALIZED") m.event = EventType::Finalized;
    else throw Error(Errc::SchemaError, "unknown event " + *ev);
  }
  if (auto it = j.find("offer"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw Error(Errc::SchemaError, "'offer' must be an object");
    auto uid = opt_string(*it, "uid");
    if (!uid) throw Error(Errc::SchemaError, "offer without uid");
    OfferPayload payload{*uid, opt_string(*it, "assignee"), std::nullopt};
    if (it->contains("target")) {
      try {
        payload.terms = odrl::policy_from_json(*it);
      } catch (const Error& e) {
        throw Error(Errc::SchemaError, "offer: " + e.detail());
      }
    }
    m.offer = std::move(payload);
  }
  if (auto it = j.find("agreement"); it != j.end() && !it->is_null()) {
    try {
      m.agreement = odrl::policy_from_json(*it);
    } catch (const Error& e) {
      throw Error(Errc::SchemaError, "agreement: " + e.detail());
    }
  }

  switch (m.type) {
    case MessageType::ContractRequest:
      if (!m.offer) throw Error(Errc::SchemaError, "ContractRequestMessage needs an offer");
      break;
    case MessageType::ContractOffer:
      if (!m.offer || !m.offer->terms) throw Error(Errc::SchemaError, "ContractOfferMessage needs an inline offer");
      break;
    case MessageType::ContractNegotiationEvent:
      if (!m.event) throw Error(Errc::SchemaError, "ContractNegotiationEventMessage needs an event");
      break;
    case MessageType::ContractAgreement:
      if (!m.agreement) throw Error(Errc::SchemaError, "ContractAgreementMessage needs an agreement");
      break;
    default: break;
  }
  if (m.offer && m.offer->terms) {
    try {
      odrl::check_policy(*m.offer->terms);
    } catch (const Error& e) {
      throw Error(Errc::SchemaError, "offer: " + e.detail());
    }
  }
  if (m.agreement) {
    try {
      odrl::check_policy(*m.agreement);
    } catch (const Error& e) {
      throw Error(Errc::SchemaError, "agreement: " + e.detail());
    }
  }
  return m;
}

Message termination_message(const std::string& process_id, std::string reason) {
  return Message{.type = MessageType::ContractNegotiationTermination,
                 .process_id = process_id,
                 .reason = std::move(reason)};
}

json process_to_json(const NegotiationProcess& p) {
  json history = json::array();
  for (const auto& h : p.history)
    history.push_back(json{{"at", format_timestamp(h.at)}, {"message", to_string(h.signal)}, {"state", to_string(h.state)}});
  json j{{"processId", p.process_id},
         {"consumerPid", p.consumer_pid},
         {"providerPid", p.provider_pid},
         {"state", to_string(p.state)},
         {"offerId", p.offer_uid},
         {"agreementId", p.agreement_uid ? json(*p.agreement_uid) : json(nullptr)},
         {"callbackAddress", p.callback_address},
         {"history", std::move(history)},
         {"reason", p.reason ? json(*p.reason) : json(nullptr)}};
  if (p.offer_terms) j["offer"] = odrl::policy_to_json(*p.offer_terms);
  if (p.agreement) j["agreement"] = odrl::policy_to_json(*p.agreement);
  return j;
}

NegotiationProcess process_from_json(const json& j) {
  NegotiationProcess p;
  p.process_id = j.at("processId").get<std::string>();
  p.consumer_pid = j.at("consumerPid").get<std::string>();
  p.provider_pid = j.at("providerPid").get<std::string>();
  auto state = parse_state(j.at("state").get<std::string>());
  if (!state) throw Error(Errc::SchemaError, "unknown negotiation state");
  p.state = *state;
  p.offer_uid = j.at("offerId").get<std::string>();
  p.agreement_uid = opt_string(j, "agreementId");
  p.callback_address = j.value("callbackAddress", "");
  for (const auto& h : j.at("history")) {
    auto at = parse_timestamp(h.at("at").get<std::string>());
    auto sig = parse_signal(h.at("message").get<std::string>());
    auto st = parse_state(h.at("state").get<std::string>());
    if (!at || !sig || !st) throw Error(Errc::SchemaError, "malformed history entry");
    p.history.push_back(HistoryEntry{*at, *sig, *st});
  }
  p.reason = opt_string(j, "reason");
  if (auto it = j.find("offer"); it != j.end() && !it->is_null()) p.offer_terms = odrl::policy_from_json(*it);
  if (auto it = j.find("agreement"); it != j.end() && !it->is_null()) p.agreement = odrl::policy_from_json(*it);
  return p;
}

void apply(NegotiationProcess& p, Signal signal, Role sender, Timestamp at) {
  std::optional<State> current;
  if (!p.history.empty()) current = p.state;
  auto next = transition(current, signal, sender);
  if (!next)
    throw Error(Errc::IllegalTransition, std::string(to_string(signal)) + " from " + std::string(to_string(sender)) +
                                             " in " + (current ? std::string(to_string(*current)) : "initial state"));
  p.state = *next;
  p.history.push_back(HistoryEntry{at, signal, *next});
  if (p.state == State::Terminated) p.agreement_uid.reset();
}

bool process_invariants_hold(const NegotiationProcess& p) {
  std::optional<State> current;
  for (const auto& h : p.history) {
    if (current && is_absorbing(*current)) return false;
    auto by_c = transition(current, h.signal, Role::Consumer);
    auto by_p = transition(current, h.signal, Role::Provider);
    if (by_c != h.state && by_p != h.state) return false;
    current = h.state;
  }
  if (current && *current != p.state) return false;
  bool agreed = p.state == State::Agreed || p.state == State::Verified || p.state == State::Finalized;
  return agreed == p.agreement_uid.has_value();
}

}  // namespace fedspace::negotiation
