#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fedspace/common/time.hpp"
#include "fedspace/odrl/policy.hpp"

namespace fedspace::negotiation {

using nlohmann::json;

enum class State { Requested, Offered, Accepted, Agreed, Verified, Finalized, Terminated };

enum class Role { Consumer, Provider };

enum class MessageType {
  ContractRequest,
  ContractOffer,
  ContractNegotiationEvent,
  ContractAgreement,
  ContractAgreementVerification,
  ContractNegotiationTermination,
};

enum class EventType { Accepted, Finalized };

/// What the transition table is keyed on: the message type, with the event
/// message split by its event value.
enum class Signal { Request, Offer, Accepted, Finalized, Agreement, Verification, Termination };

inline constexpr State kAllStates[] = {State::Requested, State::Offered,   State::Accepted,  State::Agreed,
                                       State::Verified,  State::Finalized, State::Terminated};
inline constexpr Signal kAllSignals[] = {Signal::Request,   Signal::Offer,        Signal::Accepted,
                                         Signal::Finalized, Signal::Agreement,    Signal::Verification,
                                         Signal::Termination};

std::string_view to_string(State s) noexcept;
std::string_view to_string(Role r) noexcept;
std::string_view to_string(MessageType t) noexcept;
std::string_view to_string(EventType e) noexcept;
std::string_view to_string(Signal s) noexcept;
std::optional<State> parse_state(std::string_view s) noexcept;
std::optional<MessageType> parse_message_type(std::string_view s) noexcept;
std::optional<Signal> parse_signal(std::string_view s) noexcept;

bool is_absorbing(State s) noexcept;

/// The negotiation transition table. `current` is nullopt before the first
/// message. nullopt result means the cell is illegal.
std::optional<State> transition(std::optional<State> current, Signal signal, Role sender) noexcept;

/// Offer carried by a request: either full terms or only a reference by uid.
struct OfferPayload {
  std::string uid;
  std::optional<std::string> assignee;
  std::optional<odrl::Policy> terms;
};

struct Message {
  MessageType type;
  std::optional<std::string> process_id;
  std::optional<std::string> callback_address;
  std::optional<OfferPayload> offer;
  std::optional<odrl::Policy> agreement;
  std::optional<EventType> event;
  std::optional<std::string> reason;
};

Signal signal_of(const Message& m);

/// Envelope keys: @type, processId, callbackAddress, offer, agreement, event, reason.
json message_to_json(const Message& m);
/// Throws SchemaError for malformed envelopes.
Message message_from_json(const json& j);

Message termination_message(const std::string& process_id, std::string reason);

struct HistoryEntry {
  Timestamp at;
  Signal signal;
  State state;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct NegotiationProcess {
  std::string process_id;
  std::string consumer_pid;
  std::string provider_pid;
  State state = State::Requested;
  std::string offer_uid;
  std::optional<std::string> agreement_uid;
  std::string callback_address;
  std::vector<HistoryEntry> history;
  std::optional<std::string> reason;
  /// Consumer side: the offer terms being negotiated, for checking the agreement.
  std::optional<odrl::Policy> offer_terms;
  /// Consumer side: the agreement received from the provider.
  std::optional<odrl::Policy> agreement;
};

json process_to_json(const NegotiationProcess& p);
NegotiationProcess process_from_json(const json& j);

/// Applies one table step to `p` and records it; throws IllegalTransition.
void apply(NegotiationProcess& p, Signal signal, Role sender, Timestamp at);

/// History replays as a path through the table, absorbing states are final
/// and agreement_uid is present exactly in AGREED, VERIFIED and FINALIZED.
bool process_invariants_hold(const NegotiationProcess& p);

}  // namespace fedspace::negotiation
