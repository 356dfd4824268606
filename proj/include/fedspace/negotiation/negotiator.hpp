#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fedspace/common/process_table.hpp"
#include "fedspace/common/time.hpp"
#include "fedspace/facade/facade.hpp"
#include "fedspace/negotiation/protocol.hpp"
#include "fedspace/odrl/policy_store.hpp"

namespace fedspace::negotiation {

/// Result of handling one inbound message.
struct Outcome {
  NegotiationProcess process;
  std::optional<Message> reply;
  /// The message was not legal for the process; a live process was terminated.
  bool illegal = false;
};

/// Provider half: answers consumer messages, runs the double check against
/// the facade and the policy store, and emits agreements.
class ProviderNegotiator {
 public:
  ProviderNegotiator(std::string participant_id, odrl::PolicyStore& policies, odrl::TargetResolver& targets,
                     std::shared_ptr<const Clock> clock, std::optional<std::filesystem::path> dir = std::nullopt);

  /// Throws UnknownProcess for a process_id that is not known here and
  /// SchemaError for a request without an assignee.
  Outcome handle(const Message& message);

  /// Starts a provider-initiated negotiation; the reply is the offer to send.
  /// Throws UnknownPolicy, NotAnOffer, OfferInvalidated, TargetNotFound.
  Outcome initiate_offer(const std::string& offer_uid, const std::string& consumer_pid,
                         const std::string& callback_address);

  [[nodiscard]] std::optional<NegotiationProcess> get(const std::string& process_id) const;
  [[nodiscard]] std::vector<NegotiationProcess> all() const;
  /// The process that produced `agreement_uid`, if any.
  [[nodiscard]] std::optional<NegotiationProcess> by_agreement(const std::string& agreement_uid) const;

  [[nodiscard]] const std::string& participant_id() const noexcept { return participant_; }

 private:
  struct Checked {
    std::optional<odrl::Policy> offer;
    std::optional<std::string> failure;
  };

  Checked double_check(const std::string& offer_uid, const std::optional<odrl::Policy>& inline_terms);
  std::optional<Message> agree_or_terminate(NegotiationProcess& p, const std::optional<odrl::Policy>& inline_terms);
  std::optional<Message> terminate(NegotiationProcess& p, const std::string& reason);
  void index_agreement(const NegotiationProcess& p);

  std::string participant_;
  odrl::PolicyStore& policies_;
  odrl::TargetResolver& targets_;
  std::shared_ptr<const Clock> clock_;
  ProcessTable<NegotiationProcess> table_;
  mutable std::mutex index_mutex_;
  std::map<std::string, std::string> by_agreement_;
};

struct ProviderReply {
  NegotiationProcess process;
  std::optional<Message> reply;
};

/// Transport from consumer to provider. Throws ProviderUnreachable.
class ProviderChannel {
 public:
  virtual ~ProviderChannel() = default;
  virtual ProviderReply send(const Message& message) = 0;
};

/// Channel straight into a ProviderNegotiator in the same process.
class InProcessChannel final : public ProviderChannel {
 public:
  explicit InProcessChannel(ProviderNegotiator& provider) : provider_(provider) {}
  ProviderReply send(const Message& message) override;

 private:
  ProviderNegotiator& provider_;
};

/// Consumer half: drives exchanges to completion and checks the agreement
/// against the offer it asked for.
class ConsumerNegotiator {
 public:
  ConsumerNegotiator(std::string participant_id, std::shared_ptr<const Clock> clock,
                     std::optional<std::filesystem::path> dir = std::nullopt);

  /// Sends a request for `offer_uid` and drives the exchange until the
  /// provider stops replying. `terms`, when known, are sent inline and the
  /// agreement must match them. Throws ProviderUnreachable.
  NegotiationProcess negotiate(ProviderChannel& channel, const std::string& offer_uid,
                               const std::optional<odrl::Policy>& terms, const std::string& callback_address);

  /// Inbound message pushed by the provider (e.g. a provider-initiated offer).
  Outcome handle(const Message& message);

  /// Accepts an offer the process sits on and drives the rest of the exchange.
  NegotiationProcess accept(ProviderChannel& channel, const std::string& process_id);

  [[nodiscard]] std::optional<NegotiationProcess> get(const std::string& process_id) const;
  [[nodiscard]] std::vector<NegotiationProcess> all() const;
  [[nodiscard]] const std::string& participant_id() const noexcept { return participant_; }

 private:
  /// Applies `reply` locally; returns the next message to send, if any.
  std::optional<Message> react(NegotiationProcess& p, const Message& reply);
  NegotiationProcess drive(ProviderChannel& channel, const std::string& process_id, std::optional<Message> next);

  std::string participant_;
  std::shared_ptr<const Clock> clock_;
  ProcessTable<NegotiationProcess> table_;
};

}  // namespace fedspace::negotiation
