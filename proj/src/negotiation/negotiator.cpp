#include "fedspace/negotiation/negotiator.hpp"

#include "fedspace/common/error.hpp"
#include "fedspace/common/log.hpp"
#include "fedspace/common/util.hpp"

namespace fedspace::negotiation {

namespace {

ProcessTable<NegotiationProcess> make_table(std::optional<std::filesystem::path> dir) {
  return ProcessTable<NegotiationProcess>(std::move(dir), process_to_json, process_from_json);
}

std::optional<State> current_of(const NegotiationProcess& p) {
  if (p.history.empty()) return std::nullopt;
  return p.state;
}

}  // namespace

ProviderNegotiator::ProviderNegotiator(std::string participant_id, odrl::PolicyStore& policies,
                                       odrl::TargetResolver& targets, std::shared_ptr<const Clock> clock,
                                       std::optional<std::filesystem::path> dir)
    : participant_(std::move(participant_id)),
      policies_(policies),
      targets_(targets),
      clock_(std::move(clock)),
      table_(make_table(std::move(dir))) {
  if (participant_.empty()) throw Error(Errc::InvalidArgument, "participant id is empty");
  for (const auto& p : table_.all()) index_agreement(p);
}

ProviderNegotiator::Checked ProviderNegotiator::double_check(const std::string& offer_uid,
                                                             const std::optional<odrl::Policy>& inline_terms) {
  auto offer = policies_.get(offer_uid);
  if (!offer || offer->kind != odrl::PolicyKind::Offer) return {std::nullopt, "offer not found"};
  try {
    targets_.require_live_target(offer->target);
  } catch (const Error& e) {
    if (e.code() != Errc::TargetNotFound && e.code() != Errc::UnknownUrn && e.code() != Errc::DeletedEntity) throw;
    return {std::nullopt, "target unresolved"};
  }
  if (offer->status != odrl::PolicyStatus::Active) return {std::nullopt, "policy invalidated"};
  if (inline_terms && !odrl::same_terms(*inline_terms, *offer)) return {std::nullopt, "offer mismatch"};
  return {std::move(offer), std::nullopt};
}

std::optional<Message> ProviderNegotiator::terminate(NegotiationProcess& p, const std::string& reason) {
  apply(p, Signal::Termination, Role::Provider, clock_->now());
  p.reason = reason;
  log::info("negotiation.terminated", {{"process", p.process_id}, {"reason", reason}});
  return termination_message(p.process_id, reason);
}

std::optional<Message> ProviderNegotiator::agree_or_terminate(NegotiationProcess& p,
                                                              const std::optional<odrl::Policy>& inline_terms) {
  auto checked = double_check(p.offer_uid, inline_terms);
  if (checked.failure) return terminate(p, *checked.failure);
  std::optional<odrl::Policy> agreement;
  try {
    agreement = policies_.make_agreement(*checked.offer, p.consumer_pid);
  } catch (const Error& e) {
    if (e.code() == Errc::OfferInvalidated) return terminate(p, "policy invalidated");
    if (e.code() == Errc::NotAnOffer) return terminate(p, "offer not found");
    throw;
  }
  apply(p, Signal::Agreement, Role::Provider, clock_->now());
  p.agreement_uid = agreement->uid;
  return Message{.type = MessageType::ContractAgreement, .process_id = p.process_id, .agreement = agreement};
}

void ProviderNegotiator::index_agreement(const NegotiationProcess& p) {
  if (!p.agreement_uid) return;
  std::lock_guard lock(index_mutex_);
  by_agreement_.insert_or_assign(*p.agreement_uid, p.process_id);
}

Outcome ProviderNegotiator::handle(const Message& message) {
  const Signal signal = signal_of(message);
  const auto now = clock_->now();

  if (!message.process_id) {
    if (signal != Signal::Request)
      throw Error(Errc::IllegalTransition, std::string(to_string(signal)) + " without a process");
    if (!message.offer->assignee || message.offer->assignee->empty())
      throw Error(Errc::SchemaError, "request offer has no assignee");
    NegotiationProcess p{.process_id = random_uuid_urn(),
                         .consumer_pid = *message.offer->assignee,
                         .provider_pid = participant_,
                         .offer_uid = message.offer->uid,
                         .callback_address = message.callback_address.value_or("")};
    apply(p, Signal::Request, Role::Consumer, now);
    auto reply = agree_or_terminate(p, message.offer->terms);
    table_.insert(p.process_id, p);
    index_agreement(p);
    log::info("negotiation.request", {{"process", p.process_id}, {"state", std::string(to_string(p.state))}});
    return Outcome{std::move(p), std::move(reply), false};
  }

  auto out = table_.update(*message.process_id, [&](NegotiationProcess& p) -> Outcome {
    if (!transition(current_of(p), signal, Role::Consumer)) {
      if (is_absorbing(p.state)) return Outcome{p, std::nullopt, true};
      auto reply = terminate(p, "illegal transition");
      return Outcome{p, std::move(reply), true};
    }
    apply(p, signal, Role::Consumer, now);
    std::optional<Message> reply;
    switch (signal) {
      case Signal::Request: {
        std::optional<odrl::Policy> terms;
        if (message.offer) {
          p.offer_uid = message.offer->uid;
          terms = message.offer->terms;
        }
        reply = agree_or_terminate(p, terms);
        break;
      }
      case Signal::Accepted: reply = agree_or_terminate(p, std::nullopt); break;
      case Signal::Verification:
        apply(p, Signal::Finalized, Role::Provider, clock_->now());
        reply = Message{.type = MessageType::ContractNegotiationEvent,
                        .process_id = p.process_id,
                        .event = EventType::Finalized};
        break;
      case Signal::Termination: p.reason = message.reason.value_or("terminated by consumer"); break;
      default: break;
    }
    return Outcome{p, std::move(reply), false};
  });
  index_agreement(out.process);
  return out;
}

Outcome ProviderNegotiator::initiate_offer(const std::string& offer_uid, const std::string& consumer_pid,
                                           const std::string& callback_address) {
  auto offer = policies_.get(offer_uid);
  if (!offer) throw Error(Errc::UnknownPolicy, offer_uid);
  if (offer->kind != odrl::PolicyKind::Offer) throw Error(Errc::NotAnOffer, offer_uid);
  if (offer->status != odrl::PolicyStatus::Active) throw Error(Errc::OfferInvalidated, offer_uid);
  if (consumer_pid.empty()) throw Error(Errc::InvalidArgument, "consumer id is empty");
  targets_.require_live_target(offer->target);

  NegotiationProcess p{.process_id = random_uuid_urn(),
                       .consumer_pid = consumer_pid,
                       .provider_pid = participant_,
                       .offer_uid = offer_uid,
                       .callback_address = callback_address};
  apply(p, Signal::Offer, Role::Provider, clock_->now());
  table_.insert(p.process_id, p);
  Message reply{.type = MessageType::ContractOffer,
                .process_id = p.process_id,
                .offer = OfferPayload{offer_uid, consumer_pid, *offer}};
  return Outcome{std::move(p), std::move(reply), false};
}

std::optional<NegotiationProcess> ProviderNegotiator::get(const std::string& process_id) const {
  return table_.get(process_id);
}

std::vector<NegotiationProcess> ProviderNegotiator::all() const { return table_.all(); }

std::optional<NegotiationProcess> ProviderNegotiator::by_agreement(const std::string& agreement_uid) const {
  std::string id;
  {
    std::lock_guard lock(index_mutex_);
    auto it = by_agreement_.find(agreement_uid);
    if (it == by_agreement_.end()) return std::nullopt;
    id = it->second;
  }
  return table_.get(id);
}

ProviderReply InProcessChannel::send(const Message& message) {
  auto out = provider_.handle(message);
  return ProviderReply{std::move(out.process), std::move(out.reply)};
}

ConsumerNegotiator::ConsumerNegotiator(std::string participant_id, std::shared_ptr<const Clock> clock,
                                       std::optional<std::filesystem::path> dir)
    : participant_(std::move(participant_id)), clock_(std::move(clock)), table_(make_table(std::move(dir))) {
  if (participant_.empty()) throw Error(Errc::InvalidArgument, "participant id is empty");
}

std::optional<Message> ConsumerNegotiator::react(NegotiationProcess& p, const Message& reply) {
  const Signal signal = signal_of(reply);
  if (!transition(current_of(p), signal, Role::Provider)) {
    if (is_absorbing(p.state)) return std::nullopt;
    return termination_message(p.process_id, "illegal transition");
  }
  apply(p, signal, Role::Provider, clock_->now());
  switch (signal) {
    case Signal::Agreement: {
      const auto& agreement = *reply.agreement;
      p.agreement_uid = agreement.uid;
      bool ok = agreement.kind == odrl::PolicyKind::Agreement && agreement.assignee == participant_ &&
                (!p.offer_terms || odrl::same_terms(agreement, *p.offer_terms));
      if (!ok) return termination_message(p.process_id, "agreement mismatch");
      p.agreement = agreement;
      return Message{.type = MessageType::ContractAgreementVerification, .process_id = p.process_id};
    }
    case Signal::Offer: {
      const auto& offered = reply.offer->terms;
      bool same = p.offer_terms && offered && odrl::same_terms(*offered, *p.offer_terms);
      p.offer_uid = reply.offer->uid;
      if (!same) return termination_message(p.process_id, "offer rejected");
      p.offer_terms = offered;
      return Message{.type = MessageType::ContractNegotiationEvent,
                     .process_id = p.process_id,
                     .event = EventType::Accepted};
    }
    case Signal::Termination: p.reason = reply.reason.value_or("terminated by provider"); break;
    default: break;
  }
  return std::nullopt;
}

NegotiationProcess ConsumerNegotiator::drive(ProviderChannel& channel, const std::string& process_id,
                                             std::optional<Message> next) {
  while (next) {
    table_.update(process_id, [&](NegotiationProcess& p) {
      Message outbound = *next;
      outbound.process_id = process_id;
      apply(p, signal_of(outbound), Role::Consumer, clock_->now());
      if (outbound.type == MessageType::ContractNegotiationTermination) p.reason = outbound.reason;
      auto answer = channel.send(outbound);
      next.reset();
      if (answer.reply) next = react(p, *answer.reply);
    });
  }
  return *table_.get(process_id);
}

NegotiationProcess ConsumerNegotiator::negotiate(ProviderChannel& channel, const std::string& offer_uid,
                                                 const std::optional<odrl::Policy>& terms,
                                                 const std::string& callback_address) {
  NegotiationProcess p{.consumer_pid = participant_,
                       .offer_uid = offer_uid,
                       .callback_address = callback_address,
                       .offer_terms = terms};
  apply(p, Signal::Request, Role::Consumer, clock_->now());
  Message request{.type = MessageType::ContractRequest,
                  .callback_address = callback_address,
                  .offer = OfferPayload{offer_uid, participant_, terms}};
  auto answer = channel.send(request);
  if (answer.process.process_id.empty()) throw Error(Errc::ProviderUnreachable, "provider returned no process id");
  p.process_id = answer.process.process_id;
  p.provider_pid = answer.process.provider_pid;
  std::optional<Message> next;
  if (answer.reply) next = react(p, *answer.reply);
  table_.insert(p.process_id, p);
  auto done = drive(channel, p.process_id, std::move(next));
  log::info("negotiation.consumer_done", {{"process", done.process_id}, {"state", std::string(to_string(done.state))}});
  return done;
}

Outcome ConsumerNegotiator::handle(const Message& message) {
  if (!message.process_id) throw Error(Errc::SchemaError, "message has no processId");
  const auto& id = *message.process_id;
  if (!table_.get(id)) {
    if (message.type != MessageType::ContractOffer) throw Error(Errc::UnknownProcess, id);
    NegotiationProcess p{.process_id = id,
                         .consumer_pid = participant_,
                         .provider_pid = message.offer->terms->assigner,
                         .offer_uid = message.offer->uid,
                         .callback_address = message.callback_address.value_or(""),
                         .offer_terms = message.offer->terms};
    apply(p, Signal::Offer, Role::Provider, clock_->now());
    table_.insert(id, p);
    return Outcome{std::move(p), std::nullopt, false};
  }
  return table_.update(id, [&](NegotiationProcess& p) -> Outcome {
    bool legal = transition(current_of(p), signal_of(message), Role::Provider).has_value();
    if (!legal && is_absorbing(p.state)) return Outcome{p, std::nullopt, true};
    auto reply = react(p, message);
    if (reply) {
      apply(p, signal_of(*reply), Role::Consumer, clock_->now());
      if (reply->type == MessageType::ContractNegotiationTermination) p.reason = reply->reason;
    }
    return Outcome{p, std::move(reply), !legal};
  });
}

NegotiationProcess ConsumerNegotiator::accept(ProviderChannel& channel, const std::string& process_id) {
  if (!table_.get(process_id)) throw Error(Errc::UnknownProcess, process_id);
  return drive(channel, process_id,
               Message{.type = MessageType::ContractNegotiationEvent,
                       .process_id = process_id,
                       .event = EventType::Accepted});
}

std::optional<NegotiationProcess> ConsumerNegotiator::get(const std::string& process_id) const {
  return table_.get(process_id);
}

std::vector<NegotiationProcess> ConsumerNegotiator::all() const { return table_.all(); }

}  // namespace fedspace::negotiation
