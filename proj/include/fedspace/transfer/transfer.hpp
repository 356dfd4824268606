#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fedspace/common/process_table.hpp"
#include "fedspace/common/time.hpp"
#include "fedspace/facade/store_client.hpp"
#include "fedspace/odrl/policy_store.hpp"
#include "fedspace/store/entity.hpp"

namespace fedspace::transfer {

using nlohmann::json;

enum class State { Requested, Started, Suspended, Completed, Terminated };
enum class Command { Request, Start, Suspend, Resume, Complete, Terminate };

inline constexpr State kAllStates[] = {State::Requested, State::Started, State::Suspended, State::Completed,
                                       State::Terminated};
inline constexpr Command kAllCommands[] = {Command::Request,  Command::Start,    Command::Suspend,
                                           Command::Resume,   Command::Complete, Command::Terminate};

std::string_view to_string(State s) noexcept;
std::string_view to_string(Command c) noexcept;
std::optional<State> parse_state(std::string_view s) noexcept;
std::optional<Command> parse_command(std::string_view s) noexcept;
bool is_absorbing(State s) noexcept;

/// The transfer transition table; nullopt marks an illegal cell.
std::optional<State> transition(std::optional<State> current, Command command) noexcept;

struct DataAddress {
  std::string endpoint_url;
  store::AuthScheme auth_scheme = store::AuthScheme::Bearer;
  std::string access_token;
  Timestamp valid_until{};

  friend bool operator==(const DataAddress&, const DataAddress&) = default;
};

struct HistoryEntry {
  Timestamp at;
  Command command;
  State state;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct TransferProcess {
  std::string transfer_id;
  std::string agreement_uid;
  std::string consumer_pid;
  store::Urn target;
  State state = State::Requested;
  std::string requested_format;
  std::optional<DataAddress> data_address;
  std::string callback_address;
  std::vector<HistoryEntry> history;
  std::optional<std::string> reason;
};

json data_address_to_json(const DataAddress& a);
DataAddress data_address_from_json(const json& j);
json process_to_json(const TransferProcess& p);
TransferProcess process_from_json(const json& j);

/// History is a path through the table, absorbing states are final and a
/// data address is held exactly in STARTED, SUSPENDED and COMPLETED.
bool process_invariants_hold(const TransferProcess& p);

enum class MessageType { Request, Start, Suspension, Completion, Termination };

std::string_view to_string(MessageType t) noexcept;

struct Message {
  MessageType type;
  std::optional<std::string> transfer_id;
  std::optional<std::string> agreement_id;
  std::optional<std::string> format;
  std::optional<std::string> callback_address;
  std::optional<DataAddress> data_address;
  std::optional<std::string> reason;
};

/// Envelope keys: @type, transferId, agreementId, format, callbackAddress, dataAddress, reason.
json message_to_json(const Message& m);
/// Throws SchemaError.
Message message_from_json(const json& j);

/// The outbound message announcing `p`'s current state, if it has one.
std::optional<Message> announce(const TransferProcess& p);

/// Toy end system: serves the bytes of local files registered per dataset urn.
class EndSystem {
 public:
  EndSystem() = default;
  /// Reads an `{urn: relative path}` JSON map; paths resolve against its directory.
  static EndSystem load(const std::filesystem::path& mapping_file);

  void add(const store::Urn& urn, std::filesystem::path file);
  void merge(const EndSystem& other);
  [[nodiscard]] bool has(const store::Urn& urn) const;
  /// Throws TargetNotFound when no file is registered.
  [[nodiscard]] std::string read(const store::Urn& urn) const;
  [[nodiscard]] std::size_t size() const noexcept { return files_.size(); }

 private:
  std::map<store::Urn, std::filesystem::path> files_;
};

struct TransferConfig {
  std::chrono::seconds token_lifetime{15 * 60};
};

/// Provider-side transfer processes and the token-gated data plane.
class TransferManager {
 public:
  /// Fresh resolution of a dataset; throws TargetNotFound.
  using Resolve = std::function<facade::OperationalMetadata(const store::Urn&)>;
  /// True when the negotiation that produced the agreement is FINALIZED.
  using Finalized = std::function<bool(const std::string& agreement_uid)>;

  TransferManager(odrl::PolicyStore& policies, Resolve resolve, Finalized finalized, EndSystem end_system,
                  std::shared_ptr<const Clock> clock, TransferConfig config = {},
                  std::optional<std::filesystem::path> dir = std::nullopt);

  /// Throws UnknownAgreement, AgreementInvalidated, NegotiationNotFinalized, FormatMismatch.
  /// A denied policy or an unresolvable target yields a TERMINATED process.
  TransferProcess request_transfer(const std::string& agreement_uid, const std::string& requested_format,
                                   const std::string& callback_address,
                                   std::map<odrl::LeftOperand, std::string> attributes = {});

  /// Throws UnknownProcess and IllegalTransition.
  TransferProcess start(const std::string& transfer_id);
  TransferProcess suspend(const std::string& transfer_id);
  TransferProcess resume(const std::string& transfer_id);
  TransferProcess complete(const std::string& transfer_id);
  TransferProcess terminate(const std::string& transfer_id, std::string reason);

  /// Throws InvalidToken, TransferNotStarted, ExpiredToken, WrongTarget.
  std::string serve_data(const std::string& access_token, const store::Urn& urn);

  /// Whether `access_token` would currently be accepted for its own target.
  [[nodiscard]] bool token_valid(const std::string& access_token) const;

  [[nodiscard]] std::optional<TransferProcess> get(const std::string& transfer_id) const;
  [[nodiscard]] std::vector<TransferProcess> all() const;

 private:
  DataAddress grant(const facade::OperationalMetadata& meta);
  void step(TransferProcess& p, Command command);
  void bind_token(const TransferProcess& p);
  std::optional<TransferProcess> by_token(const std::string& token) const;

  odrl::PolicyStore& policies_;
  Resolve resolve_;
  Finalized finalized_;
  EndSystem end_system_;
  std::shared_ptr<const Clock> clock_;
  TransferConfig config_;
  ProcessTable<TransferProcess> table_;
  mutable std::mutex tokens_mutex_;
  std::map<std::string, std::string> tokens_;
};

}  // namespace fedspace::transfer
