#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedspace/common/time.hpp"
#include "fedspace/facade/facade.hpp"
#include "fedspace/negotiation/negotiator.hpp"
#include "fedspace/odrl/policy_store.hpp"
#include "fedspace/store/entity_store.hpp"
#include "fedspace/transfer/transfer.hpp"

namespace fedspace::testkit {

inline constexpr const char* kProvider = "urn:connector:provider";
inline constexpr const char* kConsumer = "urn:connector:consumer";

/// A provider and a consumer wired in-process over one entity store that has
/// federated the first fixture catalog. Everything is in memory unless `dir` is set.
struct World {
  std::shared_ptr<ManualClock> clock;
  /// The source the store federated from.
  std::unique_ptr<store::EntityStore> source;
  std::unique_ptr<store::EntityStore> store;
  std::shared_ptr<facade::LocalStoreClient> client;
  std::unique_ptr<facade::Facade> facade;
  std::unique_ptr<odrl::PolicyStore> policies;
  std::unique_ptr<negotiation::ProviderNegotiator> provider;
  std::unique_ptr<negotiation::ConsumerNegotiator> consumer;
  std::unique_ptr<transfer::TransferManager> transfers;
  std::unique_ptr<negotiation::InProcessChannel> channel;
  std::vector<store::Urn> datasets;

  /// Offer with one unconstrained `use` permission.
  odrl::Policy offer_on(const store::Urn& dataset);
  /// Negotiates `offer` with its terms known to the consumer.
  negotiation::NegotiationProcess negotiate(const odrl::Policy& offer);
};

std::unique_ptr<World> make_world(std::optional<std::filesystem::path> dir = std::nullopt);

struct FuzzReport {
  std::size_t sequences = 0;
  std::size_t operations = 0;
  std::size_t finalized = 0;
  std::size_t transfers_started = 0;
  std::size_t bytes_served = 0;
  std::size_t violations = 0;
  std::vector<std::string> samples;
};

/// Random operation sequences against fresh worlds, checking the protocol
/// invariants after every operation.
FuzzReport fuzz_protocols(std::size_t sequences, std::uint64_t seed);

struct OdrlReport {
  std::size_t cases = 0;
  std::size_t agreements = 0;
  std::size_t permits = 0;
  std::size_t denies = 0;
  std::size_t not_applicable = 0;
  std::vector<std::string> samples;
};

OdrlReport compare_odrl(std::size_t cases, std::uint64_t seed);

struct RoundTripReport {
  std::size_t catalogs = 0;
  std::size_t identical = 0;
  std::size_t mapped = 0;
  std::size_t mapped_valid = 0;
  std::vector<std::string> samples;
};

/// Serialize/deserialize of random catalogs, plus validation of the facade's
/// mapping of random stores.
RoundTripReport dcat_round_trip(std::size_t catalogs, std::size_t stores, std::uint64_t seed);

struct FederationReport {
  std::size_t catalogs = 0;
  std::size_t datasets = 0;
  store::FederationReport first_a, first_b, second_a, second_b;
  std::string failure;
};

/// Two source stores from the fixture catalogs federate into a connector's
/// store; the catalog is read back over HTTP from the connector.
FederationReport federation_scenario(const std::filesystem::path& work_dir);

struct InvalidationReport {
  bool delete_event_seen = false;
  odrl::PolicyStatus offer_status = odrl::PolicyStatus::Active;
  negotiation::State state = negotiation::State::Requested;
  std::string reason;
};

/// Offer on a federated dataset, delete the dataset, drain the feed, negotiate.
InvalidationReport invalidation_chain();

}  // namespace fedspace::testkit
