#pragma once

#include <memory>
#include <string>

#include "fedspace/common/time.hpp"
#include "fedspace/facade/facade.hpp"
#include "fedspace/negotiation/negotiator.hpp"
#include "fedspace/odrl/policy_store.hpp"
#include "fedspace/service/config.hpp"
#include "fedspace/store/entity_store.hpp"
#include "fedspace/transfer/transfer.hpp"

namespace fedspace::service {

/// One connector instance: its entity store, facade, policy store, the
/// negotiation and transfer processes for its role(s), and the HTTP routes.
/// Everything durable lives under the configured data directory.
class Connector {
 public:
  explicit Connector(ConnectorConfig config,
                     std::shared_ptr<const Clock> clock = std::make_shared<SystemClock>());
  ~Connector();
  Connector(const Connector&) = delete;
  Connector& operator=(const Connector&) = delete;

  /// Binds the listen address and returns the port.
  int bind();
  /// Serves until stop(); binds first if needed.
  void serve();
  /// bind() and serve() on a background thread.
  void start();
  void stop();

  [[nodiscard]] std::string url() const;
  [[nodiscard]] const ConnectorConfig& config() const noexcept { return config_; }

  store::EntityStore& store() noexcept { return *store_; }
  facade::Facade& facade() noexcept { return *facade_; }
  odrl::PolicyStore& policies() noexcept { return *policies_; }
  /// Null unless the role includes PROVIDER.
  negotiation::ProviderNegotiator* provider() noexcept { return provider_.get(); }
  transfer::TransferManager* transfers() noexcept { return transfers_.get(); }
  /// Null unless the role includes CONSUMER.
  negotiation::ConsumerNegotiator* consumer() noexcept { return consumer_.get(); }

 private:
  struct Http;

  void routes();
  void pump();
  [[nodiscard]] bool is_provider() const noexcept { return config_.role != Role::Consumer; }
  [[nodiscard]] bool is_consumer() const noexcept { return config_.role != Role::Provider; }

  ConnectorConfig config_;
  std::shared_ptr<const Clock> clock_;
  std::unique_ptr<store::EntityStore> store_;
  std::shared_ptr<facade::LocalStoreClient> local_client_;
  std::unique_ptr<facade::Facade> facade_;
  std::unique_ptr<odrl::PolicyStore> policies_;
  std::unique_ptr<negotiation::ProviderNegotiator> provider_;
  std::unique_ptr<transfer::TransferManager> transfers_;
  std::unique_ptr<negotiation::ConsumerNegotiator> consumer_;
  std::unique_ptr<Http> http_;
};

}  // namespace fedspace::service
