#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fedspace {

enum class Errc {
  InvalidArgument,
  MalformedUrn,
  MissingParentDomain,
  UnknownUrn,
  AlreadyDeleted,
  DeletedEntity,
  EmptyQuery,
  SelfLoop,
  DuplicateEdge,
  SourceUnreachable,
  InvariantViolation,
  ParseError,
  SchemaError,
  TargetNotFound,
  InvalidRuleSet,
  NotAnOffer,
  OfferInvalidated,
  PolicyInvalidated,
  UnknownPolicy,
  BadCredentials,
  TokenExpired,
  IllegalTransition,
  UnknownProcess,
  ProviderUnreachable,
  AgreementMismatch,
  UnknownAgreement,
  AgreementInvalidated,
  NegotiationNotFinalized,
  FormatMismatch,
  InvalidToken,
  ExpiredToken,
  WrongTarget,
  TransferNotStarted,
  Io,
};

std::string_view to_string(Errc code) noexcept;
std::optional<Errc> parse_errc(std::string_view name) noexcept;

/// Exception carrying a closed error code; every module throws this type.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  explicit Error(Errc code)
      : std::runtime_error(std::string(to_string(code))), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace fedspace
