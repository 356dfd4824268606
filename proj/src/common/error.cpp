#include "fedspace/common/error.hpp"

namespace fedspace {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::MalformedUrn: return "MalformedUrn";
    case Errc::MissingParentDomain: return "MissingParentDomain";
    case Errc::UnknownUrn: return "UnknownUrn";
    case Errc::AlreadyDeleted: return "AlreadyDeleted";
    case Errc::DeletedEntity: return "DeletedEntity";
    case Errc::EmptyQuery: return "EmptyQuery";
    case Errc::SelfLoop: return "SelfLoop";
    case Errc::DuplicateEdge: return "DuplicateEdge";
    case Errc::SourceUnreachable: return "SourceUnreachable";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::ParseError: return "ParseError";
    case Errc::SchemaError: return "SchemaError";
    case Errc::TargetNotFound: return "TargetNotFound";
    case Errc::InvalidRuleSet: return "InvalidRuleSet";
    case Errc::NotAnOffer: return "NotAnOffer";
    case Errc::OfferInvalidated: return "OfferInvalidated";
    case Errc::PolicyInvalidated: return "PolicyInvalidated";
    case Errc::UnknownPolicy: return "UnknownPolicy";
    case Errc::BadCredentials: return "BadCredentials";
    case Errc::TokenExpired: return "TokenExpired";
    case Errc::IllegalTransition: return "IllegalTransition";
    case Errc::UnknownProcess: return "UnknownProcess";
    case Errc::ProviderUnreachable: return "ProviderUnreachable";
    case Errc::AgreementMismatch: return "AgreementMismatch";
    case Errc::UnknownAgreement: return "UnknownAgreement";
    case Errc::AgreementInvalidated: return "AgreementInvalidated";
    case Errc::NegotiationNotFinalized: return "NegotiationNotFinalized";
    case Errc::FormatMismatch: return "FormatMismatch";
    case Errc::InvalidToken: return "InvalidToken";
    case Errc::ExpiredToken: return "ExpiredToken";
    case Errc::WrongTarget: return "WrongTarget";
    case Errc::TransferNotStarted: return "TransferNotStarted";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

std::optional<Errc> parse_errc(std::string_view name) noexcept {
  for (int i = 0; i <= static_cast<int>(Errc::Io); ++i) {
    auto code = static_cast<Errc>(i);
    if (to_string(code) == name) return code;
  }
  return std::nullopt;
}

}  // namespace fedspace
