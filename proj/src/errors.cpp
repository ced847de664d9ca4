#include "ddns/errors.hpp"

namespace ddns {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::EmptyLabel: return "EmptyLabel";
    case Errc::IllegalCharacter: return "IllegalCharacter";
    case Errc::TooLong: return "TooLong";
    case Errc::NotDdnsName: return "NotDdnsName";
    case Errc::RootTooLong: return "RootTooLong";
    case Errc::SubpathTooLong: return "SubpathTooLong";
    case Errc::ValidationFailure: return "ValidationFailure";
    case Errc::MalformedJson: return "MalformedJson";
    case Errc::MissingTypeKey: return "MissingTypeKey";
    case Errc::BadAddressSyntax: return "BadAddressSyntax";
    case Errc::InvalidCid: return "InvalidCid";
    case Errc::EmptyPayload: return "EmptyPayload";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::NotFound: return "NotFound";
    case Errc::IntegrityMismatch: return "IntegrityMismatch";
    case Errc::SentinelCid: return "SentinelCid";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::QuotaExceeded: return "QuotaExceeded";
    case Errc::RemoteMismatch: return "RemoteMismatch";
    case Errc::NetworkFailure: return "NetworkFailure";
    case Errc::DuplicateAsset: return "DuplicateAsset";
    case Errc::InsufficientFunds: return "InsufficientFunds";
    case Errc::NotOwner: return "NotOwner";
    case Errc::UnknownAsset: return "UnknownAsset";
    case Errc::BadSignature: return "BadSignature";
    case Errc::BadNonce: return "BadNonce";
    case Errc::CorruptChain: return "CorruptChain";
    case Errc::Truncated: return "Truncated";
    case Errc::FormErr: return "FormErr";
    case Errc::UnsupportedOpcode: return "UnsupportedOpcode";
    case Errc::BindFailure: return "BindFailure";
    case Errc::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

} // namespace ddns
