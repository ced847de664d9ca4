#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ddns {

enum class Errc {
    // domain_model
    EmptyLabel,
    IllegalCharacter,
    TooLong,
    NotDdnsName,
    RootTooLong,
    SubpathTooLong,
    ValidationFailure,
    MalformedJson,
    MissingTypeKey,
    BadAddressSyntax,
    InvalidCid,
    // content_store
    EmptyPayload,
    PayloadTooLarge,
    StorageFailure,
    NotFound,
    IntegrityMismatch,
    SentinelCid,
    AuthFailure,
    QuotaExceeded,
    RemoteMismatch,
    NetworkFailure,
    // ledger
    DuplicateAsset,
    InsufficientFunds,
    NotOwner,
    UnknownAsset,
    BadSignature,
    BadNonce,
    CorruptChain,
    // dns_wire
    Truncated,
    FormErr,
    UnsupportedOpcode,
    BindFailure,
    // cli
    ConfigError,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    explicit Error(Errc code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace ddns
