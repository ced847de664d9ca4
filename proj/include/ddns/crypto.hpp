#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ddns {

using Bytes = std::vector<std::uint8_t>;
using Sha256Digest = std::array<std::uint8_t, 32>;
using PublicKey = std::array<std::uint8_t, 32>;
using Seed = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;

Sha256Digest sha256(std::span<const std::uint8_t> data);
Sha256Digest sha256(std::string_view data);

std::string to_hex(std::span<const std::uint8_t> data);
// Throws Error(ValidationFailure) on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// Ledger account identifier: base58check of a version byte plus the first
/// 20 bytes of SHA-256(public key).
struct Address {
    std::string text;

    static Address from_public_key(const PublicKey& key);
    // Throws Error(ValidationFailure) if the checksum or version is wrong.
    static Address parse(std::string_view text);

    auto operator<=>(const Address&) const = default;
};

/// Ed25519 signing key. Signatures are deterministic.
class KeyPair {
public:
    static KeyPair from_seed(const Seed& seed);
    static KeyPair generate();

    const PublicKey& public_key() const noexcept { return public_key_; }
    const Seed& seed() const noexcept { return seed_; }
    Address address() const { return Address::from_public_key(public_key_); }

    Signature sign(std::span<const std::uint8_t> message) const;

    static bool verify(const PublicKey& key, std::span<const std::uint8_t> message,
                       const Signature& signature);

private:
    Seed seed_{};
    PublicKey public_key_{};
    std::array<std::uint8_t, 64> secret_key_{};
};

} // namespace ddns
