#include "ddns/crypto.hpp"

#include "ddns/base58.hpp"
#include "ddns/errors.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>

namespace ddns {

namespace {

constexpr std::uint8_t kAddressVersion = 0x38;

void ensure_sodium() {
    static const bool ok = sodium_init() >= 0;
    if (!ok) {
        throw std::runtime_error("libsodium initialisation failed");
    }
}

std::array<std::uint8_t, 4> checksum(std::span<const std::uint8_t> data) {
    const auto once = sha256(data);
    const auto twice = sha256(once);
    return {twice[0], twice[1], twice[2], twice[3]};
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

Sha256Digest sha256(std::span<const std::uint8_t> data) {
    ensure_sodium();
    Sha256Digest out{};
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

Sha256Digest sha256(std::string_view data) {
    return sha256(as_bytes(data));
}

std::string to_hex(std::span<const std::uint8_t> data) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) {
        throw Error(Errc::ValidationFailure, "odd-length hex string");
    }
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        const int hi = hex_value(hex[i]);
        const int lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) {
            throw Error(Errc::ValidationFailure, "non-hex character");
        }
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

Address Address::from_public_key(const PublicKey& key) {
    const auto digest = sha256(key);
    Bytes payload;
    payload.reserve(25);
    payload.push_back(kAddressVersion);
    payload.insert(payload.end(), digest.begin(), digest.begin() + 20);
    const auto check = checksum(payload);
    payload.insert(payload.end(), check.begin(), check.end());
    return Address{base58::encode(payload)};
}

Address Address::parse(std::string_view text) {
    const auto decoded = base58::decode(text);
    if (!decoded || decoded->size() != 25 || (*decoded)[0] != kAddressVersion) {
        throw Error(Errc::ValidationFailure, "malformed address '" + std::string(text) + "'");
    }
    const auto check = checksum(std::span(*decoded).first(21));
    if (!std::equal(check.begin(), check.end(), decoded->begin() + 21)) {
        throw Error(Errc::ValidationFailure, "address checksum mismatch");
    }
    return Address{std::string(text)};
}

KeyPair KeyPair::from_seed(const Seed& seed) {
    ensure_sodium();
    KeyPair kp;
    kp.seed_ = seed;
    crypto_sign_ed25519_seed_keypair(kp.public_key_.data(), kp.secret_key_.data(), seed.data());
    return kp;
}

KeyPair KeyPair::generate() {
    ensure_sodium();
    Seed seed{};
    randombytes_buf(seed.data(), seed.size());
    return from_seed(seed);
}

Signature KeyPair::sign(std::span<const std::uint8_t> message) const {
    Signature sig{};
    crypto_sign_ed25519_detached(sig.data(), nullptr, message.data(), message.size(),
                                 secret_key_.data());
    return sig;
}

bool KeyPair::verify(const PublicKey& key, std::span<const std::uint8_t> message,
                     const Signature& signature) {
    ensure_sodium();
    return crypto_sign_ed25519_verify_detached(signature.data(), message.data(), message.size(),
                                               key.data()) == 0;
}

} // namespace ddns
