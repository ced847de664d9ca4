#pragma once

#include "ddns/crypto.hpp"
#include "ddns/domain_model.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ddns {

/// Currency amount in base units; 1 coin = 10^8 units.
struct Amount {
    static constexpr std::int64_t kUnitsPerCoin = 100'000'000;

    std::int64_t units = 0;

    static Amount coins(double value);
    // Accepts "12", "0.1", "0.00000001". Throws Error(ValidationFailure).
    static Amount parse(std::string_view text);
    std::string to_string() const;

    Amount operator+(Amount o) const { return {units + o.units}; }
    Amount operator-(Amount o) const { return {units - o.units}; }
    Amount& operator+=(Amount o) { units += o.units; return *this; }
    Amount& operator-=(Amount o) { units -= o.units; return *this; }
    auto operator<=>(const Amount&) const = default;
};

struct LedgerParams {
    std::uint64_t block_size_bytes = 4 * 1024 * 1024;
    std::int64_t block_interval_s = 15;
    Amount creation_fee{10'000'000};
    Amount modification_fee{10'000'000};
    std::uint64_t avg_tx_size_bytes = 546;

    // Throws Error(ValidationFailure) unless every field is strictly positive.
    void validate() const;
    bool operator==(const LedgerParams&) const = default;
};

struct Capacity {
    std::uint64_t txs_per_block = 0;
    std::int64_t interval_s = 1;

    double tps() const { return static_cast<double>(txs_per_block) / static_cast<double>(interval_s); }
    std::uint64_t tps_floor() const { return txs_per_block / static_cast<std::uint64_t>(interval_s); }
};

// floor(block_size / avg_tx_size) transactions every block interval.
Capacity capacity_tps(const LedgerParams& params);

struct Genesis {
    std::map<Address, Amount> balances;
    std::int64_t timestamp = 0;

    Amount total() const;
    std::string hash() const;
    bool operator==(const Genesis&) const = default;
};

struct AssetRecord {
    AssetPath path;
    Address owner;
    Binding binding = Binding::initial();
    std::uint64_t quantity = 1;
    bool reissuable = false;
    std::uint64_t created_at_height = 0;

    bool operator==(const AssetRecord&) const = default;
};

struct CreateRootTx {
    AssetPath path; // root only
    Address new_owner;
    bool operator==(const CreateRootTx&) const = default;
};

struct CreateSubTx {
    AssetPath path; // the new asset; its parent must exist
    Address new_owner;
    bool operator==(const CreateSubTx&) const = default;
};

struct SetBindingTx {
    AssetPath path;
    Binding binding;
    bool operator==(const SetBindingTx&) const = default;
};

struct TransferTx {
    AssetPath path;
    Address new_owner;
    bool operator==(const TransferTx&) const = default;
};

using TxPayload = std::variant<CreateRootTx, CreateSubTx, SetBindingTx, TransferTx>;

/// Signed ledger transaction.
///
/// Canonical serialization (all integers big-endian, str = u16 length + bytes):
///
///   u8 version | u8 kind | u64 nonce | 32B signer key | i64 fee
///   | str path | str owner-or-binding | u16 pad-length | pad (zeros)
///   | 64B signature
///
/// The signature covers everything before it. The zero padding stands in
/// for the input/output scripts of a real asset transaction and is sized
/// so that a SetBinding on a seven-character path ("XXX/WWW") is exactly
/// 546 bytes.
struct Tx {
    static constexpr std::uint8_t kVersion = 1;
    static constexpr std::size_t kPadding = 373;

    TxPayload payload;
    PublicKey signer{};
    std::uint64_t nonce = 0;
    Amount fee;
    Signature signature{};

    static Tx make(TxPayload payload, const KeyPair& key, std::uint64_t nonce, Amount fee);

    Address signer_address() const { return Address::from_public_key(signer); }
    Bytes signing_bytes() const;
    Bytes serialize() const;
    // Throws Error(CorruptChain) on malformed input.
    static Tx deserialize(std::span<const std::uint8_t> bytes);

    std::size_t serialized_size() const;
    std::string txid() const;
    bool verify_signature() const;
    const AssetPath& path() const;

    bool operator==(const Tx&) const = default;
};

inline std::size_t serialized_size(const Tx& tx) { return tx.serialized_size(); }

struct Block {
    std::uint64_t height = 0;
    std::int64_t timestamp = 0;
    std::string prev_hash;
    std::vector<Tx> txs;
    std::uint64_t total_bytes = 0;

    std::string hash() const;
};

/// Confirmed (or speculative) ledger state.
class LedgerState {
public:
    LedgerState() = default;
    LedgerState(const Genesis& genesis);

    // Validates `tx` against this state and applies it. On error nothing
    // changes. Throws Error(BadSignature | BadNonce | ValidationFailure |
    // DuplicateAsset | UnknownAsset | NotOwner | InsufficientFunds | InvalidCid).
    void apply(const Tx& tx, const LedgerParams& params, std::uint64_t height,
               bool check_signature = true);

    const AssetRecord* find(const AssetPath& path) const;
    Amount balance(const Address& address) const;
    std::uint64_t next_nonce(const Address& address) const;
    Amount burned() const noexcept { return burned_; }
    Amount total_balances() const;

    std::uint64_t height() const noexcept { return height_; }
    const std::string& tip_hash() const noexcept { return tip_hash_; }
    void set_tip(std::uint64_t height, std::string hash) {
        height_ = height;
        tip_hash_ = std::move(hash);
    }

    const std::map<std::string, AssetRecord>& assets() const noexcept { return assets_; }
    const std::map<Address, Amount>& balances() const noexcept { return balances_; }
    const std::map<Address, std::uint64_t>& nonces() const noexcept { return nonces_; }

    std::string hash() const;

private:
    std::map<std::string, AssetRecord> assets_;
    std::map<Address, Amount> balances_;
    std::map<Address, std::uint64_t> nonces_;
    Amount burned_;
    std::uint64_t height_ = 0;
    std::string tip_hash_;
};

} // namespace ddns
