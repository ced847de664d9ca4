#include "ddns/ledger_types.hpp"

#include "ddns/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ddns {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

enum class TxKind : std::uint8_t { CreateRoot = 1, CreateSub = 2, SetBinding = 3, Transfer = 4 };

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void u64(std::uint64_t v) {
        for (int shift = 56; shift >= 0; shift -= 8) {
            out_.push_back(static_cast<std::uint8_t>(v >> shift));
        }
    }
    void raw(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
    void str(std::string_view s) {
        u16(static_cast<std::uint16_t>(s.size()));
        raw(as_bytes(s));
    }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() {
        const auto b = take(2);
        return static_cast<std::uint16_t>(b[0] << 8 | b[1]);
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (auto b : take(8)) {
            v = v << 8 | b;
        }
        return v;
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        if (in_.size() - pos_ < n) {
            throw Error(Errc::CorruptChain, "truncated transaction");
        }
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::string str() {
        const auto n = u16();
        const auto s = take(n);
        return {s.begin(), s.end()};
    }
    bool done() const { return pos_ == in_.size(); }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void write_unsigned(Writer& w, const Tx& tx) {
    w.u8(Tx::kVersion);
    std::visit(overloaded{
                   [&](const CreateRootTx&) { w.u8(static_cast<std::uint8_t>(TxKind::CreateRoot)); },
                   [&](const CreateSubTx&) { w.u8(static_cast<std::uint8_t>(TxKind::CreateSub)); },
                   [&](const SetBindingTx&) { w.u8(static_cast<std::uint8_t>(TxKind::SetBinding)); },
                   [&](const TransferTx&) { w.u8(static_cast<std::uint8_t>(TxKind::Transfer)); },
               },
               tx.payload);
    w.u64(tx.nonce);
    w.raw(tx.signer);
    w.u64(static_cast<std::uint64_t>(tx.fee.units));
    std::visit(overloaded{
                   [&](const CreateRootTx& p) {
                       w.str(p.path.to_string());
                       w.str(p.new_owner.text);
                   },
                   [&](const CreateSubTx& p) {
                       w.str(p.path.to_string());
                       w.str(p.new_owner.text);
                   },
                   [&](const SetBindingTx& p) {
                       w.str(p.path.to_string());
                       w.str(p.binding.ledger_text());
                   },
                   [&](const TransferTx& p) {
                       w.str(p.path.to_string());
                       w.str(p.new_owner.text);
                   },
               },
               tx.payload);
    w.u16(static_cast<std::uint16_t>(Tx::kPadding));
    static const Bytes kZeros(Tx::kPadding, 0);
    w.raw(kZeros);
}

const char* kind_name(const TxPayload& p) {
    return std::visit(overloaded{
                          [](const CreateRootTx&) { return "CreateRoot"; },
                          [](const CreateSubTx&) { return "CreateSub"; },
                          [](const SetBindingTx&) { return "SetBinding"; },
                          [](const TransferTx&) { return "Transfer"; },
                      },
                      p);
}

} // namespace

Amount Amount::coins(double value) {
    return Amount{static_cast<std::int64_t>(std::llround(value * kUnitsPerCoin))};
}

Amount Amount::parse(std::string_view text) {
    const auto bad = [&] { return Error(Errc::ValidationFailure, "bad amount '" + std::string(text) + "'"); };
    if (text.empty()) {
        throw bad();
    }
    const auto dot = text.find('.');
    const auto whole = text.substr(0, dot);
    const auto frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if ((whole.empty() && frac.empty()) || frac.size() > 8 || whole.size() > 10) {
        throw bad();
    }
    std::int64_t units = 0;
    for (char c : whole) {
        if (c < '0' || c > '9') throw bad();
        units = units * 10 + (c - '0');
    }
    std::int64_t frac_units = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        const char c = i < frac.size() ? frac[i] : '0';
        if (c < '0' || c > '9') throw bad();
        frac_units = frac_units * 10 + (c - '0');
    }
    return Amount{units * kUnitsPerCoin + frac_units};
}

std::string Amount::to_string() const {
    const bool negative = units < 0;
    const auto abs = negative ? -units : units;
    auto frac = std::to_string(abs % kUnitsPerCoin);
    frac.insert(0, 8 - frac.size(), '0');
    return (negative ? "-" : "") + std::to_string(abs / kUnitsPerCoin) + "." + frac;
}

void LedgerParams::validate() const {
    if (block_size_bytes == 0 || block_interval_s <= 0 || creation_fee.units <= 0 ||
        modification_fee.units <= 0 || avg_tx_size_bytes == 0) {
        throw Error(Errc::ValidationFailure, "ledger parameters must be strictly positive");
    }
}

Capacity capacity_tps(const LedgerParams& params) {
    return Capacity{params.block_size_bytes / params.avg_tx_size_bytes, params.block_interval_s};
}

Amount Genesis::total() const {
    Amount sum;
    for (const auto& [_, amount] : balances) {
        sum += amount;
    }
    return sum;
}

std::string Genesis::hash() const {
    std::string canon = "ddns-genesis|" + std::to_string(timestamp);
    for (const auto& [addr, amount] : balances) {
        canon += "|" + addr.text + "=" + std::to_string(amount.units);
    }
    return to_hex(sha256(canon));
}

Tx Tx::make(TxPayload payload, const KeyPair& key, std::uint64_t nonce, Amount fee) {
    Tx tx;
    tx.payload = std::move(payload);
    tx.signer = key.public_key();
    tx.nonce = nonce;
    tx.fee = fee;
    tx.signature = key.sign(tx.signing_bytes());
    return tx;
}

Bytes Tx::signing_bytes() const {
    Writer w;
    write_unsigned(w, *this);
    return w.take();
}

Bytes Tx::serialize() const {
    Writer w;
    write_unsigned(w, *this);
    w.raw(signature);
    return w.take();
}

Tx Tx::deserialize(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (r.u8() != kVersion) {
        throw Error(Errc::CorruptChain, "unknown transaction version");
    }
    const auto kind = static_cast<TxKind>(r.u8());
    Tx tx;
    tx.nonce = r.u64();
    const auto key = r.take(32);
    std::copy(key.begin(), key.end(), tx.signer.begin());
    tx.fee = Amount{static_cast<std::int64_t>(r.u64())};
    const auto path_text = r.str();
    const auto second = r.str();
    try {
        const auto path = AssetPath::parse(path_text);
        switch (kind) {
        case TxKind::CreateRoot: tx.payload = CreateRootTx{path, Address::parse(second)}; break;
        case TxKind::CreateSub: tx.payload = CreateSubTx{path, Address::parse(second)}; break;
        case TxKind::SetBinding: tx.payload = SetBindingTx{path, Binding::from_ledger_text(second)}; break;
        case TxKind::Transfer: tx.payload = TransferTx{path, Address::parse(second)}; break;
        default: throw Error(Errc::CorruptChain, "unknown transaction kind");
        }
    } catch (const Error& e) {
        if (e.code() == Errc::CorruptChain) throw;
        throw Error(Errc::CorruptChain, e.what());
    }
    const auto pad_len = r.u16();
    const auto pad = r.take(pad_len);
    if (pad_len != kPadding || std::any_of(pad.begin(), pad.end(), [](auto b) { return b != 0; })) {
        throw Error(Errc::CorruptChain, "bad transaction padding");
    }
    const auto sig = r.take(64);
    std::copy(sig.begin(), sig.end(), tx.signature.begin());
    if (!r.done()) {
        throw Error(Errc::CorruptChain, "trailing bytes after transaction");
    }
    return tx;
}

std::size_t Tx::serialized_size() const {
    // Fixed: version, kind, nonce, key, fee, two length prefixes, pad
    // length, pad, signature.
    const std::size_t fixed = 1 + 1 + 8 + 32 + 8 + 2 + 2 + 2 + kPadding + 64;
    const auto variable = std::visit(overloaded{
                                         [](const CreateRootTx& p) { return p.path.to_string().size() + p.new_owner.text.size(); },
                                         [](const CreateSubTx& p) { return p.path.to_string().size() + p.new_owner.text.size(); },
                                         [](const SetBindingTx& p) { return p.path.to_string().size() + p.binding.ledger_text().size(); },
                                         [](const TransferTx& p) { return p.path.to_string().size() + p.new_owner.text.size(); },
                                     },
                                     payload);
    return fixed + variable;
}

std::string Tx::txid() const {
    return to_hex(sha256(serialize()));
}

bool Tx::verify_signature() const {
    return KeyPair::verify(signer, signing_bytes(), signature);
}

const AssetPath& Tx::path() const {
    return std::visit([](const auto& p) -> const AssetPath& { return p.path; }, payload);
}

std::string Block::hash() const {
    std::string canon = "ddns-block|" + std::to_string(height) + "|" + std::to_string(timestamp) +
                        "|" + prev_hash + "|" + std::to_string(total_bytes);
    for (const auto& tx : txs) {
        canon += "|" + tx.txid();
    }
    return to_hex(sha256(canon));
}

LedgerState::LedgerState(const Genesis& genesis)
    : balances_(genesis.balances), tip_hash_(genesis.hash()) {}

const AssetRecord* LedgerState::find(const AssetPath& path) const {
    const auto it = assets_.find(path.to_string());
    return it == assets_.end() ? nullptr : &it->second;
}

Amount LedgerState::balance(const Address& address) const {
    const auto it = balances_.find(address);
    return it == balances_.end() ? Amount{} : it->second;
}

std::uint64_t LedgerState::next_nonce(const Address& address) const {
    const auto it = nonces_.find(address);
    return it == nonces_.end() ? 0 : it->second;
}

Amount LedgerState::total_balances() const {
    Amount sum;
    for (const auto& [_, amount] : balances_) {
        sum += amount;
    }
    return sum;
}

void LedgerState::apply(const Tx& tx, const LedgerParams& params, std::uint64_t height,
                        bool check_signature) {
    if (check_signature && !tx.verify_signature()) {
        throw Error(Errc::BadSignature, tx.txid());
    }
    const auto signer = tx.signer_address();
    if (tx.nonce != next_nonce(signer)) {
        throw Error(Errc::BadNonce, "expected nonce " + std::to_string(next_nonce(signer)) +
                                        ", got " + std::to_string(tx.nonce));
    }

    const auto& path = tx.path();
    try {
        validate_asset_path(path);
    } catch (const Error& e) {
        throw Error(Errc::ValidationFailure, e.what());
    }

    const auto require_fee = [&](Amount expected) {
        if (tx.fee != expected) {
            throw Error(Errc::ValidationFailure, std::string(kind_name(tx.payload)) + " fee must be " +
                                                     expected.to_string());
        }
    };
    const auto require_funds = [&] {
        if (balance(signer) < tx.fee) {
            throw Error(Errc::InsufficientFunds, signer.text + " has " + balance(signer).to_string() +
                                                     ", needs " + tx.fee.to_string());
        }
    };
    const auto require_owned = [&](const AssetPath& p) -> const AssetRecord& {
        const auto* rec = find(p);
        if (!rec) {
            throw Error(Errc::UnknownAsset, p.to_string());
        }
        if (rec->owner != signer) {
            throw Error(Errc::NotOwner, signer.text + " does not own " + p.to_string());
        }
        return *rec;
    };

    // Validate everything first; the mutation below cannot fail.
    std::visit(overloaded{
                   [&](const CreateRootTx&) {
                       require_fee(params.creation_fee);
                       if (!path.is_root()) {
                           throw Error(Errc::ValidationFailure, "root asset cannot have a subpath");
                       }
                       if (find(path)) {
                           throw Error(Errc::DuplicateAsset, path.to_string());
                       }
                       require_funds();
                   },
                   [&](const CreateSubTx&) {
                       require_fee(params.creation_fee);
                       if (path.is_root()) {
                           throw Error(Errc::ValidationFailure, "sub asset needs a subpath");
                       }
                       require_owned(path.parent());
                       if (find(path)) {
                           throw Error(Errc::DuplicateAsset, path.to_string());
                       }
                       require_funds();
                   },
                   [&](const SetBindingTx& p) {
                       require_fee(params.modification_fee);
                       require_owned(path);
                       if (p.binding.kind() == Binding::Kind::Initial) {
                           throw Error(Errc::InvalidCid, "cannot rebind to the initial sentinel");
                       }
                       require_funds();
                   },
                   [&](const TransferTx&) {
                       require_fee(Amount{});
                       require_owned(path);
                   },
               },
               tx.payload);

    if (tx.fee.units > 0) {
        balances_[signer] -= tx.fee;
        burned_ += tx.fee;
    }
    nonces_[signer] = tx.nonce + 1;
    std::visit(overloaded{
                   [&](const CreateRootTx& p) {
                       assets_.emplace(path.to_string(), AssetRecord{path, p.new_owner, Binding::initial(), 1, false, height});
                   },
                   [&](const CreateSubTx& p) {
                       assets_.emplace(path.to_string(), AssetRecord{path, p.new_owner, Binding::initial(), 1, false, height});
                   },
                   [&](const SetBindingTx& p) { assets_.at(path.to_string()).binding = p.binding; },
                   [&](const TransferTx& p) { assets_.at(path.to_string()).owner = p.new_owner; },
               },
               tx.payload);
}

std::string LedgerState::hash() const {
    std::string canon = "ddns-state|" + std::to_string(height_) + "|" + tip_hash_ + "|" +
                        std::to_string(burned_.units);
    for (const auto& [key, rec] : assets_) {
        canon += "|A:" + key + "," + rec.owner.text + "," + rec.binding.ledger_text() + "," +
                 std::to_string(rec.quantity) + "," + (rec.reissuable ? "1" : "0") + "," +
                 std::to_string(rec.created_at_height);
    }
    for (const auto& [addr, amount] : balances_) {
        canon += "|B:" + addr.text + "," + std::to_string(amount.units);
    }
    for (const auto& [addr, nonce] : nonces_) {
        canon += "|N:" + addr.text + "," + std::to_string(nonce);
    }
    return to_hex(sha256(canon));
}

} // namespace ddns
