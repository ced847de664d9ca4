#include "ddns/chain_store.hpp"

#include "ddns/errors.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

namespace ddns {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json params_to_json(const LedgerParams& p) {
    return {{"block_size_bytes", p.block_size_bytes},
            {"block_interval_s", p.block_interval_s},
            {"creation_fee", p.creation_fee.to_string()},
            {"modification_fee", p.modification_fee.to_string()},
            {"avg_tx_size_bytes", p.avg_tx_size_bytes}};
}

LedgerParams params_from_json(const json& j) {
    LedgerParams p;
    p.block_size_bytes = j.at("block_size_bytes").get<std::uint64_t>();
    p.block_interval_s = j.at("block_interval_s").get<std::int64_t>();
    p.creation_fee = Amount::parse(j.at("creation_fee").get<std::string>());
    p.modification_fee = Amount::parse(j.at("modification_fee").get<std::string>());
    p.avg_tx_size_bytes = j.at("avg_tx_size_bytes").get<std::uint64_t>();
    return p;
}

json block_to_json(const Block& b) {
    json txs = json::array();
    for (const auto& tx : b.txs) {
        txs.push_back(to_hex(tx.serialize()));
    }
    return {{"height", b.height},       {"timestamp", b.timestamp},
            {"prev_hash", b.prev_hash}, {"hash", b.hash()},
            {"total_bytes", b.total_bytes}, {"txs", std::move(txs)}};
}

Block block_from_json(const json& j) {
    Block b;
    b.height = j.at("height").get<std::uint64_t>();
    b.timestamp = j.at("timestamp").get<std::int64_t>();
    b.prev_hash = j.at("prev_hash").get<std::string>();
    b.total_bytes = j.at("total_bytes").get<std::uint64_t>();
    for (const auto& hex : j.at("txs")) {
        b.txs.push_back(Tx::deserialize(from_hex(hex.get<std::string>())));
    }
    if (b.hash() != j.at("hash").get<std::string>()) {
        throw Error(Errc::CorruptChain, "block " + std::to_string(b.height) + " hash mismatch");
    }
    return b;
}

void write_file(const fs::path& path, const std::string& data) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!(out << data)) {
            throw Error(Errc::StorageFailure, "cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

} // namespace

ChainStore::Lock::Lock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
        if (fd_ >= 0) ::close(fd_);
        throw Error(Errc::StorageFailure, "cannot lock " + path.string());
    }
}

ChainStore::Lock::~Lock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
}

ChainStore::ChainStore(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) {
        throw Error(Errc::StorageFailure, "cannot create " + dir_.string() + ": " + ec.message());
    }
}

bool ChainStore::initialized() const {
    return fs::exists(dir_ / "blocks.log") && fs::file_size(dir_ / "blocks.log") > 0;
}

void ChainStore::initialize(const LedgerParams& params, const Genesis& genesis) {
    json balances = json::object();
    for (const auto& [addr, amount] : genesis.balances) {
        balances[addr.text] = amount.to_string();
    }
    const json header{{"format", "ddns-chain"},
                      {"version", kFormatVersion},
                      {"params", params_to_json(params)},
                      {"genesis", {{"timestamp", genesis.timestamp}, {"balances", balances}}}};
    const auto line = header.dump() + "\n";
    write_file(dir_ / "blocks.log", line);
    read_offset_ = line.size();
}

void ChainStore::read_header(LedgerParams& params, Genesis& genesis) {
    std::ifstream in(dir_ / "blocks.log", std::ios::binary);
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(Errc::CorruptChain, "missing block log header");
    }
    try {
        const auto header = json::parse(line);
        if (header.at("format") != "ddns-chain" || header.at("version") != kFormatVersion) {
            throw Error(Errc::CorruptChain, "unsupported block log format");
        }
        params = params_from_json(header.at("params"));
        genesis = Genesis{};
        genesis.timestamp = header.at("genesis").at("timestamp").get<std::int64_t>();
        for (const auto& [addr, amount] : header.at("genesis").at("balances").items()) {
            genesis.balances[Address::parse(addr)] = Amount::parse(amount.get<std::string>());
        }
    } catch (const json::exception& e) {
        throw Error(Errc::CorruptChain, e.what());
    }
    read_offset_ = line.size() + 1;
}

std::vector<Block> ChainStore::read_new_blocks() {
    std::ifstream in(dir_ / "blocks.log", std::ios::binary);
    in.seekg(static_cast<std::streamoff>(read_offset_));
    std::vector<Block> blocks;
    std::string line;
    while (std::getline(in, line)) {
        if (in.eof()) {
            break; // partial trailing line from an interrupted append
        }
        try {
            blocks.push_back(block_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(Errc::CorruptChain, e.what());
        }
        read_offset_ += line.size() + 1;
    }
    return blocks;
}

void ChainStore::append_block(const Block& block) {
    const auto line = block_to_json(block).dump() + "\n";
    std::ofstream out(dir_ / "blocks.log", std::ios::binary | std::ios::app);
    if (!(out << line) || !out.flush()) {
        throw Error(Errc::StorageFailure, "cannot append to block log");
    }
    read_offset_ += line.size();
}

std::vector<Tx> ChainStore::read_mempool() const {
    std::vector<Tx> txs;
    std::ifstream in(dir_ / "mempool.log", std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            txs.push_back(Tx::deserialize(from_hex(line)));
        }
    }
    return txs;
}

void ChainStore::write_mempool(const std::vector<Tx>& txs) const {
    std::string data;
    for (const auto& tx : txs) {
        data += to_hex(tx.serialize());
        data += '\n';
    }
    write_file(dir_ / "mempool.log", data);
}

void ChainStore::append_mempool(const Tx& tx) const {
    std::ofstream out(dir_ / "mempool.log", std::ios::binary | std::ios::app);
    if (!(out << to_hex(tx.serialize()) << '\n') || !out.flush()) {
        throw Error(Errc::StorageFailure, "cannot append to mempool");
    }
}

void ChainStore::write_snapshot(const LedgerState& state) const {
    json assets = json::object();
    for (const auto& [key, rec] : state.assets()) {
        assets[key] = {{"owner", rec.owner.text},
                       {"binding", rec.binding.ledger_text()},
                       {"quantity", rec.quantity},
                       {"reissuable", rec.reissuable},
                       {"created_at_height", rec.created_at_height}};
    }
    json balances = json::object();
    for (const auto& [addr, amount] : state.balances()) {
        balances[addr.text] = amount.to_string();
    }
    json nonces = json::object();
    for (const auto& [addr, nonce] : state.nonces()) {
        nonces[addr.text] = nonce;
    }
    const json doc{{"version", kFormatVersion},
                   {"height", state.height()},
                   {"tip_hash", state.tip_hash()},
                   {"state_hash", state.hash()},
                   {"burned_fees", state.burned().to_string()},
                   {"assets", std::move(assets)},
                   {"balances", std::move(balances)},
                   {"nonces", std::move(nonces)}};
    write_file(dir_ / "snapshot.json", doc.dump(1));
}

std::optional<std::pair<std::uint64_t, std::string>> ChainStore::read_snapshot() const {
    std::ifstream in(dir_ / "snapshot.json", std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    try {
        const auto doc = json::parse(in);
        return std::pair{doc.at("height").get<std::uint64_t>(), doc.at("state_hash").get<std::string>()};
    } catch (const json::exception& e) {
        throw Error(Errc::CorruptChain, "corrupt snapshot: " + std::string(e.what()));
    }
}

} // namespace ddns
