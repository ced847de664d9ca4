#pragma once

#include "ddns/ledger_types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ddns {

/// On-disk chain for a persisted ledger. Files under `dir`:
///
///   blocks.log     line 1: {"format":"ddns-chain","version":1,"params":{..},"genesis":{..}}
///                  then one JSON object per block, txs as hex canonical bytes
///   mempool.log    one hex-encoded pending transaction per line
///   snapshot.json  state after the last block plus its state hash
///   lock           advisory lock held while reading or writing the above
///
/// blocks.log is append-only and authoritative; the snapshot is checked
/// against the replayed state on open.
class ChainStore {
public:
    static constexpr int kFormatVersion = 1;

    explicit ChainStore(std::filesystem::path dir);

    class Lock {
    public:
        explicit Lock(const std::filesystem::path& path);
        ~Lock();
        Lock(const Lock&) = delete;
        Lock& operator=(const Lock&) = delete;

    private:
        int fd_ = -1;
    };

    Lock lock() const { return Lock(dir_ / "lock"); }

    bool initialized() const;
    void initialize(const LedgerParams& params, const Genesis& genesis);
    // Throws Error(CorruptChain) on a bad or unsupported header.
    void read_header(LedgerParams& params, Genesis& genesis);

    // Blocks appended since the previous call (or since open).
    std::vector<Block> read_new_blocks();
    void append_block(const Block& block);

    std::vector<Tx> read_mempool() const;
    void write_mempool(const std::vector<Tx>& txs) const;
    void append_mempool(const Tx& tx) const;

    void write_snapshot(const LedgerState& state) const;
    // (height, state hash) recorded in the snapshot, if any.
    std::optional<std::pair<std::uint64_t, std::string>> read_snapshot() const;

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    std::uint64_t read_offset_ = 0;
};

} // namespace ddns
