#pragma once

#include "ddns/chain_store.hpp"
#include "ddns/ledger_types.hpp"

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

namespace ddns {

/// Read side of the asset ledger used by resolvers.
class BindingLookup {
public:
    virtual ~BindingLookup() = default;
    // Confirmed state only. Throws Error(UnknownAsset).
    virtual Binding get_binding(const AssetPath& path) const = 0;
};

/// Simulated asset chain. All mutations are signed transactions that enter
/// a FIFO mempool and take effect when a block is produced; reads only see
/// confirmed state.
///
/// Submissions are validated against the confirmed state plus everything
/// already queued, so errors such as DuplicateAsset or NotOwner surface
/// immediately instead of at block time.
///
/// A persisted ledger shares its directory with other processes: every
/// operation takes the directory lock and first catches up with blocks and
/// mempool entries written by others.
class Ledger : public BindingLookup {
public:
    using BlockListener = std::function<void(const Block&)>;

    Ledger(LedgerParams params, Genesis genesis);

    // Opens (or creates) a persisted ledger. An existing chain keeps its own
    // params and genesis; the arguments only seed a new one.
    static std::unique_ptr<Ledger> open(const std::filesystem::path& dir, LedgerParams params,
                                        Genesis genesis);

    std::string create_root_asset(const AssetPath& path, const Address& owner, const KeyPair& signer);
    std::string create_sub_asset(const AssetPath& parent, const std::string& segment,
                                 const Address& new_owner, const KeyPair& signer);
    std::string set_binding(const AssetPath& path, const Binding& binding, const KeyPair& signer);
    std::string transfer_ownership(const AssetPath& path, const Address& new_owner,
                                   const KeyPair& signer);

    // Builds and signs a transaction with the signer's next pending nonce
    // and the fee for its kind.
    Tx build_tx(TxPayload payload, const KeyPair& signer) const;
    // Returns the txid.
    std::string submit(const Tx& tx);

    // Packs the mempool FIFO until the next tx would exceed the block size.
    Block produce_block(std::int64_t now);

    Binding get_binding(const AssetPath& path) const override;
    std::optional<AssetRecord> get_asset(const AssetPath& path) const;
    // Confirmed state plus queued transactions.
    std::optional<AssetRecord> get_pending_asset(const AssetPath& path) const;
    Amount balance(const Address& address) const;
    Amount burned_fees() const;
    Amount genesis_supply() const;
    std::uint64_t height() const;
    std::string state_hash() const;
    LedgerState snapshot() const;
    std::size_t mempool_size() const;
    std::vector<Block> blocks() const;

    const LedgerParams& params() const noexcept { return params_; }
    const Genesis& genesis() const noexcept { return genesis_; }

    // Persisted ledgers: pick up blocks and mempool entries written by other
    // processes. No-op in memory.
    void sync();

    void add_block_listener(BlockListener listener);

private:
    struct PersistTag {};
    Ledger(PersistTag, const std::filesystem::path& dir, LedgerParams params, Genesis genesis);

    // Callers hold mutex_ exclusively.
    void catch_up_locked(std::vector<Block>& applied);
    void apply_block_locked(const Block& block);
    void rebuild_pending_locked();
    void notify(const std::vector<Block>& blocks);

    LedgerParams params_;
    Genesis genesis_;
    std::unique_ptr<ChainStore> store_;

    mutable std::shared_mutex mutex_;
    LedgerState confirmed_;
    LedgerState pending_;
    std::deque<Tx> mempool_;
    std::vector<Block> chain_;

    std::mutex listeners_mutex_;
    std::vector<BlockListener> listeners_;
};

/// Produces a block every interval on a background thread (service mode).
class BlockScheduler {
public:
    BlockScheduler(Ledger& ledger, std::chrono::milliseconds interval,
                   std::function<std::int64_t()> clock = {});
    ~BlockScheduler();
    BlockScheduler(const BlockScheduler&) = delete;
    BlockScheduler& operator=(const BlockScheduler&) = delete;

    void stop();

private:
    void run();

    Ledger& ledger_;
    std::chrono::milliseconds interval_;
    std::function<std::int64_t()> clock_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stopping_ = false;
    std::thread thread_;
};

} // namespace ddns
