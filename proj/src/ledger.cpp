#include "ddns/ledger.hpp"

#include "ddns/errors.hpp"

#include <chrono>
#include <iostream>

namespace ddns {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

Amount fee_for(const TxPayload& payload, const LedgerParams& params) {
    return std::visit(overloaded{
                          [&](const CreateRootTx&) { return params.creation_fee; },
                          [&](const CreateSubTx&) { return params.creation_fee; },
                          [&](const SetBindingTx&) { return params.modification_fee; },
                          [&](const TransferTx&) { return Amount{}; },
                      },
                      payload);
}

} // namespace

Ledger::Ledger(LedgerParams params, Genesis genesis)
    : params_(params), genesis_(std::move(genesis)), confirmed_(genesis_), pending_(genesis_) {
    params_.validate();
}

Ledger::Ledger(PersistTag, const std::filesystem::path& dir, LedgerParams params, Genesis genesis)
    : params_(params), genesis_(std::move(genesis)), store_(std::make_unique<ChainStore>(dir)) {
    auto lock = store_->lock();
    if (store_->initialized()) {
        store_->read_header(params_, genesis_);
    } else {
        params_.validate();
        store_->initialize(params_, genesis_);
    }
    params_.validate();
    confirmed_ = LedgerState(genesis_);
    pending_ = confirmed_;

    std::vector<Block> applied;
    catch_up_locked(applied);

    const auto snap = store_->read_snapshot();
    if (snap && snap->first == confirmed_.height()) {
        if (snap->second != confirmed_.hash()) {
            throw Error(Errc::CorruptChain, "snapshot state hash disagrees with replayed chain");
        }
    } else {
        store_->write_snapshot(confirmed_);
    }
}

std::unique_ptr<Ledger> Ledger::open(const std::filesystem::path& dir, LedgerParams params,
                                     Genesis genesis) {
    return std::unique_ptr<Ledger>(new Ledger(PersistTag{}, dir, params, std::move(genesis)));
}

void Ledger::apply_block_locked(const Block& block) {
    if (block.height != confirmed_.height() + 1 || block.prev_hash != confirmed_.tip_hash()) {
        throw Error(Errc::CorruptChain, "block " + std::to_string(block.height) + " does not extend the tip");
    }
    std::uint64_t total = 0;
    LedgerState next = confirmed_;
    for (const auto& tx : block.txs) {
        total += tx.serialized_size();
        try {
            next.apply(tx, params_, block.height);
        } catch (const Error& e) {
            throw Error(Errc::CorruptChain, "block " + std::to_string(block.height) + ": " + e.what());
        }
    }
    if (total != block.total_bytes || total > params_.block_size_bytes) {
        throw Error(Errc::CorruptChain, "block " + std::to_string(block.height) + " size mismatch");
    }
    next.set_tip(block.height, block.hash());
    confirmed_ = std::move(next);
    chain_.push_back(block);
}

void Ledger::rebuild_pending_locked() {
    pending_ = confirmed_;
    std::deque<Tx> kept;
    for (auto& tx : mempool_) {
        try {
            pending_.apply(tx, params_, confirmed_.height() + 1, false);
            kept.push_back(std::move(tx));
        } catch (const Error&) {
            // superseded by a confirmed block; drop
        }
    }
    mempool_ = std::move(kept);
}

void Ledger::catch_up_locked(std::vector<Block>& applied) {
    if (!store_) {
        return;
    }
    for (auto& block : store_->read_new_blocks()) {
        apply_block_locked(block);
        applied.push_back(std::move(block));
    }
    const auto txs = store_->read_mempool();
    mempool_.assign(txs.begin(), txs.end());
    pending_ = confirmed_;
    std::deque<Tx> kept;
    for (const auto& tx : mempool_) {
        try {
            pending_.apply(tx, params_, confirmed_.height() + 1);
            kept.push_back(tx);
        } catch (const Error&) {
        }
    }
    mempool_ = std::move(kept);
}

void Ledger::notify(const std::vector<Block>& blocks) {
    if (blocks.empty()) {
        return;
    }
    std::vector<BlockListener> listeners;
    {
        std::lock_guard lock(listeners_mutex_);
        listeners = listeners_;
    }
    for (const auto& block : blocks) {
        for (const auto& l : listeners) {
            l(block);
        }
    }
}

void Ledger::sync() {
    if (!store_) {
        return;
    }
    std::vector<Block> applied;
    {
        auto file_lock = store_->lock();
        std::unique_lock lock(mutex_);
        catch_up_locked(applied);
    }
    notify(applied);
}

void Ledger::add_block_listener(BlockListener listener) {
    std::lock_guard lock(listeners_mutex_);
    listeners_.push_back(std::move(listener));
}

Tx Ledger::build_tx(TxPayload payload, const KeyPair& signer) const {
    std::shared_lock lock(mutex_);
    const auto fee = fee_for(payload, params_);
    return Tx::make(std::move(payload), signer, pending_.next_nonce(signer.address()), fee);
}

std::string Ledger::submit(const Tx& tx) {
    if (tx.serialized_size() > params_.block_size_bytes) {
        throw Error(Errc::ValidationFailure, "transaction larger than a block");
    }
    std::optional<ChainStore::Lock> file_lock;
    if (store_) {
        file_lock.emplace(store_->dir() / "lock");
    }
    std::vector<Block> applied;
    std::string txid;
    {
        std::unique_lock lock(mutex_);
        catch_up_locked(applied);
        pending_.apply(tx, params_, confirmed_.height() + 1);
        mempool_.push_back(tx);
        if (store_) {
            store_->append_mempool(tx);
        }
        txid = tx.txid();
    }
    file_lock.reset();
    notify(applied);
    return txid;
}

namespace {

// Signing needs the pending nonce, which for a persisted ledger is only
// known after catching up; retry once if another writer raced us.
template <class F>
std::string submit_signed(Ledger& ledger, F&& make_payload, const KeyPair& signer) {
    ledger.sync();
    auto tx = ledger.build_tx(make_payload(), signer);
    try {
        return ledger.submit(tx);
    } catch (const Error& e) {
        if (e.code() != Errc::BadNonce) {
            throw;
        }
    }
    ledger.sync();
    return ledger.submit(ledger.build_tx(make_payload(), signer));
}

} // namespace

std::string Ledger::create_root_asset(const AssetPath& path, const Address& owner,
                                      const KeyPair& signer) {
    if (!path.is_root()) {
        throw Error(Errc::ValidationFailure, "root asset cannot have a subpath");
    }
    try {
        validate_asset_path(path);
    } catch (const Error& e) {
        throw Error(Errc::ValidationFailure, e.what());
    }
    return submit_signed(*this, [&] { return TxPayload{CreateRootTx{path, owner}}; }, signer);
}

std::string Ledger::create_sub_asset(const AssetPath& parent, const std::string& segment,
                                     const Address& new_owner, const KeyPair& signer) {
    const auto path = parent.child(segment);
    try {
        validate_asset_path(path);
    } catch (const Error& e) {
        throw Error(Errc::ValidationFailure, e.what());
    }
    return submit_signed(*this, [&] { return TxPayload{CreateSubTx{path, new_owner}}; }, signer);
}

std::string Ledger::set_binding(const AssetPath& path, const Binding& binding,
                                const KeyPair& signer) {
    return submit_signed(*this, [&] { return TxPayload{SetBindingTx{path, binding}}; }, signer);
}

std::string Ledger::transfer_ownership(const AssetPath& path, const Address& new_owner,
                                       const KeyPair& signer) {
    return submit_signed(*this, [&] { return TxPayload{TransferTx{path, new_owner}}; }, signer);
}

Block Ledger::produce_block(std::int64_t now) {
    std::optional<ChainStore::Lock> file_lock;
    if (store_) {
        file_lock.emplace(store_->dir() / "lock");
    }
    std::vector<Block> applied;
    Block block;
    {
        std::unique_lock lock(mutex_);
        catch_up_locked(applied);

        block.height = confirmed_.height() + 1;
        block.timestamp = now;
        block.prev_hash = confirmed_.tip_hash();

        LedgerState next = confirmed_;
        std::size_t consumed = 0;
        for (const auto& tx : mempool_) {
            const auto size = tx.serialized_size();
            if (block.total_bytes + size > params_.block_size_bytes) {
                break;
            }
            ++consumed;
            try {
                next.apply(tx, params_, block.height);
            } catch (const Error& e) {
                std::cerr << "dropping tx " << tx.txid() << ": " << e.what() << '\n';
                continue;
            }
            block.txs.push_back(tx);
            block.total_bytes += size;
        }
        next.set_tip(block.height, block.hash());
        confirmed_ = std::move(next);
        chain_.push_back(block);
        mempool_.erase(mempool_.begin(), mempool_.begin() + static_cast<std::ptrdiff_t>(consumed));
        rebuild_pending_locked();

        if (store_) {
            store_->append_block(block);
            store_->write_mempool({mempool_.begin(), mempool_.end()});
            store_->write_snapshot(confirmed_);
        }
        applied.push_back(block);
    }
    file_lock.reset();
    notify(applied);
    return block;
}

Binding Ledger::get_binding(const AssetPath& path) const {
    std::shared_lock lock(mutex_);
    const auto* rec = confirmed_.find(path);
    if (!rec) {
        throw Error(Errc::UnknownAsset, path.to_string());
    }
    return rec->binding;
}

std::optional<AssetRecord> Ledger::get_asset(const AssetPath& path) const {
    std::shared_lock lock(mutex_);
    const auto* rec = confirmed_.find(path);
    return rec ? std::optional<AssetRecord>(*rec) : std::nullopt;
}

std::optional<AssetRecord> Ledger::get_pending_asset(const AssetPath& path) const {
    std::shared_lock lock(mutex_);
    const auto* rec = pending_.find(path);
    return rec ? std::optional<AssetRecord>(*rec) : std::nullopt;
}

Amount Ledger::balance(const Address& address) const {
    std::shared_lock lock(mutex_);
    return confirmed_.balance(address);
}

Amount Ledger::burned_fees() const {
    std::shared_lock lock(mutex_);
    return confirmed_.burned();
}

Amount Ledger::genesis_supply() const {
    return genesis_.total();
}

std::uint64_t Ledger::height() const {
    std::shared_lock lock(mutex_);
    return confirmed_.height();
}

std::string Ledger::state_hash() const {
    std::shared_lock lock(mutex_);
    return confirmed_.hash();
}

LedgerState Ledger::snapshot() const {
    std::shared_lock lock(mutex_);
    return confirmed_;
}

std::size_t Ledger::mempool_size() const {
    std::shared_lock lock(mutex_);
    return mempool_.size();
}

std::vector<Block> Ledger::blocks() const {
    std::shared_lock lock(mutex_);
    return chain_;
}

BlockScheduler::BlockScheduler(Ledger& ledger, std::chrono::milliseconds interval,
                               std::function<std::int64_t()> clock)
    : ledger_(ledger), interval_(interval), clock_(std::move(clock)) {
    if (!clock_) {
        clock_ = [] {
            return std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                .count();
        };
    }
    thread_ = std::thread([this] { run(); });
}

BlockScheduler::~BlockScheduler() {
    stop();
}

void BlockScheduler::stop() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) {
        thread_.join();
    }
}

void BlockScheduler::run() {
    std::unique_lock lock(mutex_);
    while (!cv_.wait_for(lock, interval_, [this] { return stopping_; })) {
        lock.unlock();
        try {
            ledger_.sync();
            // Empty blocks are legal but only bloat the log in service mode.
            if (ledger_.mempool_size() > 0) {
                ledger_.produce_block(clock_());
            }
        } catch (const std::exception& e) {
            std::cerr << "block scheduler: " << e.what() << '\n';
        }
        lock.lock();
    }
}

} // namespace ddns
