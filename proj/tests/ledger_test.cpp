#include "ddns/content_store.hpp"
#include "ddns/errors.hpp"
#include "ddns/ledger.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <fstream>
#include <random>
#include <thread>

using namespace ddns;
using ddns::test::genesis_for;
using ddns::test::TempDir;
using ddns::test::test_key;

namespace {

template <typename F>
Errc error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::ValidationFailure;
}

const AssetPath kXxx = AssetPath::parse("XXX");
const AssetPath kWww = AssetPath::parse("XXX/WWW");
const Amount kTenth{10'000'000};

struct LedgerFixture : ::testing::Test {
    KeyPair alice = test_key(1);
    KeyPair bob = test_key(2);
    KeyPair carol = test_key(3);
    Ledger ledger{LedgerParams{}, genesis_for({&alice, &bob, &carol}, 1000.0)};
    std::int64_t clock = 1'700'000'000;

    Block mine() { return ledger.produce_block(clock += 15); }

    void setup_www() {
        ledger.create_root_asset(kXxx, alice.address(), alice);
        ledger.create_sub_asset(kXxx, "WWW", alice.address(), alice);
        mine();
    }
};

} // namespace

TEST(Amount, ParseAndFormat) {
    EXPECT_EQ(Amount::parse("0.1").units, 10'000'000);
    EXPECT_EQ(Amount::parse("12").units, 1'200'000'000);
    EXPECT_EQ(Amount::parse("0.00000001").units, 1);
    EXPECT_EQ(Amount{10'000'000}.to_string(), "0.10000000");
    EXPECT_EQ(Amount::coins(0.1), kTenth);
    EXPECT_EQ(error_of([] { Amount::parse("0.000000001"); }), Errc::ValidationFailure);
    EXPECT_EQ(error_of([] { Amount::parse("1e5"); }), Errc::ValidationFailure);
}

TEST(Capacity, DefaultsGive512PerSecond) {
    const auto cap = capacity_tps(LedgerParams{});
    EXPECT_EQ(cap.txs_per_block, 7681u);
    EXPECT_EQ(cap.tps_floor(), 512u);
    EXPECT_NEAR(cap.tps(), 512.07, 0.01);
}

TEST(Capacity, ScalesLinearly) {
    LedgerParams half;
    half.block_size_bytes /= 2;
    EXPECT_EQ(capacity_tps(half).tps_floor(), 256u);

    LedgerParams one;
    one.block_interval_s = 1;
    one.avg_tx_size_bytes = one.block_size_bytes;
    EXPECT_EQ(capacity_tps(one).tps_floor(), 1u);
}

TEST(Capacity, RejectsNonPositiveParams) {
    LedgerParams p;
    p.block_interval_s = 0;
    EXPECT_EQ(error_of([&] { p.validate(); }), Errc::ValidationFailure);
    EXPECT_EQ(error_of([&] { Ledger(p, Genesis{}); }), Errc::ValidationFailure);
}

TEST(TxSize, SetBindingOnSevenCharacterPathIs546Bytes) {
    const auto key = test_key(1);
    const auto cid = compute_cid(R"({"Type":"A","Address":"1.2.3.4"})");
    const auto tx = Tx::make(SetBindingTx{kWww, Binding::active(cid)}, key, 0, kTenth);
    EXPECT_EQ(tx.serialized_size(), 546u);
    EXPECT_EQ(tx.serialize().size(), 546u);
    const auto off = Tx::make(SetBindingTx{kWww, Binding::deactivated()}, key, 5, kTenth);
    EXPECT_EQ(off.serialized_size(), 546u);
}

TEST(TxSize, DeterministicAndMonotonicInPathLength) {
    const auto key = test_key(1);
    const auto cid = compute_cid("x");
    EXPECT_EQ(Tx::make(SetBindingTx{kWww, Binding::active(cid)}, key, 3, kTenth).serialize(),
              Tx::make(SetBindingTx{kWww, Binding::active(cid)}, key, 3, kTenth).serialize());
    std::size_t previous = 0;
    std::string seg;
    for (int len = 1; len <= 30; ++len) {
        seg.push_back('A' + len % 26);
        const auto size = Tx::make(SetBindingTx{AssetPath{"XXX", {seg}}, Binding::active(cid)}, key, 0, kTenth)
                              .serialized_size();
        EXPECT_GT(size, previous);
        previous = size;
    }
}

TEST(Tx, SerializationRoundTripAndSignature) {
    const auto key = test_key(4);
    const std::vector<TxPayload> payloads{
        CreateRootTx{kXxx, key.address()},
        CreateSubTx{kWww, test_key(5).address()},
        SetBindingTx{kWww, Binding::active(compute_cid("y"))},
        SetBindingTx{kWww, Binding::deactivated()},
        TransferTx{kWww, test_key(6).address()},
    };
    for (const auto& p : payloads) {
        const auto tx = Tx::make(p, key, 42, kTenth);
        const auto back = Tx::deserialize(tx.serialize());
        EXPECT_EQ(back, tx);
        EXPECT_TRUE(back.verify_signature());
        EXPECT_EQ(back.txid(), tx.txid());
        EXPECT_EQ(tx.txid().size(), 64u);
    }
    auto bytes = Tx::make(payloads[0], key, 1, kTenth).serialize();
    bytes[12] ^= 1;
    EXPECT_FALSE(Tx::deserialize(bytes).verify_signature());
    bytes.pop_back();
    EXPECT_EQ(error_of([&] { Tx::deserialize(bytes); }), Errc::CorruptChain);
}

TEST_F(LedgerFixture, CreateRootConfirmsAtNextBlock) {
    ledger.create_root_asset(kXxx, alice.address(), alice);
    EXPECT_FALSE(ledger.get_asset(kXxx));
    EXPECT_TRUE(ledger.get_pending_asset(kXxx));
    EXPECT_EQ(error_of([&] { ledger.get_binding(kXxx); }), Errc::UnknownAsset);
    mine();
    const auto rec = ledger.get_asset(kXxx);
    ASSERT_TRUE(rec);
    EXPECT_EQ(rec->owner, alice.address());
    EXPECT_EQ(rec->binding, Binding::initial());
    EXPECT_FALSE(rec->reissuable);
    EXPECT_EQ(rec->quantity, 1u);
    EXPECT_EQ(ledger.get_binding(kXxx), Binding::initial());
}

TEST_F(LedgerFixture, DuplicateRoot) {
    ledger.create_root_asset(kXxx, alice.address(), alice);
    EXPECT_EQ(error_of([&] { ledger.create_root_asset(kXxx, bob.address(), bob); }), Errc::DuplicateAsset);
    mine();
    EXPECT_EQ(error_of([&] { ledger.create_root_asset(kXxx, alice.address(), alice); }), Errc::DuplicateAsset);
}

TEST_F(LedgerFixture, FeesAreExactlyOneTenth) {
    const auto before = ledger.balance(alice.address());
    ledger.create_root_asset(kXxx, alice.address(), alice);
    mine();
    EXPECT_EQ(before - ledger.balance(alice.address()), kTenth);
    ledger.create_sub_asset(kXxx, "WWW", alice.address(), alice);
    mine();
    EXPECT_EQ(before - ledger.balance(alice.address()), Amount{20'000'000});
    ledger.set_binding(kWww, Binding::active(compute_cid("r")), alice);
    mine();
    EXPECT_EQ(before - ledger.balance(alice.address()), Amount{30'000'000});
    ledger.transfer_ownership(kWww, bob.address(), alice);
    mine();
    EXPECT_EQ(before - ledger.balance(alice.address()), Amount{30'000'000});
    EXPECT_EQ(ledger.burned_fees(), Amount{30'000'000});
}

TEST_F(LedgerFixture, SubAssetGoesToNamedOwner) {
    ledger.create_root_asset(kXxx, alice.address(), alice);
    ledger.create_sub_asset(kXxx, "WWW", bob.address(), alice);
    mine();
    EXPECT_EQ(ledger.get_asset(kWww)->owner, bob.address());
    EXPECT_EQ(ledger.get_binding(kWww), Binding::initial());
}

TEST_F(LedgerFixture, SubAssetErrors) {
    ledger.create_root_asset(kXxx, alice.address(), alice);
    mine();
    EXPECT_EQ(error_of([&] { ledger.create_sub_asset(kXxx, "WWW", bob.address(), bob); }), Errc::NotOwner);
    EXPECT_EQ(error_of([&] { ledger.create_sub_asset(kXxx, std::string(31, 'A'), alice.address(), alice); }),
              Errc::ValidationFailure);
    EXPECT_EQ(error_of([&] { ledger.create_sub_asset(AssetPath::parse("NOPE"), "WWW", alice.address(), alice); }),
              Errc::UnknownAsset);
    ledger.create_sub_asset(kXxx, "WWW", alice.address(), alice);
    EXPECT_EQ(error_of([&] { ledger.create_sub_asset(kXxx, "WWW", alice.address(), alice); }), Errc::DuplicateAsset);
}

TEST_F(LedgerFixture, RootValidation) {
    EXPECT_EQ(error_of([&] { ledger.create_root_asset(AssetPath{std::string(33, 'A'), {}}, alice.address(), alice); }),
              Errc::ValidationFailure);
    EXPECT_EQ(error_of([&] { ledger.create_root_asset(kWww, alice.address(), alice); }), Errc::ValidationFailure);
}

TEST_F(LedgerFixture, SetBindingAndDeactivate) {
    setup_www();
    const auto cid = compute_cid(R"({"Type":"A","Address":"1.2.3.4"})");
    ledger.set_binding(kWww, Binding::active(cid), alice);
    EXPECT_EQ(ledger.get_binding(kWww), Binding::initial());
    mine();
    EXPECT_EQ(ledger.get_binding(kWww), Binding::active(cid));
    ledger.set_binding(kWww, Binding::deactivated(), alice);
    mine();
    EXPECT_EQ(ledger.get_binding(kWww), Binding::deactivated());
    EXPECT_EQ(ledger.get_binding(kWww).ledger_text(), kDeactivatedSentinel);
}

TEST_F(LedgerFixture, CannotRebindToInitial) {
    setup_www();
    EXPECT_EQ(error_of([&] { ledger.set_binding(kWww, Binding::initial(), alice); }), Errc::InvalidCid);
}

TEST_F(LedgerFixture, NonOwnerSetBindingLeavesStateUnchanged) {
    setup_www();
    const auto hash = ledger.state_hash();
    const auto pending = ledger.get_pending_asset(kWww);
    EXPECT_EQ(error_of([&] { ledger.set_binding(kWww, Binding::deactivated(), bob); }), Errc::NotOwner);
    EXPECT_EQ(ledger.mempool_size(), 0u);
    EXPECT_EQ(ledger.state_hash(), hash);
    EXPECT_EQ(ledger.get_pending_asset(kWww), pending);
    EXPECT_EQ(ledger.build_tx(TransferTx{kWww, bob.address()}, bob).nonce, 0u);
    mine();
    EXPECT_EQ(ledger.get_binding(kWww), Binding::initial());
    EXPECT_EQ(ledger.balance(bob.address()), Amount::coins(1000));
}

TEST_F(LedgerFixture, TransferMovesControl) {
    setup_www();
    ledger.transfer_ownership(kWww, bob.address(), alice);
    mine();
    EXPECT_EQ(ledger.get_asset(kWww)->owner, bob.address());
    EXPECT_EQ(error_of([&] { ledger.set_binding(kWww, Binding::deactivated(), alice); }), Errc::NotOwner);
    EXPECT_NO_THROW(ledger.set_binding(kWww, Binding::deactivated(), bob));
}

TEST_F(LedgerFixture, TransferToSelfIsAFeeFreeConfirmedTx) {
    setup_www();
    const auto before = ledger.balance(alice.address());
    const auto txid = ledger.transfer_ownership(kWww, alice.address(), alice);
    const auto block = mine();
    ASSERT_EQ(block.txs.size(), 1u);
    EXPECT_EQ(block.txs[0].txid(), txid);
    EXPECT_EQ(ledger.get_asset(kWww)->owner, alice.address());
    EXPECT_EQ(ledger.balance(alice.address()), before);
}

TEST_F(LedgerFixture, ChainOfTransfersEndsAtFinalOwner) {
    setup_www();
    ledger.transfer_ownership(kWww, bob.address(), alice);
    ledger.transfer_ownership(kWww, carol.address(), bob);
    mine();
    EXPECT_EQ(ledger.get_asset(kWww)->owner, carol.address());
}

TEST_F(LedgerFixture, InsufficientFunds) {
    const auto poor = test_key(9);
    Ledger small(LedgerParams{}, Genesis{{{poor.address(), Amount{5'000'000}}}, 0});
    EXPECT_EQ(error_of([&] { small.create_root_asset(kXxx, poor.address(), poor); }), Errc::InsufficientFunds);
}

TEST_F(LedgerFixture, NonceAndSignatureChecks) {
    const auto tx = ledger.build_tx(CreateRootTx{kXxx, alice.address()}, alice);
    EXPECT_EQ(tx.nonce, 0u);
    auto forged = tx;
    forged.payload = CreateRootTx{AssetPath::parse("YYY"), alice.address()};
    EXPECT_EQ(error_of([&] { ledger.submit(forged); }), Errc::BadSignature);
    ledger.submit(tx);
    EXPECT_EQ(error_of([&] { ledger.submit(tx); }), Errc::BadNonce);
    EXPECT_EQ(ledger.build_tx(CreateRootTx{kXxx, alice.address()}, alice).nonce, 1u);
    auto wrong_fee = Tx::make(CreateRootTx{AssetPath::parse("YYY"), alice.address()}, alice, 1, Amount{1});
    EXPECT_EQ(error_of([&] { ledger.submit(wrong_fee); }), Errc::ValidationFailure);
}

TEST_F(LedgerFixture, SmallMempoolFitsOneBlock) {
    ledger.create_root_asset(kXxx, alice.address(), alice);
    ledger.create_root_asset(AssetPath::parse("YYY"), bob.address(), bob);
    ledger.create_root_asset(AssetPath::parse("ZZZ"), carol.address(), carol);
    const auto block = mine();
    EXPECT_EQ(block.txs.size(), 3u);
    EXPECT_EQ(block.height, 1u);
    EXPECT_EQ(ledger.mempool_size(), 0u);
    const auto next = mine();
    EXPECT_EQ(next.prev_hash, block.hash());
    EXPECT_TRUE(next.txs.empty());
}

TEST(LedgerPacking, FullBlockHolds7681CalibratedTxs) {
    const auto alice = test_key(1);
    Ledger ledger(LedgerParams{}, genesis_for({&alice}, 10'000.0));
    ledger.create_root_asset(kXxx, alice.address(), alice);
    ledger.create_sub_asset(kXxx, "WWW", alice.address(), alice);
    ledger.produce_block(1);
    const auto cid = compute_cid("calibrated");
    for (int i = 0; i < 7700; ++i) {
        const auto tx = ledger.build_tx(SetBindingTx{kWww, Binding::active(cid)}, alice);
        ASSERT_EQ(tx.serialized_size(), 546u);
        ledger.submit(tx);
    }
    const auto block = ledger.produce_block(2);
    EXPECT_EQ(block.txs.size(), 7681u);
    EXPECT_EQ(block.total_bytes, 7681u * 546u);
    EXPECT_LE(block.total_bytes, 4u * 1024 * 1024);
    EXPECT_EQ(ledger.mempool_size(), 19u);
    EXPECT_EQ(ledger.produce_block(3).txs.size(), 19u);
}

TEST(LedgerProperty, ConservationOverRandomTranscript) {
    std::vector<KeyPair> keys;
    for (std::uint8_t i = 1; i <= 5; ++i) keys.push_back(test_key(i));
    Genesis g;
    for (const auto& k : keys) g.balances[k.address()] = Amount::coins(20);
    Ledger ledger(LedgerParams{}, g);
    const auto supply = ledger.genesis_supply();

    std::mt19937 rng(5);
    std::uniform_int_distribution<std::size_t> who(0, keys.size() - 1);
    std::uniform_int_distribution<int> op(0, 3), root(0, 5), seg(0, 5), owner_bias(0, 9);
    int accepted = 0;
    for (int i = 0; i < 400; ++i) {
        const AssetPath r{std::string(1, static_cast<char>('A' + root(rng))), {}};
        const auto sub = r.child(std::string(1, static_cast<char>('P' + seg(rng))));
        const int kind = op(rng);
        const KeyPair* signer = &keys[who(rng)];
        if (const auto rec = ledger.get_pending_asset(kind == 1 ? r : sub); rec && owner_bias(rng) < 7) {
            for (const auto& k : keys) {
                if (k.address() == rec->owner) signer = &k;
            }
        }
        try {
            switch (kind) {
            case 0: ledger.create_root_asset(r, signer->address(), *signer); break;
            case 1: ledger.create_sub_asset(r, sub.subpath[0], keys[who(rng)].address(), *signer); break;
            case 2: ledger.set_binding(sub, Binding::active(compute_cid(std::to_string(i))), *signer); break;
            default: ledger.transfer_ownership(sub, keys[who(rng)].address(), *signer); break;
            }
            ++accepted;
        } catch (const Error&) {
        }
        if (i % 7 == 0) {
            ledger.produce_block(i);
            const auto s = ledger.snapshot();
            ASSERT_EQ(s.total_balances() + s.burned(), supply);
        }
    }
    ledger.produce_block(1000);
    const auto s = ledger.snapshot();
    EXPECT_EQ(s.total_balances() + s.burned(), supply);
    EXPECT_GT(accepted, 100);
}

TEST(PersistedLedger, ReopenReplaysToSameState) {
    TempDir dir;
    const auto alice = test_key(1);
    std::string hash;
    {
        auto ledger = Ledger::open(dir.path(), LedgerParams{}, genesis_for({&alice}));
        ledger->create_root_asset(kXxx, alice.address(), alice);
        ledger->create_sub_asset(kXxx, "WWW", alice.address(), alice);
        ledger->produce_block(1);
        ledger->set_binding(kWww, Binding::active(compute_cid("a")), alice);
        ledger->produce_block(2);
        ledger->transfer_ownership(kWww, test_key(2).address(), alice);
        hash = ledger->state_hash();
    }
    auto reopened = Ledger::open(dir.path(), LedgerParams{}, Genesis{});
    EXPECT_EQ(reopened->state_hash(), hash);
    EXPECT_EQ(reopened->height(), 2u);
    EXPECT_EQ(reopened->mempool_size(), 1u);
    EXPECT_EQ(reopened->genesis(), genesis_for({&alice}));
    reopened->produce_block(3);
    EXPECT_EQ(reopened->get_asset(kWww)->owner, test_key(2).address());
}

TEST(PersistedLedger, TwoHandlesShareOneDirectory) {
    TempDir dir;
    const auto alice = test_key(1);
    auto writer = Ledger::open(dir.path(), LedgerParams{}, genesis_for({&alice}));
    auto miner = Ledger::open(dir.path(), LedgerParams{}, genesis_for({&alice}));
    writer->create_root_asset(kXxx, alice.address(), alice);
    std::vector<std::uint64_t> seen;
    writer->add_block_listener([&](const Block& b) { seen.push_back(b.height); });
    EXPECT_EQ(miner->produce_block(1).txs.size(), 1u);
    writer->sync();
    EXPECT_TRUE(writer->get_asset(kXxx));
    EXPECT_EQ(seen, std::vector<std::uint64_t>{1});
    EXPECT_EQ(writer->state_hash(), miner->state_hash());
    // Nonce continues from the other handle's confirmed view.
    EXPECT_NO_THROW(writer->create_sub_asset(kXxx, "WWW", alice.address(), alice));
}

TEST(PersistedLedger, TamperedSnapshotIsDetected) {
    TempDir dir;
    const auto alice = test_key(1);
    {
        auto ledger = Ledger::open(dir.path(), LedgerParams{}, genesis_for({&alice}));
        ledger->create_root_asset(kXxx, alice.address(), alice);
        ledger->produce_block(1);
    }
    const auto snap_path = dir.path() / "snapshot.json";
    std::ifstream in(snap_path);
    auto doc = nlohmann::json::parse(in);
    in.close();
    auto hash = doc.at("state_hash").get<std::string>();
    hash[0] = hash[0] == 'a' ? 'b' : 'a';
    doc["state_hash"] = hash;
    std::ofstream(snap_path, std::ios::trunc) << doc.dump();
    EXPECT_EQ(error_of([&] { Ledger::open(dir.path(), LedgerParams{}, Genesis{}); }), Errc::CorruptChain);
}

TEST(PersistedLedger, TruncatedBlockLineIsIgnoredUntilComplete) {
    TempDir dir;
    const auto alice = test_key(1);
    auto ledger = Ledger::open(dir.path(), LedgerParams{}, genesis_for({&alice}));
    ledger->create_root_asset(kXxx, alice.address(), alice);
    ledger->produce_block(1);
    std::ofstream(dir.path() / "blocks.log", std::ios::app) << "{\"height\":2";
    auto other = Ledger::open(dir.path(), LedgerParams{}, Genesis{});
    EXPECT_EQ(other->height(), 1u);
}

TEST(BlockScheduler, ProducesBlocksOnlyWhenThereIsWork) {
    const auto alice = test_key(1);
    Ledger ledger(LedgerParams{}, genesis_for({&alice}));
    BlockScheduler scheduler(ledger, std::chrono::milliseconds(20));
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    EXPECT_EQ(ledger.height(), 0u);
    ledger.create_root_asset(kXxx, alice.address(), alice);
    for (int i = 0; i < 100 && !ledger.get_asset(kXxx); ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    scheduler.stop();
    EXPECT_TRUE(ledger.get_asset(kXxx));
    EXPECT_EQ(ledger.height(), 1u);
}
