#include "ddns/config.hpp"
#include "ddns/content_store.hpp"
#include "ddns/dns_wire.hpp"
#include "ddns/errors.hpp"
#include "ddns/ledger.hpp"
#include "ddns/registrar.hpp"
#include "ddns/resolver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <ctime>
#include <fstream>
#include <iostream>
#include <iterator>
#include <mutex>
#include <optional>
#include <thread>

#include <unistd.h>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ddns;

namespace {

// Exit codes; kept in sync with the README.
enum Exit : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kConfig = 3,
    kInvalidInput = 4,
    kRecordDecode = 5,
    kUnauthorized = 6,
    kLedgerState = 7,
    kStorage = 8,
    kRemote = 9,
    kBind = 10,
};

int exit_code_for(Errc code) {
    switch (code) {
    case Errc::ConfigError: return kConfig;
    case Errc::EmptyLabel:
    case Errc::IllegalCharacter:
    case Errc::TooLong:
    case Errc::NotDdnsName:
    case Errc::RootTooLong:
    case Errc::SubpathTooLong:
    case Errc::ValidationFailure:
    case Errc::InvalidCid: return kInvalidInput;
    case Errc::MalformedJson:
    case Errc::MissingTypeKey:
    case Errc::BadAddressSyntax: return kRecordDecode;
    case Errc::NotOwner:
    case Errc::BadSignature: return kUnauthorized;
    case Errc::DuplicateAsset:
    case Errc::UnknownAsset:
    case Errc::InsufficientFunds:
    case Errc::BadNonce: return kLedgerState;
    case Errc::EmptyPayload:
    case Errc::PayloadTooLarge:
    case Errc::StorageFailure:
    case Errc::NotFound:
    case Errc::IntegrityMismatch:
    case Errc::SentinelCid:
    case Errc::CorruptChain: return kStorage;
    case Errc::AuthFailure:
    case Errc::QuotaExceeded:
    case Errc::RemoteMismatch:
    case Errc::NetworkFailure:
    case Errc::Truncated:
    case Errc::FormErr:
    case Errc::UnsupportedOpcode: return kRemote;
    case Errc::BindFailure: return kBind;
    }
    return kInternal;
}

struct GlobalOptions {
    std::string config_path;
    std::string data_dir;
    std::string key_file;
    std::string root_suffix;
    std::string upstream;
    std::optional<std::uint16_t> port;
    std::string request_id = "ddns-cli";
};

std::int64_t unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string utc_timestamp() {
    const auto t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_atomically(const fs::path& path, const std::string& text) {
    const auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out.flush()) {
            throw Error(Errc::StorageFailure, "cannot write " + tmp);
        }
    }
    fs::rename(tmp, path);
}

std::string read_input(const std::string& path) {
    if (path == "-") {
        return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::ValidationFailure, "cannot read " + path);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Config plus the objects most commands need, opened lazily.
class Context {
public:
    explicit Context(const GlobalOptions& opts) : opts_(opts) {
        if (!opts.config_path.empty()) {
            config_ = load_config(opts.config_path);
        } else {
            config_ = parse_config("{}", fs::current_path());
        }
        if (!opts.data_dir.empty()) config_.data_dir = opts.data_dir;
        if (!opts.key_file.empty()) config_.key_file = opts.key_file;
        if (config_.key_file.empty()) config_.key_file = config_.data_dir / "key.json";
        if (!opts.root_suffix.empty()) config_.resolver.root_suffix = opts.root_suffix;
        if (!opts.upstream.empty()) config_.resolver.upstream = opts.upstream;
        if (opts.port) config_.server.port = *opts.port;
    }

    Config& config() { return config_; }
    const std::string& id() const { return opts_.request_id; }

    KeyPair key() { return load_key_file(config_.key_file); }

    Ledger& ledger() {
        if (!ledger_) {
            ledger_ = Ledger::open(config_.ledger_dir(), config_.ledger, config_.genesis);
        }
        return *ledger_;
    }

    ContentStore& store() {
        if (!store_) {
            store_ = std::make_unique<ContentStore>(config_.store_dir(), config_.max_payload_bytes);
        }
        return *store_;
    }

    PinningClient* pinning() {
        if (config_.pinning && !pinning_) {
            pinning_ = std::make_unique<PinningClient>(*config_.pinning);
        }
        return pinning_.get();
    }

    std::unique_ptr<RegistrarSession> session() {
        return std::make_unique<RegistrarSession>(key(), ledger(), store(), config_.resolver.root_suffix,
                                                  pinning());
    }

private:
    GlobalOptions opts_;
    Config config_;
    std::unique_ptr<Ledger> ledger_;
    std::unique_ptr<ContentStore> store_;
    std::unique_ptr<PinningClient> pinning_;
};

json envelope(const std::vector<std::string>& result, const std::string& id) {
    return json{{"result", result}, {"error", nullptr}, {"id", id}};
}

void print(const json& j) {
    std::cout << j.dump() << std::endl;
}

// Submits through `op`, optionally confirms with a block, prints the envelope.
int mutate(Context& ctx, bool mine, const std::function<std::string(RegistrarSession&)>& op) {
    auto session = ctx.session();
    const auto txid = op(*session);
    auto out = envelope({txid}, ctx.id());
    if (mine) {
        const auto block = ctx.ledger().produce_block(unix_now());
        out["block"] = {{"height", block.height}, {"hash", block.hash()}, {"txs", block.txs.size()}};
    }
    print(out);
    return kOk;
}

json answers_json(const std::vector<Answer>& answers) {
    json arr = json::array();
    for (const auto& a : answers) {
        arr.push_back(format_answer(a));
    }
    return arr;
}

void print_dig(std::string_view status, std::uint16_t id, const std::vector<Answer>& answers,
               std::string_view server) {
    std::cout << ";; ->>HEADER<<- opcode: QUERY, status: " << status << ", id: " << id << "\n";
    std::cout << ";; ANSWER: " << answers.size() << "\n";
    if (!answers.empty()) {
        std::cout << "\n;; ANSWER SECTION:\n";
        for (const auto& a : answers) {
            std::cout << format_answer(a) << "\n";
        }
    }
    std::cout << "\n;; SERVER: " << server << "\n";
    std::cout.flush();
}

std::string_view wire_status(std::uint8_t rcode) {
    switch (rcode) {
    case 0: return "NOERROR";
    case 1: return "FORMERR";
    case 2: return "SERVFAIL";
    case 3: return "NXDOMAIN";
    case 4: return "NOTIMP";
    case 5: return "REFUSED";
    default: return "RCODE?";
    }
}

struct ResolveOptions {
    std::string name;
    std::string type = "A";
    std::string via_server;
    bool as_json = false;
};

int cmd_resolve(Context& ctx, const ResolveOptions& o) {
    const auto name = DomainName::parse(o.name);
    const auto qtype = record_type_from_string(o.type);
    if (!o.via_server.empty()) {
        const auto ep = wire::Endpoint::parse(o.via_server, 53);
        const auto r = wire::query(ep, name, qtype);
        if (o.as_json) {
            print(json{{"status", wire_status(r.rcode())}, {"answers", answers_json(r.answers)}, {"server", ep.to_string()}});
        } else {
            print_dig(wire_status(r.rcode()), r.id, r.answers, ep.to_string());
        }
        return kOk;
    }
    auto& cfg = ctx.config();
    wire::UdpUpstream upstream(wire::Endpoint::parse(cfg.resolver.upstream));
    Resolver resolver(cfg.resolver, ctx.ledger(), ctx.store(), &upstream);
    const auto r = resolver.resolve(name, qtype);
    if (o.as_json) {
        print(json{{"status", to_string(r.rcode)}, {"answers", answers_json(r.answers)}, {"server", "in-process"}});
    } else {
        print_dig(to_string(r.rcode), 0, r.answers, "in-process");
    }
    return kOk;
}

struct ServeOptions {
    bool no_mine = false;
    std::int64_t block_interval_ms = 0;
    std::size_t workers = 0;
};

int cmd_serve(Context& ctx, const ServeOptions& o) {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    // Block before any thread starts so only this thread sees the signals.
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto& cfg = ctx.config();
    auto& ledger = ctx.ledger();
    auto& store = ctx.store();
    wire::UdpUpstream upstream(wire::Endpoint::parse(cfg.resolver.upstream));
    Resolver resolver(cfg.resolver, ledger, store, &upstream);
    invalidate_on_blocks(ledger, resolver);

    std::mutex log_mutex;
    wire::ServerOptions server_opts;
    server_opts.bind_address = cfg.server.bind_address;
    server_opts.port = cfg.server.port;
    server_opts.workers = o.workers ? o.workers : cfg.server.workers;
    server_opts.on_query = [&log_mutex](const wire::QueryLog& q) {
        const auto rcode = q.rcode ? std::string(to_string(*q.rcode)) : std::string("FORMERR");
        std::lock_guard lock(log_mutex);
        std::cerr << utc_timestamp() << " " << q.client << " " << (q.qname.empty() ? "-" : q.qname) << " "
                  << record_type_to_string(q.qtype) << " " << rcode << " answers=" << q.answers << " "
                  << q.elapsed.count() << "us" << std::endl;
    };
    wire::UdpServer server(server_opts, resolver);
    server.start();

    std::optional<BlockScheduler> scheduler;
    const auto interval = o.block_interval_ms > 0 ? std::chrono::milliseconds(o.block_interval_ms)
                                                  : std::chrono::milliseconds(cfg.ledger.block_interval_s * 1000);
    if (!o.no_mine) {
        scheduler.emplace(ledger, interval);
    }
    {
        std::lock_guard lock(log_mutex);
        std::cerr << utc_timestamp() << " listening on " << cfg.server.bind_address << ":" << server.port()
                  << " upstream " << cfg.resolver.upstream << " height " << ledger.height() << std::endl;
    }

    const auto write_stats = [&] {
        const auto s = resolver.stats();
        const json doc{{"pid", ::getpid()},
                       {"port", server.port()},
                       {"queries", s.queries},
                       {"cache_hits", s.cache_hits},
                       {"cache_misses", s.cache_misses},
                       {"ledger_reads", s.ledger_reads},
                       {"store_fetches", s.store_fetches},
                       {"upstream_forwards", s.upstream_forwards},
                       {"cache_entries", resolver.cache_size()},
                       {"datagrams", server.datagrams()},
                       {"height", ledger.height()},
                       {"mempool", ledger.mempool_size()},
                       {"updated_at", utc_timestamp()}};
        write_atomically(cfg.stats_file(), doc.dump(2) + "\n");
    };

    int received = 0;
    while (received <= 0) {
        const timespec timeout{0, 200'000'000};
        siginfo_t info;
        received = sigtimedwait(&signals, &info, &timeout);
        try {
            ledger.sync();
            write_stats();
        } catch (const std::exception& e) {
            std::lock_guard lock(log_mutex);
            std::cerr << utc_timestamp() << " " << e.what() << std::endl;
        }
    }
    {
        std::lock_guard lock(log_mutex);
        std::cerr << utc_timestamp() << " shutting down on signal " << received << std::endl;
    }
    if (scheduler) {
        scheduler->stop();
    }
    server.stop();
    write_stats();
    return kOk;
}

struct BenchOptions {
    std::uint64_t blocks = 3;
};

int cmd_bench(Context& ctx, const BenchOptions& o) {
    const auto params = ctx.config().ledger;
    const auto capacity = capacity_tps(params);
    const auto key = KeyPair::generate();
    const auto path = AssetPath::parse("XXX/WWW");
    const auto cid = compute_cid(R"({"Type":"A","Address":"1.2.3.4"})");

    const auto flood = o.blocks * capacity.txs_per_block + capacity.txs_per_block / 2 + 1;
    Genesis genesis;
    genesis.balances[key.address()] =
        Amount{static_cast<std::int64_t>(flood + 2) * std::max(params.creation_fee.units, params.modification_fee.units)};
    Ledger ledger(params, genesis);
    ledger.create_root_asset(AssetPath::parse("XXX"), key.address(), key);
    ledger.create_sub_asset(AssetPath::parse("XXX"), "WWW", key.address(), key);
    std::int64_t now = 0;
    ledger.produce_block(now);

    const auto started = std::chrono::steady_clock::now();
    std::size_t tx_size = 0;
    for (std::uint64_t i = 0; i < flood; ++i) {
        const auto tx = ledger.build_tx(SetBindingTx{path, Binding::active(cid)}, key);
        tx_size = tx.serialized_size();
        ledger.submit(tx);
    }
    json per_block = json::array();
    std::uint64_t packed = 0;
    for (std::uint64_t b = 0; b < o.blocks; ++b) {
        now += params.block_interval_s;
        const auto block = ledger.produce_block(now);
        per_block.push_back({{"height", block.height}, {"txs", block.txs.size()}, {"bytes", block.total_bytes}});
        packed += block.txs.size();
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const double simulated = static_cast<double>(o.blocks * static_cast<std::uint64_t>(params.block_interval_s));
    const auto measured_per_block = o.blocks ? packed / o.blocks : 0;

    json result{{"capacity_tps", capacity.tps_floor()},
                {"capacity_tps_exact", capacity.tps()},
                {"txs_per_block", capacity.txs_per_block},
                {"measured_txs_per_block", measured_per_block},
                {"measured_tps", simulated > 0 ? static_cast<double>(packed) / simulated : 0.0},
                {"tx_size_bytes", tx_size},
                {"block_size_bytes", params.block_size_bytes},
                {"block_interval_s", params.block_interval_s},
                {"blocks", per_block},
                {"submitted", flood},
                {"left_in_mempool", ledger.mempool_size()},
                {"wall_seconds", wall}};
    print(json{{"result", result}, {"error", nullptr}, {"id", ctx.id()}});
    std::cerr << "capacity " << capacity.tps_floor() << " tx/s (" << capacity.txs_per_block << " tx per "
              << params.block_interval_s << " s block); measured " << measured_per_block << " tx/block" << std::endl;
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized DNS: ledger-backed names, content-addressed records, DNS proxy"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config_path, "Config file (JSON)")->envname("DDNS_CONFIG");
    app.add_option("--data-dir", g.data_dir, "Data directory (overrides config)");
    app.add_option("--key-file", g.key_file, "Key file (default <data_dir>/key.json)");
    app.add_option("--root-suffix", g.root_suffix, "DDNS root suffix (default ddns)");
    app.add_option("--upstream", g.upstream, "Upstream DNS server host:port (default 1.1.1.1:53)");
    app.add_option("--port", g.port, "DNS server port (default 5553)");
    app.add_option("--id", g.request_id, "Request id echoed in the JSON envelope");

    bool force = false;
    auto* keygen = app.add_subcommand("keygen", "Create a signing key file");
    keygen->add_flag("--force", force, "Overwrite an existing key file");

    double fund = 0;
    auto* init = app.add_subcommand("init", "Create the ledger, optionally funding the key in genesis");
    init->add_option("--fund", fund, "Genesis balance (coins) for the key file's address");

    bool mine = false;
    std::string tld, sub, domain, file, owner, new_owner;
    auto* reg = app.add_subcommand("register-tld", "Create a top-level domain asset");
    reg->add_option("tld", tld, "Label, e.g. xxx")->required();
    auto* add = app.add_subcommand("add-subdomain", "Create a subdomain asset under an owned parent");
    add->add_option("tld", tld)->required();
    add->add_option("sub", sub, "Relative name, e.g. www or a.b")->required();
    add->add_option("--owner", owner, "Owner address (default: the key's address)");
    auto* set = app.add_subcommand("set-record", "Store a record file and bind the domain to it");
    set->add_option("domain", domain)->required();
    set->add_option("file", file, "Record JSON file, or - for stdin")->required();
    auto* disable = app.add_subcommand("disable", "Deactivate a domain");
    disable->add_option("domain", domain)->required();
    auto* transfer = app.add_subcommand("transfer", "Transfer a domain to another address");
    transfer->add_option("domain", domain)->required();
    transfer->add_option("address", new_owner)->required();
    for (auto* cmd : {reg, add, set, disable, transfer}) {
        cmd->add_flag("--mine", mine, "Produce a block right after submitting");
    }

    std::uint64_t mine_blocks = 1;
    auto* mine_cmd = app.add_subcommand("mine", "Produce blocks from the mempool");
    mine_cmd->add_option("--blocks", mine_blocks, "Number of blocks")->check(CLI::PositiveNumber);

    auto* show = app.add_subcommand("show", "Show a domain's confirmed asset record");
    show->add_option("domain", domain)->required();
    std::string address;
    auto* balance = app.add_subcommand("balance", "Show a confirmed balance");
    balance->add_option("address", address, "Address (default: the key's address)");

    ResolveOptions ro;
    auto* resolve = app.add_subcommand("resolve", "Resolve a name in-process or via a DNS server");
    resolve->add_option("name", ro.name)->required();
    resolve->add_option("type", ro.type, "Record type (default A)");
    resolve->add_option("--via-server", ro.via_server, "Query this server (host:port) over UDP");
    resolve->add_flag("--json", ro.as_json, "Print JSON instead of dig-style text");

    ServeOptions so;
    auto* serve = app.add_subcommand("serve", "Run the DNS proxy daemon");
    serve->add_flag("--no-mine", so.no_mine, "Do not produce blocks (another process mines)");
    serve->add_option("--block-interval-ms", so.block_interval_ms, "Override the block timer");
    serve->add_option("--workers", so.workers, "Concurrent query workers");

    auto* stats = app.add_subcommand("stats", "Print counters written by a running server");

    BenchOptions bo;
    auto* bench = app.add_subcommand("bench", "Flood calibrated transactions and report throughput");
    bench->add_option("--blocks", bo.blocks, "Blocks to simulate")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        Context ctx(g);
        auto& cfg = ctx.config();

        if (keygen->parsed()) {
            if (fs::exists(cfg.key_file) && !force) {
                throw Error(Errc::ConfigError, cfg.key_file.string() + " exists; use --force to replace it");
            }
            if (cfg.key_file.has_parent_path()) fs::create_directories(cfg.key_file.parent_path());
            const auto key = KeyPair::generate();
            save_key_file(cfg.key_file, key);
            auto out = envelope({key.address().text}, ctx.id());
            out["key_file"] = cfg.key_file.string();
            print(out);
            return kOk;
        }
        if (init->parsed()) {
            if (fs::exists(cfg.ledger_dir() / "blocks.log")) {
                throw Error(Errc::ConfigError, "ledger already exists in " + cfg.ledger_dir().string());
            }
            if (fund > 0) {
                cfg.genesis.balances[ctx.key().address()] = Amount::coins(fund);
            }
            if (cfg.genesis.timestamp == 0) cfg.genesis.timestamp = unix_now();
            auto& ledger = ctx.ledger();
            auto out = envelope({ledger.genesis().hash()}, ctx.id());
            out["supply"] = ledger.genesis_supply().to_string();
            print(out);
            return kOk;
        }
        if (reg->parsed()) {
            return mutate(ctx, mine, [&](RegistrarSession& s) { return s.register_tld(tld); });
        }
        if (add->parsed()) {
            return mutate(ctx, mine, [&](RegistrarSession& s) {
                return s.add_subdomain(tld, sub, owner.empty() ? s.owner_address() : Address::parse(owner));
            });
        }
        if (set->parsed()) {
            const auto records = decode_record_file(read_input(file), cfg.resolver.record_default_ttl);
            auto session = ctx.session();
            const auto result = session->set_record(DomainName::parse(domain), records);
            auto out = envelope({result.txid}, ctx.id());
            out["cid"] = result.cid.str();
            if (mine) {
                const auto block = ctx.ledger().produce_block(unix_now());
                out["block"] = {{"height", block.height}, {"hash", block.hash()}, {"txs", block.txs.size()}};
            }
            print(out);
            return kOk;
        }
        if (disable->parsed()) {
            return mutate(ctx, mine, [&](RegistrarSession& s) { return s.disable_subdomain(DomainName::parse(domain)); });
        }
        if (transfer->parsed()) {
            return mutate(ctx, mine,
                          [&](RegistrarSession& s) { return s.transfer(DomainName::parse(domain), Address::parse(new_owner)); });
        }
        if (mine_cmd->parsed()) {
            std::vector<std::string> hashes;
            json blocks = json::array();
            for (std::uint64_t i = 0; i < mine_blocks; ++i) {
                const auto block = ctx.ledger().produce_block(unix_now());
                hashes.push_back(block.hash());
                blocks.push_back({{"height", block.height}, {"txs", block.txs.size()}, {"bytes", block.total_bytes}});
            }
            auto out = envelope(hashes, ctx.id());
            out["blocks"] = blocks;
            print(out);
            return kOk;
        }
        if (show->parsed()) {
            const auto path = domain_to_asset_path(DomainName::parse(domain), cfg.resolver.root_suffix);
            const auto rec = ctx.ledger().get_asset(path);
            if (!rec) {
                throw Error(Errc::UnknownAsset, path.to_string());
            }
            print(json{{"asset", rec->path.to_string()},
                       {"owner", rec->owner.text},
                       {"binding", rec->binding.ledger_text()},
                       {"created_at_height", rec->created_at_height},
                       {"height", ctx.ledger().height()}});
            return kOk;
        }
        if (balance->parsed()) {
            const auto addr = address.empty() ? ctx.key().address() : Address::parse(address);
            print(json{{"address", addr.text}, {"balance", ctx.ledger().balance(addr).to_string()}});
            return kOk;
        }
        if (resolve->parsed()) {
            return cmd_resolve(ctx, ro);
        }
        if (serve->parsed()) {
            return cmd_serve(ctx, so);
        }
        if (stats->parsed()) {
            std::ifstream in(cfg.stats_file());
            if (!in) {
                throw Error(Errc::NotFound, "no stats at " + cfg.stats_file().string() + "; is `ddns serve` running?");
            }
            print(json::parse(in));
            return kOk;
        }
        if (bench->parsed()) {
            return cmd_bench(ctx, bo);
        }
    } catch (const Error& e) {
        const int rc = exit_code_for(e.code());
        print(json{{"result", nullptr}, {"error", {{"code", rc}, {"kind", to_string(e.code())}, {"message", e.what()}}}, {"id", g.request_id}});
        std::cerr << "ddns: " << e.what() << std::endl;
        return rc;
    } catch (const std::exception& e) {
        print(json{{"result", nullptr}, {"error", {{"code", kInternal}, {"kind", "Internal"}, {"message", e.what()}}}, {"id", g.request_id}});
        std::cerr << "ddns: " << e.what() << std::endl;
        return kInternal;
    }
    return kUsage;
}
