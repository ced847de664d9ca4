#include "ddns/config.hpp"

#include "ddns/errors.hpp"

#include <json.hpp>

#include <sys/stat.h>

#include <fstream>
#include <iterator>

namespace ddns {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

Amount amount_from(const json& j) {
    if (j.is_string()) {
        return Amount::parse(j.get<std::string>());
    }
    if (j.is_number()) {
        return Amount::coins(j.get<double>());
    }
    throw Error(Errc::ConfigError, "amount must be a string or number");
}

template <class T>
void read_opt(const json& obj, const char* key, T& out) {
    if (const auto it = obj.find(key); it != obj.end() && !it->is_null()) {
        out = it->get<T>();
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace

Config parse_config(std::string_view json_text, const fs::path& base_dir) {
    Config cfg;
    try {
        const auto doc = json::parse(json_text);
        if (!doc.is_object()) {
            throw Error(Errc::ConfigError, "config must be a JSON object");
        }
        if (doc.contains("data_dir")) {
            cfg.data_dir = resolve(base_dir, doc["data_dir"].get<std::string>());
        } else {
            cfg.data_dir = base_dir / cfg.data_dir;
        }
        if (doc.contains("key_file")) {
            cfg.key_file = resolve(base_dir, doc["key_file"].get<std::string>());
        }
        if (const auto it = doc.find("ledger"); it != doc.end()) {
            read_opt(*it, "block_size_bytes", cfg.ledger.block_size_bytes);
            read_opt(*it, "block_interval_s", cfg.ledger.block_interval_s);
            read_opt(*it, "avg_tx_size_bytes", cfg.ledger.avg_tx_size_bytes);
            if (it->contains("creation_fee")) cfg.ledger.creation_fee = amount_from((*it)["creation_fee"]);
            if (it->contains("modification_fee")) cfg.ledger.modification_fee = amount_from((*it)["modification_fee"]);
        }
        if (const auto it = doc.find("genesis"); it != doc.end()) {
            read_opt(*it, "timestamp", cfg.genesis.timestamp);
            if (const auto b = it->find("balances"); b != it->end()) {
                for (const auto& [addr, amount] : b->items()) {
                    cfg.genesis.balances[Address::parse(addr)] = amount_from(amount);
                }
            }
        }
        if (const auto it = doc.find("store"); it != doc.end()) {
            read_opt(*it, "max_payload_bytes", cfg.max_payload_bytes);
        }
        if (const auto it = doc.find("pinning"); it != doc.end() && !it->is_null()) {
            PinningClientConfig p;
            p.endpoint_url = it->at("endpoint_url").get<std::string>();
            read_opt(*it, "api_key", p.api_key);
            read_opt(*it, "max_files", p.max_files);
            std::int64_t timeout_ms = p.timeout.count();
            read_opt(*it, "timeout_ms", timeout_ms);
            p.timeout = std::chrono::milliseconds(timeout_ms);
            cfg.pinning = std::move(p);
        }
        if (const auto it = doc.find("resolver"); it != doc.end()) {
            read_opt(*it, "root_suffix", cfg.resolver.root_suffix);
            read_opt(*it, "upstream", cfg.resolver.upstream);
            read_opt(*it, "cache_capacity", cfg.resolver.cache_capacity);
            read_opt(*it, "negative_ttl", cfg.resolver.negative_ttl);
            read_opt(*it, "cname_chase_limit", cfg.resolver.cname_chase_limit);
            read_opt(*it, "record_default_ttl", cfg.resolver.record_default_ttl);
        }
        if (const auto it = doc.find("server"); it != doc.end()) {
            read_opt(*it, "bind_address", cfg.server.bind_address);
            read_opt(*it, "port", cfg.server.port);
            read_opt(*it, "workers", cfg.server.workers);
        }
    } catch (const json::exception& e) {
        throw Error(Errc::ConfigError, e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::ConfigError) throw;
        throw Error(Errc::ConfigError, e.what());
    }
    try {
        cfg.ledger.validate();
    } catch (const Error& e) {
        throw Error(Errc::ConfigError, e.what());
    }
    if (cfg.resolver.cname_chase_limit < 1) {
        throw Error(Errc::ConfigError, "resolver.cname_chase_limit must be at least 1");
    }
    return cfg;
}

Config load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::ConfigError, "cannot read config " + path.string());
    }
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_config(text, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

KeyPair load_key_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::ConfigError, "cannot read key file " + path.string());
    }
    try {
        const auto doc = json::parse(in);
        const auto bytes = from_hex(doc.at("seed").get<std::string>());
        if (bytes.size() != 32) {
            throw Error(Errc::ConfigError, "seed must be 32 bytes");
        }
        Seed seed{};
        std::copy(bytes.begin(), bytes.end(), seed.begin());
        return KeyPair::from_seed(seed);
    } catch (const json::exception& e) {
        throw Error(Errc::ConfigError, "bad key file: " + std::string(e.what()));
    } catch (const Error& e) {
        if (e.code() == Errc::ConfigError) throw;
        throw Error(Errc::ConfigError, "bad key file: " + std::string(e.what()));
    }
}

void save_key_file(const fs::path& path, const KeyPair& key) {
    const json doc{{"seed", to_hex(key.seed())}, {"address", key.address().text}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!(out << doc.dump(2) << '\n')) {
        throw Error(Errc::ConfigError, "cannot write key file " + path.string());
    }
    out.close();
    ::chmod(path.c_str(), 0600);
}

} // namespace ddns
