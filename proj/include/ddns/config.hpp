#pragma once

#include "ddns/content_store.hpp"
#include "ddns/crypto.hpp"
#include "ddns/ledger_types.hpp"
#include "ddns/resolver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace ddns {

struct ServerConfig {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 5553;
    std::size_t workers = 4;
};

/// Everything a `ddns` command needs. Every field has a default, so an
/// empty JSON object is a valid config file.
struct Config {
    std::filesystem::path data_dir = "ddns-data";
    std::filesystem::path key_file;
    LedgerParams ledger;
    Genesis genesis;
    std::size_t max_payload_bytes = kDefaultMaxPayloadBytes;
    std::optional<PinningClientConfig> pinning;
    ResolverConfig resolver;
    ServerConfig server;

    std::filesystem::path ledger_dir() const { return data_dir / "ledger"; }
    std::filesystem::path store_dir() const { return data_dir / "store"; }
    std::filesystem::path stats_file() const { return data_dir / "stats.json"; }
};

// Relative paths inside the file are resolved against its directory.
// Throws Error(ConfigError).
Config load_config(const std::filesystem::path& path);
Config parse_config(std::string_view json_text, const std::filesystem::path& base_dir = ".");

// Key file: {"seed": "<64 hex>", "address": "..."}.
KeyPair load_key_file(const std::filesystem::path& path);
void save_key_file(const std::filesystem::path& path, const KeyPair& key);

} // namespace ddns
