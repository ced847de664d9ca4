#pragma once

#include "ddns/content_store.hpp"
#include "ddns/domain_model.hpp"
#include "ddns/ledger.hpp"
#include "ddns/record_file.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <list>
#include <mutex>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace ddns {

enum class RecordType : std::uint16_t {
    A = 1,
    NS = 2,
    CNAME = 5,
    PTR = 12,
    MX = 15,
    TXT = 16,
    AAAA = 28,
    TLSA = 52,
    ANY = 255,
};

std::string record_type_to_string(RecordType type);
// Accepts mnemonics ("A", "mx") or "TYPE<n>". Throws Error(ValidationFailure).
RecordType record_type_from_string(std::string_view text);

enum class Rcode : std::uint8_t { NoError = 0, ServFail = 2, NxDomain = 3 };

std::string_view to_string(Rcode rcode);

struct Ipv4Data {
    std::array<std::uint8_t, 4> octets{};
    bool operator==(const Ipv4Data&) const = default;
};
struct Ipv6Data {
    std::array<std::uint8_t, 16> octets{};
    bool operator==(const Ipv6Data&) const = default;
};
struct NameData { // CNAME, NS, PTR
    std::string name;
    bool operator==(const NameData&) const = default;
};
struct MxData {
    std::uint16_t preference = 0;
    std::string exchange;
    bool operator==(const MxData&) const = default;
};
struct TlsaData {
    std::uint8_t usage = 0;
    std::uint8_t selector = 0;
    std::uint8_t matching_type = 0;
    Bytes data;
    bool operator==(const TlsaData&) const = default;
};
struct RawData {
    Bytes bytes;
    bool operator==(const RawData&) const = default;
};

using Rdata = std::variant<Ipv4Data, Ipv6Data, NameData, MxData, TlsaData, RawData>;

struct Answer {
    std::string name;
    RecordType type = RecordType::A;
    std::uint32_t ttl = 0;
    Rdata data;

    bool operator==(const Answer&) const = default;
};

// "www.xxx.ddns. 60 IN A 1.2.3.4"
std::string format_answer(const Answer& answer);

struct ResolutionResult {
    Rcode rcode = Rcode::NoError;
    std::vector<Answer> answers;
    std::vector<std::string> cname_chain;

    bool operator==(const ResolutionResult&) const = default;
};

/// Where traditional (non-DDNS) names are sent.
class Upstream {
public:
    virtual ~Upstream() = default;
    // Throws Error(NetworkFailure) when the upstream cannot be reached.
    virtual ResolutionResult forward(const DomainName& name, RecordType qtype) = 0;
};

struct ResolverConfig {
    std::string root_suffix{kDefaultRootSuffix};
    std::string upstream = "1.1.1.1:53";
    std::size_t cache_capacity = 10'000;
    std::uint32_t negative_ttl = 30;
    std::uint32_t cname_chase_limit = 8;
    // TTL for records that carry none of their own.
    std::uint32_t record_default_ttl = kDefaultRecordTtl;
};

enum class NameClass { Ddns, Traditional };

NameClass classify(const DomainName& name, const ResolverConfig& config);

struct ResolverStats {
    std::uint64_t queries = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    std::uint64_t ledger_reads = 0;
    std::uint64_t store_fetches = 0;
    std::uint64_t upstream_forwards = 0;
};

/// Caching resolver. DDNS names go ledger binding -> record file -> answers;
/// everything else is forwarded. Resolution never throws: failures become
/// rcodes.
class Resolver {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    Resolver(ResolverConfig config, const BindingLookup& ledger, const ContentFetcher& store,
             Upstream* upstream, Clock clock = {});

    ResolutionResult resolve(const DomainName& name, RecordType qtype);
    // Uncached DDNS path; exposed for tests and the resolve command.
    ResolutionResult resolve_ddns(const DomainName& name, RecordType qtype);

    // Drops every cached entry for `name`, and any entry whose CNAME chain
    // passes through it.
    void invalidate(const DomainName& name);
    void clear_cache();
    std::size_t cache_size() const;

    ResolverStats stats() const;
    const ResolverConfig& config() const noexcept { return config_; }

private:
    struct CacheEntry {
        std::string key;
        std::string name;
        ResolutionResult value;
        std::chrono::steady_clock::time_point inserted_at;
        std::chrono::seconds ttl;
    };

    ResolutionResult forward(const DomainName& name, RecordType qtype);
    std::optional<ResolutionResult> cache_lookup(const std::string& key);
    void cache_store(const std::string& key, const DomainName& name, const ResolutionResult& result);

    ResolverConfig config_;
    const BindingLookup& ledger_;
    const ContentFetcher& store_;
    Upstream* upstream_;
    Clock clock_;

    mutable std::mutex cache_mutex_;
    std::list<CacheEntry> lru_; // most recent first
    std::unordered_map<std::string, std::list<CacheEntry>::iterator> index_;

    std::atomic<std::uint64_t> queries_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
    std::atomic<std::uint64_t> cache_misses_{0};
    std::atomic<std::uint64_t> ledger_reads_{0};
    std::atomic<std::uint64_t> store_fetches_{0};
    std::atomic<std::uint64_t> upstream_forwards_{0};
};

} // namespace ddns
