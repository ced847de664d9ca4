#include "ddns/resolver.hpp"

#include "ddns/errors.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cctype>
#include <limits>

namespace ddns {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

struct TypeName {
    RecordType type;
    std::string_view name;
};

constexpr TypeName kTypeNames[] = {
    {RecordType::A, "A"},     {RecordType::NS, "NS"},     {RecordType::CNAME, "CNAME"},
    {RecordType::PTR, "PTR"}, {RecordType::MX, "MX"},     {RecordType::TXT, "TXT"},
    {RecordType::AAAA, "AAAA"}, {RecordType::TLSA, "TLSA"}, {RecordType::ANY, "ANY"},
};

std::optional<Answer> to_answer(const DnsRecord& record, const std::string& owner,
                                std::uint32_t default_ttl) {
    return std::visit(
        overloaded{
            [&](const ARecord& r) -> std::optional<Answer> {
                return Answer{owner, RecordType::A, default_ttl, Ipv4Data{r.octets()}};
            },
            [&](const AaaaRecord& r) -> std::optional<Answer> {
                return Answer{owner, RecordType::AAAA, default_ttl, Ipv6Data{r.octets()}};
            },
            [&](const CnameRecord& r) -> std::optional<Answer> {
                return Answer{owner, RecordType::CNAME, default_ttl,
                              NameData{DomainName::parse(r.target).to_string()}};
            },
            [&](const MxRecord& r) -> std::optional<Answer> {
                return Answer{owner, RecordType::MX, r.ttl.value_or(default_ttl),
                              MxData{r.priority, DomainName::parse(r.mail_server).to_string()}};
            },
            [&](const TlsaRecord& r) -> std::optional<Answer> {
                return Answer{owner, RecordType::TLSA, default_ttl,
                              TlsaData{r.usage, r.selector, r.matching_type, from_hex(r.cert_data)}};
            },
            [&](const ExtensionRecord&) -> std::optional<Answer> { return std::nullopt; },
        },
        record);
}

std::string cache_key(const DomainName& name, RecordType qtype) {
    return name.to_string() + "|" + std::to_string(static_cast<std::uint16_t>(qtype));
}

ResolutionResult failure(Rcode rcode) {
    return ResolutionResult{rcode, {}, {}};
}

} // namespace

std::string record_type_to_string(RecordType type) {
    for (const auto& t : kTypeNames) {
        if (t.type == type) {
            return std::string(t.name);
        }
    }
    return "TYPE" + std::to_string(static_cast<std::uint16_t>(type));
}

RecordType record_type_from_string(std::string_view text) {
    std::string upper(text);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (const auto& t : kTypeNames) {
        if (t.name == upper) {
            return t.type;
        }
    }
    if (upper.starts_with("TYPE") && upper.size() > 4) {
        try {
            const auto v = std::stoul(upper.substr(4));
            if (v <= std::numeric_limits<std::uint16_t>::max()) {
                return static_cast<RecordType>(v);
            }
        } catch (const std::exception&) {
        }
    }
    throw Error(Errc::ValidationFailure, "unknown record type '" + std::string(text) + "'");
}

std::string_view to_string(Rcode rcode) {
    switch (rcode) {
    case Rcode::NoError: return "NOERROR";
    case Rcode::ServFail: return "SERVFAIL";
    case Rcode::NxDomain: return "NXDOMAIN";
    }
    return "UNKNOWN";
}

std::string format_answer(const Answer& answer) {
    std::string out = answer.name + ". " + std::to_string(answer.ttl) + " IN " +
                      record_type_to_string(answer.type) + " ";
    char buf[INET6_ADDRSTRLEN] = {};
    std::visit(overloaded{
                   [&](const Ipv4Data& d) {
                       inet_ntop(AF_INET, d.octets.data(), buf, sizeof buf);
                       out += buf;
                   },
                   [&](const Ipv6Data& d) {
                       inet_ntop(AF_INET6, d.octets.data(), buf, sizeof buf);
                       out += buf;
                   },
                   [&](const NameData& d) { out += d.name + "."; },
                   [&](const MxData& d) { out += std::to_string(d.preference) + " " + d.exchange + "."; },
                   [&](const TlsaData& d) {
                       out += std::to_string(d.usage) + " " + std::to_string(d.selector) + " " +
                              std::to_string(d.matching_type) + " " + to_hex(d.data);
                   },
                   [&](const RawData& d) {
                       out += "\\# " + std::to_string(d.bytes.size()) + " " + to_hex(d.bytes);
                   },
               },
               answer.data);
    return out;
}

NameClass classify(const DomainName& name, const ResolverConfig& config) {
    return !name.empty() && name.labels().back() == config.root_suffix ? NameClass::Ddns
                                                                        : NameClass::Traditional;
}

Resolver::Resolver(ResolverConfig config, const BindingLookup& ledger, const ContentFetcher& store,
                   Upstream* upstream, Clock clock)
    : config_(std::move(config)), ledger_(ledger), store_(store), upstream_(upstream),
      clock_(std::move(clock)) {
    if (config_.cname_chase_limit < 1) {
        throw Error(Errc::ValidationFailure, "cname_chase_limit must be at least 1");
    }
    if (!clock_) {
        clock_ = [] { return std::chrono::steady_clock::now(); };
    }
}

ResolutionResult Resolver::forward(const DomainName& name, RecordType qtype) {
    ++upstream_forwards_;
    if (!upstream_) {
        return failure(Rcode::ServFail);
    }
    try {
        auto result = upstream_->forward(name, qtype);
        if (result.rcode != Rcode::NoError) {
            result.answers.clear();
        }
        return result;
    } catch (const std::exception&) {
        return failure(Rcode::ServFail);
    }
}

ResolutionResult Resolver::resolve_ddns(const DomainName& name, RecordType qtype) {
    ResolutionResult result;
    DomainName current = name;
    std::uint32_t chases = 0;

    while (true) {
        AssetPath path;
        try {
            path = domain_to_asset_path(current, config_.root_suffix);
        } catch (const std::exception&) {
            // Unmappable names cannot have an asset either.
            return failure(Rcode::NxDomain);
        }
        Binding binding = Binding::initial();
        try {
            ++ledger_reads_;
            binding = ledger_.get_binding(path);
        } catch (const Error& e) {
            return failure(e.code() == Errc::UnknownAsset ? Rcode::NxDomain : Rcode::ServFail);
        } catch (const std::exception&) {
            return failure(Rcode::ServFail);
        }

        if (binding.kind() == Binding::Kind::Deactivated) {
            return failure(Rcode::NxDomain);
        }
        if (binding.kind() == Binding::Kind::Initial) {
            return result; // registered but unconfigured
        }

        RecordFile file;
        try {
            ++store_fetches_;
            file = decode_record_file(store_.get(binding.cid()), config_.record_default_ttl);
        } catch (const std::exception&) {
            return failure(Rcode::ServFail);
        }

        const auto owner = current.to_string();
        std::vector<Answer> matches;
        const CnameRecord* cname = nullptr;
        try {
            for (const auto& record : file.records) {
                auto answer = to_answer(record, owner, file.default_ttl);
                if (!answer) {
                    continue;
                }
                if (answer->type == qtype || qtype == RecordType::ANY) {
                    matches.push_back(std::move(*answer));
                }
                if (!cname) {
                    cname = std::get_if<CnameRecord>(&record);
                }
            }
        } catch (const std::exception&) {
            return failure(Rcode::ServFail);
        }

        if (!matches.empty() || !cname || qtype == RecordType::CNAME) {
            result.answers.insert(result.answers.end(), matches.begin(), matches.end());
            return result;
        }

        if (chases == config_.cname_chase_limit) {
            return failure(Rcode::ServFail);
        }
        ++chases;

        DomainName target;
        try {
            target = DomainName::parse(cname->target);
        } catch (const std::exception&) {
            return failure(Rcode::ServFail);
        }
        result.answers.push_back(
            Answer{owner, RecordType::CNAME, file.default_ttl, NameData{target.to_string()}});
        result.cname_chain.push_back(target.to_string());

        if (classify(target, config_) == NameClass::Traditional) {
            auto tail = forward(target, qtype);
            if (tail.rcode != Rcode::NoError) {
                return failure(tail.rcode);
            }
            result.answers.insert(result.answers.end(), tail.answers.begin(), tail.answers.end());
            return result;
        }
        current = std::move(target);
    }
}

std::optional<ResolutionResult> Resolver::cache_lookup(const std::string& key) {
    std::lock_guard lock(cache_mutex_);
    const auto it = index_.find(key);
    if (it == index_.end()) {
        return std::nullopt;
    }
    const auto& entry = *it->second;
    if (clock_() - entry.inserted_at >= entry.ttl) {
        lru_.erase(it->second);
        index_.erase(it);
        return std::nullopt;
    }
    lru_.splice(lru_.begin(), lru_, it->second);
    return lru_.front().value;
}

void Resolver::cache_store(const std::string& key, const DomainName& name,
                           const ResolutionResult& result) {
    if (config_.cache_capacity == 0 || result.rcode == Rcode::ServFail) {
        return;
    }
    std::uint32_t ttl = config_.negative_ttl;
    if (result.rcode == Rcode::NoError && !result.answers.empty()) {
        ttl = std::min_element(result.answers.begin(), result.answers.end(),
                               [](const Answer& a, const Answer& b) { return a.ttl < b.ttl; })
                  ->ttl;
    }
    if (ttl == 0) {
        return;
    }

    std::lock_guard lock(cache_mutex_);
    if (const auto it = index_.find(key); it != index_.end()) {
        lru_.erase(it->second);
        index_.erase(it);
    }
    lru_.push_front(CacheEntry{key, name.to_string(), result, clock_(), std::chrono::seconds(ttl)});
    index_[key] = lru_.begin();
    while (lru_.size() > config_.cache_capacity) {
        index_.erase(lru_.back().key);
        lru_.pop_back();
    }
}

ResolutionResult Resolver::resolve(const DomainName& name, RecordType qtype) {
    ++queries_;
    const auto key = cache_key(name, qtype);
    if (auto cached = cache_lookup(key)) {
        ++cache_hits_;
        return std::move(*cached);
    }
    ++cache_misses_;

    auto result = classify(name, config_) == NameClass::Ddns ? resolve_ddns(name, qtype)
                                                             : forward(name, qtype);
    cache_store(key, name, result);
    return result;
}

void Resolver::invalidate(const DomainName& name) {
    const auto text = name.to_string();
    std::lock_guard lock(cache_mutex_);
    for (auto it = lru_.begin(); it != lru_.end();) {
        const auto& chain = it->value.cname_chain;
        if (it->name == text || std::find(chain.begin(), chain.end(), text) != chain.end()) {
            index_.erase(it->key);
            it = lru_.erase(it);
        } else {
            ++it;
        }
    }
}

void Resolver::clear_cache() {
    std::lock_guard lock(cache_mutex_);
    lru_.clear();
    index_.clear();
}

std::size_t Resolver::cache_size() const {
    std::lock_guard lock(cache_mutex_);
    return lru_.size();
}

ResolverStats Resolver::stats() const {
    return ResolverStats{queries_.load(),      cache_hits_.load(),    cache_misses_.load(),
                         ledger_reads_.load(), store_fetches_.load(), upstream_forwards_.load()};
}

} // namespace ddns
