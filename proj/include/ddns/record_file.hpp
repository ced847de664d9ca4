#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ddns {

inline constexpr std::uint32_t kDefaultRecordTtl = 60;

// Address fields keep the owner's original text so that re-encoding a
// decoded file reproduces the same bytes (and the same content id).
struct ARecord {
    std::string address;
    std::array<std::uint8_t, 4> octets() const;
    bool operator==(const ARecord&) const = default;
};

struct AaaaRecord {
    std::string address;
    std::array<std::uint8_t, 16> octets() const;
    bool operator==(const AaaaRecord&) const = default;
};

struct CnameRecord {
    std::string target;
    bool operator==(const CnameRecord&) const = default;
};

struct MxRecord {
    std::string mail_server;
    std::optional<std::uint32_t> ttl;
    std::uint16_t priority = 0;
    bool operator==(const MxRecord&) const = default;
};

struct TlsaRecord {
    std::uint8_t usage = 0;
    std::uint8_t selector = 0;
    std::uint8_t matching_type = 0;
    std::string cert_data; // hex
    bool operator==(const TlsaRecord&) const = default;
};

// A record whose "Type" this build does not understand. `json` is the
// compact serialization of the original object, key order preserved.
struct ExtensionRecord {
    std::string type;
    std::string json;
    bool operator==(const ExtensionRecord&) const = default;
};

using DnsRecord =
    std::variant<ARecord, AaaaRecord, CnameRecord, MxRecord, TlsaRecord, ExtensionRecord>;

std::string_view record_type_name(const DnsRecord& record);

struct RecordFile {
    std::vector<DnsRecord> records;
    std::uint32_t default_ttl = kDefaultRecordTtl;

    bool operator==(const RecordFile&) const = default;
};

// Canonical JSON: compact, "Type" first, then the type's keys in the fixed
// order Address | Target | MailServer,TTL,Priority | Usage,Selector,
// MatchingType,CertData. One record encodes as an object, more as an array.
std::string encode_record_file(const RecordFile& file);

// Accepts one object or a non-empty array of objects.
// Throws Error(MalformedJson | MissingTypeKey | BadAddressSyntax).
RecordFile decode_record_file(std::string_view bytes,
                              std::uint32_t default_ttl = kDefaultRecordTtl);

} // namespace ddns
