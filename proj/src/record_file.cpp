#include "ddns/record_file.hpp"

#include "ddns/crypto.hpp"
#include "ddns/domain_model.hpp"
#include "ddns/errors.hpp"

#include <json.hpp>

#include <arpa/inet.h>

#include <limits>

namespace ddns {

using ordered_json = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

bool parse_ipv4(const std::string& text, std::array<std::uint8_t, 4>& out) {
    return inet_pton(AF_INET, text.c_str(), out.data()) == 1;
}

bool parse_ipv6(const std::string& text, std::array<std::uint8_t, 16>& out) {
    return inet_pton(AF_INET6, text.c_str(), out.data()) == 1;
}

const ordered_json& require(const ordered_json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw Error(Errc::MalformedJson, std::string("missing key '") + key + "'");
    }
    return *it;
}

std::string require_string(const ordered_json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (!v.is_string()) {
        throw Error(Errc::MalformedJson, std::string("'") + key + "' must be a string");
    }
    return v.get<std::string>();
}

std::uint64_t require_uint(const ordered_json& obj, const char* key, std::uint64_t max) {
    const auto& v = require(obj, key);
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > max) {
        throw Error(Errc::MalformedJson,
                    std::string("'") + key + "' must be an integer in [0, " +
                        std::to_string(max) + "]");
    }
    return v.get<std::uint64_t>();
}

DnsRecord decode_record(const ordered_json& obj) {
    if (!obj.is_object()) {
        throw Error(Errc::MalformedJson, "record must be a JSON object");
    }
    const auto type_it = obj.find("Type");
    if (type_it == obj.end()) {
        throw Error(Errc::MissingTypeKey, obj.dump());
    }
    if (!type_it->is_string()) {
        throw Error(Errc::MalformedJson, "'Type' must be a string");
    }
    const auto type = type_it->get<std::string>();

    if (type == "A") {
        ARecord r{require_string(obj, "Address")};
        std::array<std::uint8_t, 4> tmp{};
        if (!parse_ipv4(r.address, tmp)) {
            throw Error(Errc::BadAddressSyntax, "'" + r.address + "' is not an IPv4 address");
        }
        return r;
    }
    if (type == "AAAA") {
        AaaaRecord r{require_string(obj, "Address")};
        std::array<std::uint8_t, 16> tmp{};
        if (!parse_ipv6(r.address, tmp)) {
            throw Error(Errc::BadAddressSyntax, "'" + r.address + "' is not an IPv6 address");
        }
        return r;
    }
    if (type == "CNAME") {
        CnameRecord r{require_string(obj, "Target")};
        try {
            DomainName::parse(r.target);
        } catch (const Error& e) {
            throw Error(Errc::BadAddressSyntax, "CNAME target: " + std::string(e.what()));
        }
        return r;
    }
    if (type == "MX") {
        MxRecord r;
        r.mail_server = require_string(obj, "MailServer");
        try {
            DomainName::parse(r.mail_server);
        } catch (const Error& e) {
            throw Error(Errc::BadAddressSyntax, "MX mail server: " + std::string(e.what()));
        }
        if (obj.contains("TTL")) {
            r.ttl = static_cast<std::uint32_t>(
                require_uint(obj, "TTL", std::numeric_limits<std::uint32_t>::max()));
        }
        r.priority = static_cast<std::uint16_t>(
            require_uint(obj, "Priority", std::numeric_limits<std::uint16_t>::max()));
        return r;
    }
    if (type == "TLSA") {
        TlsaRecord r;
        r.usage = static_cast<std::uint8_t>(require_uint(obj, "Usage", 255));
        r.selector = static_cast<std::uint8_t>(require_uint(obj, "Selector", 255));
        r.matching_type = static_cast<std::uint8_t>(require_uint(obj, "MatchingType", 255));
        r.cert_data = require_string(obj, "CertData");
        try {
            from_hex(r.cert_data);
        } catch (const Error&) {
            throw Error(Errc::MalformedJson, "'CertData' must be hex");
        }
        return r;
    }
    return ExtensionRecord{type, obj.dump()};
}

ordered_json encode_record(const DnsRecord& record) {
    return std::visit(
        overloaded{
            [](const ARecord& r) {
                return ordered_json{{"Type", "A"}, {"Address", r.address}};
            },
            [](const AaaaRecord& r) {
                return ordered_json{{"Type", "AAAA"}, {"Address", r.address}};
            },
            [](const CnameRecord& r) {
                return ordered_json{{"Type", "CNAME"}, {"Target", r.target}};
            },
            [](const MxRecord& r) {
                ordered_json j{{"Type", "MX"}, {"MailServer", r.mail_server}};
                if (r.ttl) {
                    j["TTL"] = *r.ttl;
                }
                j["Priority"] = r.priority;
                return j;
            },
            [](const TlsaRecord& r) {
                return ordered_json{{"Type", "TLSA"},
                                    {"Usage", r.usage},
                                    {"Selector", r.selector},
                                    {"MatchingType", r.matching_type},
                                    {"CertData", r.cert_data}};
            },
            [](const ExtensionRecord& r) { return ordered_json::parse(r.json); },
        },
        record);
}

} // namespace

std::array<std::uint8_t, 4> ARecord::octets() const {
    std::array<std::uint8_t, 4> out{};
    if (!parse_ipv4(address, out)) {
        throw Error(Errc::BadAddressSyntax, address);
    }
    return out;
}

std::array<std::uint8_t, 16> AaaaRecord::octets() const {
    std::array<std::uint8_t, 16> out{};
    if (!parse_ipv6(address, out)) {
        throw Error(Errc::BadAddressSyntax, address);
    }
    return out;
}

std::string_view record_type_name(const DnsRecord& record) {
    return std::visit(overloaded{
                          [](const ARecord&) -> std::string_view { return "A"; },
                          [](const AaaaRecord&) -> std::string_view { return "AAAA"; },
                          [](const CnameRecord&) -> std::string_view { return "CNAME"; },
                          [](const MxRecord&) -> std::string_view { return "MX"; },
                          [](const TlsaRecord&) -> std::string_view { return "TLSA"; },
                          [](const ExtensionRecord& r) -> std::string_view { return r.type; },
                      },
                      record);
}

std::string encode_record_file(const RecordFile& file) {
    if (file.records.size() == 1) {
        return encode_record(file.records.front()).dump();
    }
    auto arr = ordered_json::array();
    for (const auto& r : file.records) {
        arr.push_back(encode_record(r));
    }
    return arr.dump();
}

RecordFile decode_record_file(std::string_view bytes, std::uint32_t default_ttl) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::MalformedJson, e.what());
    }

    RecordFile file;
    file.default_ttl = default_ttl;
    if (doc.is_array()) {
        if (doc.empty()) {
            throw Error(Errc::MalformedJson, "record file has no records");
        }
        for (const auto& item : doc) {
            file.records.push_back(decode_record(item));
        }
    } else {
        file.records.push_back(decode_record(doc));
    }
    return file;
}

} // namespace ddns
