#include "generators.hpp"

#include "ddns/crypto.hpp"

#include <cstdio>

namespace ddns::gen {
namespace {

std::string hyphen_label(std::mt19937& rng) {
    static constexpr std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz0123456789-";
    std::uniform_int_distribution<std::size_t> len(1, 20);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 2);
    std::string s(len(rng), 'a');
    for (std::size_t i = 0; i < s.size(); ++i) {
        // interior hyphens only
        s[i] = alphabet[i > 0 && i + 1 < s.size() && rng() % 8 == 0 ? alphabet.size() - 1 : pick(rng)];
    }
    return s;
}

std::string random_label(std::mt19937& rng, std::size_t max_len) {
    static constexpr std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string s(len(rng), ' ');
    for (auto& c : s) c = alphabet[pick(rng)];
    return s;
}

} // namespace

std::string wire_name(std::mt19937& rng) {
    std::string out;
    for (int n = 1 + static_cast<int>(rng() % 5); n > 0; --n) {
        if (!out.empty()) out.push_back('.');
        out += hyphen_label(rng);
    }
    return out;
}

Answer answer(std::mt19937& rng, const std::string& owner) {
    Answer a{owner, RecordType::A, static_cast<std::uint32_t>(rng()), Ipv4Data{}};
    switch (rng() % 8) {
    case 0: {
        Ipv4Data d;
        for (auto& b : d.octets) b = static_cast<std::uint8_t>(rng());
        a.data = d;
        break;
    }
    case 1: {
        a.type = RecordType::AAAA;
        Ipv6Data d;
        for (auto& b : d.octets) b = static_cast<std::uint8_t>(rng());
        a.data = d;
        break;
    }
    case 2: a.type = RecordType::CNAME; a.data = NameData{wire_name(rng)}; break;
    case 3: a.type = RecordType::NS; a.data = NameData{wire_name(rng)}; break;
    case 4: a.type = RecordType::MX; a.data = MxData{static_cast<std::uint16_t>(rng()), wire_name(rng)}; break;
    case 5: {
        a.type = RecordType::TLSA;
        TlsaData d{static_cast<std::uint8_t>(rng() % 4), static_cast<std::uint8_t>(rng() % 2),
                   static_cast<std::uint8_t>(rng() % 3), Bytes(rng() % 40)};
        for (auto& b : d.data) b = static_cast<std::uint8_t>(rng());
        a.data = d;
        break;
    }
    case 6: {
        a.type = RecordType::TXT;
        Bytes raw(1 + rng() % 30);
        for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
        a.data = RawData{raw};
        break;
    }
    default: a.type = RecordType::PTR; a.data = NameData{wire_name(rng)}; break;
    }
    return a;
}

std::string host(std::mt19937& rng) {
    static constexpr std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::uniform_int_distribution<int> labels(1, 4), len(1, 10);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string out;
    for (int i = labels(rng); i > 0; --i) {
        if (!out.empty()) out.push_back('.');
        for (int j = len(rng); j > 0; --j) out.push_back(alphabet[pick(rng)]);
    }
    return out;
}

DnsRecord record(std::mt19937& rng) {
    std::uniform_int_distribution<int> kind(0, 5);
    std::uniform_int_distribution<unsigned> byte(0, 255), word(0, 65535);
    char buf[64];
    switch (kind(rng)) {
    case 0:
        std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", byte(rng), byte(rng), byte(rng), byte(rng));
        return ARecord{buf};
    case 1:
        std::snprintf(buf, sizeof buf, "%04X:%04X:%04X:%04X:%04X:%04X:%04X:%04X", word(rng), word(rng),
                      word(rng), word(rng), word(rng), word(rng), word(rng), word(rng));
        return AaaaRecord{buf};
    case 2:
        return CnameRecord{host(rng)};
    case 3: {
        MxRecord mx{host(rng), std::nullopt, static_cast<std::uint16_t>(word(rng))};
        if (byte(rng) % 2) mx.ttl = std::uniform_int_distribution<std::uint32_t>()(rng);
        return mx;
    }
    case 4: {
        TlsaRecord t{static_cast<std::uint8_t>(byte(rng) % 4), static_cast<std::uint8_t>(byte(rng) % 2),
                     static_cast<std::uint8_t>(byte(rng) % 3), {}};
        for (int i = 0; i < 32; ++i) {
            std::snprintf(buf, sizeof buf, "%02x", byte(rng));
            t.cert_data += buf;
        }
        return t;
    }
    default:
        return ExtensionRecord{"TXT", R"({"Type":"TXT","Text":")" + host(rng) + R"("})"};
    }
}

DomainName ddns_name(std::mt19937& rng) {
    std::vector<std::string> labels;
    std::uniform_int_distribution<int> depth(0, 4);
    std::size_t budget = kMaxSubpathLength;
    const int subs = depth(rng);
    for (int i = 0; i < subs && budget > 0; ++i) {
        auto label = random_label(rng, std::min<std::size_t>(budget, 12));
        budget -= label.size();
        labels.push_back(std::move(label));
    }
    labels.push_back(random_label(rng, kMaxRootLength));
    labels.emplace_back("ddns");
    return DomainName::from_labels(std::move(labels));
}

} // namespace ddns::gen
