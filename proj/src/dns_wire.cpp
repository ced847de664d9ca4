#include "ddns/dns_wire.hpp"

#include "ddns/errors.hpp"

#include <algorithm>

namespace ddns::wire {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

constexpr std::size_t kMaxPointerJumps = 64;
constexpr std::size_t kMaxWireNameLength = 255;

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
    put_u16(out, static_cast<std::uint16_t>(v >> 16));
    put_u16(out, static_cast<std::uint16_t>(v));
}

void put_name(Bytes& out, std::string_view name) {
    std::size_t start = 0;
    while (start < name.size()) {
        auto dot = name.find('.', start);
        if (dot == std::string_view::npos) {
            dot = name.size();
        }
        const auto label = name.substr(start, dot - start);
        if (!label.empty()) {
            out.push_back(static_cast<std::uint8_t>(std::min<std::size_t>(label.size(), 63)));
            out.insert(out.end(), label.begin(), label.begin() + std::min<std::size_t>(label.size(), 63));
        }
        start = dot + 1;
    }
    out.push_back(0);
}

class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> msg, std::size_t pos = 0) : msg_(msg), pos_(pos) {}

    std::uint8_t u8() {
        need(1);
        return msg_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        const auto v = static_cast<std::uint16_t>(msg_[pos_] << 8 | msg_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        const std::uint32_t hi = u16();
        return hi << 16 | u16();
    }
    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto s = msg_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    // Follows compression pointers; the cursor ends after the name as it
    // appears at the current position.
    std::vector<std::string> name() {
        std::vector<std::string> labels;
        std::size_t cursor = pos_;
        std::size_t jumps = 0;
        std::size_t total = 1;
        bool jumped = false;
        while (true) {
            if (cursor >= msg_.size()) {
                throw Error(Errc::Truncated, "name runs past end of message");
            }
            const std::uint8_t len = msg_[cursor];
            if ((len & 0xC0) == 0xC0) {
                if (cursor + 1 >= msg_.size()) {
                    throw Error(Errc::Truncated, "truncated compression pointer");
                }
                const std::size_t target = static_cast<std::size_t>(len & 0x3F) << 8 | msg_[cursor + 1];
                if (!jumped) {
                    pos_ = cursor + 2;
                    jumped = true;
                }
                if (++jumps > kMaxPointerJumps || target >= msg_.size()) {
                    throw Error(Errc::FormErr, "bad compression pointer");
                }
                cursor = target;
                continue;
            }
            if (len & 0xC0) {
                throw Error(Errc::FormErr, "unsupported label type");
            }
            ++cursor;
            if (len == 0) {
                if (!jumped) {
                    pos_ = cursor;
                }
                return labels;
            }
            if (cursor + len > msg_.size()) {
                throw Error(Errc::Truncated, "label runs past end of message");
            }
            total += len + 1;
            if (total > kMaxWireNameLength) {
                throw Error(Errc::FormErr, "name longer than 255 octets");
            }
            labels.emplace_back(reinterpret_cast<const char*>(msg_.data() + cursor), len);
            cursor += len;
        }
    }

    std::size_t pos() const noexcept { return pos_; }

private:
    void need(std::size_t n) const {
        if (msg_.size() - pos_ < n) {
            throw Error(Errc::Truncated, "message too short");
        }
    }

    std::span<const std::uint8_t> msg_;
    std::size_t pos_;
};

std::string join(const std::vector<std::string>& labels) {
    std::string out;
    for (const auto& l : labels) {
        if (!out.empty()) {
            out.push_back('.');
        }
        out += l;
    }
    return out;
}

void put_answer(Bytes& out, const Answer& a) {
    put_name(out, a.name);
    put_u16(out, static_cast<std::uint16_t>(a.type));
    put_u16(out, kClassIn);
    put_u32(out, a.ttl);
    Bytes rdata;
    std::visit(overloaded{
                   [&](const Ipv4Data& d) { rdata.assign(d.octets.begin(), d.octets.end()); },
                   [&](const Ipv6Data& d) { rdata.assign(d.octets.begin(), d.octets.end()); },
                   [&](const NameData& d) { put_name(rdata, d.name); },
                   [&](const MxData& d) {
                       put_u16(rdata, d.preference);
                       put_name(rdata, d.exchange);
                   },
                   [&](const TlsaData& d) {
                       rdata.push_back(d.usage);
                       rdata.push_back(d.selector);
                       rdata.push_back(d.matching_type);
                       rdata.insert(rdata.end(), d.data.begin(), d.data.end());
                   },
                   [&](const RawData& d) { rdata = d.bytes; },
               },
               a.data);
    put_u16(out, static_cast<std::uint16_t>(rdata.size()));
    out.insert(out.end(), rdata.begin(), rdata.end());
}

Rdata read_rdata(std::span<const std::uint8_t> msg, std::size_t start, std::size_t length,
                 RecordType type) {
    Cursor c(msg, start);
    const auto end = start + length;
    const auto check_end = [&] {
        if (c.pos() != end) {
            throw Error(Errc::FormErr, "rdata length mismatch");
        }
    };
    switch (type) {
    case RecordType::A: {
        if (length != 4) throw Error(Errc::FormErr, "A rdata must be 4 bytes");
        Ipv4Data d;
        const auto b = c.bytes(4);
        std::copy(b.begin(), b.end(), d.octets.begin());
        return d;
    }
    case RecordType::AAAA: {
        if (length != 16) throw Error(Errc::FormErr, "AAAA rdata must be 16 bytes");
        Ipv6Data d;
        const auto b = c.bytes(16);
        std::copy(b.begin(), b.end(), d.octets.begin());
        return d;
    }
    case RecordType::CNAME:
    case RecordType::NS:
    case RecordType::PTR: {
        NameData d{join(c.name())};
        check_end();
        return d;
    }
    case RecordType::MX: {
        MxData d;
        d.preference = c.u16();
        d.exchange = join(c.name());
        check_end();
        return d;
    }
    case RecordType::TLSA: {
        if (length < 3) throw Error(Errc::FormErr, "TLSA rdata too short");
        TlsaData d;
        d.usage = c.u8();
        d.selector = c.u8();
        d.matching_type = c.u8();
        const auto b = c.bytes(length - 3);
        d.data.assign(b.begin(), b.end());
        return d;
    }
    default: {
        const auto b = c.bytes(length);
        return RawData{Bytes(b.begin(), b.end())};
    }
    }
}

} // namespace

Bytes encode_query(const WireQuery& q) {
    Bytes out;
    out.reserve(kHeaderSize + 64);
    put_u16(out, q.id);
    put_u16(out, q.flags);
    put_u16(out, 1);
    put_u16(out, 0);
    put_u16(out, 0);
    put_u16(out, 0);
    put_name(out, q.qname.to_string());
    put_u16(out, static_cast<std::uint16_t>(q.qtype));
    put_u16(out, q.qclass);
    return out;
}

WireQuery decode_query(std::span<const std::uint8_t> datagram) {
    if (datagram.size() < kHeaderSize) {
        throw Error(Errc::Truncated, "datagram shorter than a DNS header");
    }
    if (datagram.size() > kMaxDatagram) {
        throw Error(Errc::FormErr, "datagram larger than 4096 bytes");
    }
    Cursor c(datagram);
    WireQuery q;
    q.id = c.u16();
    q.flags = c.u16();
    if (q.flags & flag::QR) {
        throw Error(Errc::FormErr, "QR bit set on a query");
    }
    if ((q.flags & flag::OpcodeMask) != 0) {
        throw Error(Errc::UnsupportedOpcode, "only standard queries are supported");
    }
    const auto qdcount = c.u16();
    c.u16(); // an, ns, ar: ignored (an EDNS OPT record may be present)
    c.u16();
    c.u16();
    if (qdcount != 1) {
        throw Error(Errc::FormErr, "expected exactly one question");
    }
    const auto question_start = c.pos();
    auto labels = c.name();
    for (auto& l : labels) {
        std::transform(l.begin(), l.end(), l.begin(), [](unsigned char ch) {
            return static_cast<char>(ch >= 'A' && ch <= 'Z' ? ch - 'A' + 'a' : ch);
        });
    }
    try {
        q.qname = DomainName::from_labels(std::move(labels));
    } catch (const Error& e) {
        throw Error(Errc::FormErr, e.what());
    }
    q.qtype = static_cast<RecordType>(c.u16());
    q.qclass = c.u16();
    q.question_bytes.assign(datagram.begin() + static_cast<std::ptrdiff_t>(question_start),
                            datagram.begin() + static_cast<std::ptrdiff_t>(c.pos()));
    return q;
}

Bytes encode_response(const WireQuery& q, const ResolutionResult& r) {
    std::uint16_t flags = flag::QR | (q.flags & flag::OpcodeMask) | (q.flags & flag::RD) | flag::RA |
                          static_cast<std::uint16_t>(static_cast<std::uint8_t>(r.rcode) & flag::RcodeMask);
    Bytes out;
    out.reserve(kMaxUdpResponse);
    put_u16(out, q.id);
    put_u16(out, flags);
    put_u16(out, 1);
    put_u16(out, 0); // patched below
    put_u16(out, 0);
    put_u16(out, 0);
    if (!q.question_bytes.empty()) {
        out.insert(out.end(), q.question_bytes.begin(), q.question_bytes.end());
    } else {
        put_name(out, q.qname.to_string());
        put_u16(out, static_cast<std::uint16_t>(q.qtype));
        put_u16(out, q.qclass);
    }

    std::uint16_t ancount = 0;
    if (r.rcode != Rcode::NxDomain) {
        for (const auto& a : r.answers) {
            Bytes rr;
            put_answer(rr, a);
            if (out.size() + rr.size() > kMaxUdpResponse) {
                flags |= flag::TC;
                break;
            }
            out.insert(out.end(), rr.begin(), rr.end());
            ++ancount;
        }
    }
    out[2] = static_cast<std::uint8_t>(flags >> 8);
    out[3] = static_cast<std::uint8_t>(flags);
    out[6] = static_cast<std::uint8_t>(ancount >> 8);
    out[7] = static_cast<std::uint8_t>(ancount);
    return out;
}

WireResponse decode_response(std::span<const std::uint8_t> datagram) {
    if (datagram.size() < kHeaderSize) {
        throw Error(Errc::Truncated, "datagram shorter than a DNS header");
    }
    Cursor c(datagram);
    WireResponse r;
    r.id = c.u16();
    r.flags = c.u16();
    const auto qdcount = c.u16();
    const auto ancount = c.u16();
    c.u16();
    c.u16();
    if (qdcount > 1) {
        throw Error(Errc::FormErr, "more than one question");
    }
    if (qdcount == 1) {
        r.qname = join(c.name());
        r.qtype = static_cast<RecordType>(c.u16());
        r.qclass = c.u16();
    }
    for (std::uint16_t i = 0; i < ancount; ++i) {
        Answer a;
        a.name = join(c.name());
        a.type = static_cast<RecordType>(c.u16());
        c.u16(); // class
        a.ttl = c.u32();
        const auto rdlength = c.u16();
        const auto start = c.pos();
        c.bytes(rdlength);
        a.data = read_rdata(datagram, start, rdlength, a.type);
        r.answers.push_back(std::move(a));
    }
    return r;
}

std::optional<Bytes> encode_error(std::span<const std::uint8_t> datagram, std::uint8_t rcode) {
    if (datagram.size() < 2) {
        return std::nullopt;
    }
    std::uint16_t flags = flag::QR | (rcode & flag::RcodeMask);
    if (datagram.size() >= 4) {
        const auto qflags = static_cast<std::uint16_t>(datagram[2] << 8 | datagram[3]);
        flags |= qflags & (flag::OpcodeMask | flag::RD);
    }
    Bytes out(kHeaderSize, 0);
    out[0] = datagram[0];
    out[1] = datagram[1];
    out[2] = static_cast<std::uint8_t>(flags >> 8);
    out[3] = static_cast<std::uint8_t>(flags);
    return out;
}

Rcode rcode_from_wire(std::uint8_t rcode) {
    switch (rcode) {
    case 0: return Rcode::NoError;
    case 3: return Rcode::NxDomain;
    default: return Rcode::ServFail;
    }
}

std::optional<Bytes> handle_datagram(std::span<const std::uint8_t> datagram, Resolver& resolver) {
    WireQuery q;
    try {
        q = decode_query(datagram);
    } catch (const Error& e) {
        return encode_error(datagram, e.code() == Errc::UnsupportedOpcode ? kRcodeNotImp : kRcodeFormErr);
    }
    if (q.qclass != kClassIn) {
        return encode_error(datagram, kRcodeNotImp);
    }
    return encode_response(q, resolver.resolve(q.qname, q.qtype));
}

} // namespace ddns::wire
