#pragma once

#include "ddns/crypto.hpp"
#include "ddns/domain_model.hpp"
#include "ddns/resolver.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace ddns::wire {

inline constexpr std::size_t kHeaderSize = 12;
inline constexpr std::size_t kMaxUdpResponse = 512;
inline constexpr std::size_t kMaxDatagram = 4096;
inline constexpr std::uint16_t kClassIn = 1;

namespace flag {
inline constexpr std::uint16_t QR = 0x8000;
inline constexpr std::uint16_t AA = 0x0400;
inline constexpr std::uint16_t TC = 0x0200;
inline constexpr std::uint16_t RD = 0x0100;
inline constexpr std::uint16_t RA = 0x0080;
inline constexpr std::uint16_t OpcodeMask = 0x7800;
inline constexpr std::uint16_t RcodeMask = 0x000f;
} // namespace flag

inline constexpr std::uint8_t kRcodeFormErr = 1;
inline constexpr std::uint8_t kRcodeNotImp = 4;

struct WireQuery {
    std::uint16_t id = 0;
    std::uint16_t flags = flag::RD;
    DomainName qname;
    RecordType qtype = RecordType::A;
    std::uint16_t qclass = kClassIn;
    // Question section exactly as received; echoed in the response.
    // Not part of equality.
    Bytes question_bytes;

    bool operator==(const WireQuery& o) const {
        return id == o.id && flags == o.flags && qname == o.qname && qtype == o.qtype &&
               qclass == o.qclass;
    }
};

struct WireResponse {
    std::uint16_t id = 0;
    std::uint16_t flags = 0;
    std::string qname; // as sent by the server; empty when there is no question
    RecordType qtype = RecordType::A;
    std::uint16_t qclass = kClassIn;
    std::vector<Answer> answers;

    std::uint8_t rcode() const noexcept { return static_cast<std::uint8_t>(flags & flag::RcodeMask); }
    bool truncated() const noexcept { return (flags & flag::TC) != 0; }
};

Bytes encode_query(const WireQuery& query);

// Throws Error(Truncated | FormErr | UnsupportedOpcode).
WireQuery decode_query(std::span<const std::uint8_t> datagram);

// Uncompressed names; answers that would push the message past 512 bytes
// are dropped and TC is set.
Bytes encode_response(const WireQuery& query, const ResolutionResult& result);

// Client-side decoding of a response (follows compression pointers).
// Throws Error(Truncated | FormErr).
WireResponse decode_response(std::span<const std::uint8_t> datagram);

// Header-only error reply, or nullopt when not even an id is recoverable.
std::optional<Bytes> encode_error(std::span<const std::uint8_t> datagram, std::uint8_t rcode);

Rcode rcode_from_wire(std::uint8_t rcode);

// decode -> resolve -> encode, with FormErr/NotImp replies for bad input.
std::optional<Bytes> handle_datagram(std::span<const std::uint8_t> datagram, Resolver& resolver);

struct Endpoint {
    std::string host;
    std::uint16_t port = 53;

    // "1.1.1.1:53", "localhost:5553", or a bare host with default_port.
    static Endpoint parse(std::string_view text, std::uint16_t default_port = 53);
    std::string to_string() const;
};

// One request/response over UDP. Datagrams whose id does not match the
// request are ignored. Throws Error(NetworkFailure) on timeout or error.
Bytes udp_exchange(const Endpoint& server, std::span<const std::uint8_t> request,
                   std::chrono::milliseconds timeout);

WireResponse query(const Endpoint& server, const DomainName& name, RecordType qtype,
                   std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

/// Forwards to a classic DNS server over UDP: one retry, then NetworkFailure.
class UdpUpstream : public Upstream {
public:
    explicit UdpUpstream(Endpoint server,
                         std::chrono::milliseconds timeout = std::chrono::milliseconds(2000),
                         int retries = 1);

    ResolutionResult forward(const DomainName& name, RecordType qtype) override;

private:
    Endpoint server_;
    std::chrono::milliseconds timeout_;
    int retries_;
};

struct QueryLog {
    std::string client;
    std::string qname;
    RecordType qtype = RecordType::A;
    std::optional<Rcode> rcode; // nullopt for malformed datagrams
    std::size_t answers = 0;
    std::chrono::microseconds elapsed{0};
};

struct ServerOptions {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 5553;
    // Datagrams processed concurrently.
    std::size_t workers = 4;
    std::function<void(const QueryLog&)> on_query;
};

/// UDP front-end for a Resolver. Binds in the constructor.
class UdpServer {
public:
    // Throws Error(BindFailure).
    UdpServer(ServerOptions options, Resolver& resolver);
    ~UdpServer();
    UdpServer(const UdpServer&) = delete;
    UdpServer& operator=(const UdpServer&) = delete;

    std::uint16_t port() const noexcept { return port_; }

    void start();
    // Stops accepting datagrams, lets in-flight queries finish, joins.
    void stop();

    std::uint64_t datagrams() const noexcept { return datagrams_.load(); }

private:
    void worker();

    ServerOptions options_;
    Resolver& resolver_;
    int fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> datagrams_{0};
    std::vector<std::thread> threads_;
};

} // namespace ddns::wire
