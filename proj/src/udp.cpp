#include "ddns/dns_wire.hpp"

#include "ddns/errors.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <random>

namespace ddns::wire {

namespace {

class Socket {
public:
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket() {
        if (fd_ >= 0) ::close(fd_);
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    int get() const noexcept { return fd_; }

private:
    int fd_;
};

struct AddrInfoDeleter {
    void operator()(addrinfo* ai) const { freeaddrinfo(ai); }
};

std::unique_ptr<addrinfo, AddrInfoDeleter> resolve_endpoint(const Endpoint& ep) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_DGRAM;
    addrinfo* res = nullptr;
    const auto port = std::to_string(ep.port);
    if (const int rc = getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
        throw Error(Errc::NetworkFailure, ep.to_string() + ": " + gai_strerror(rc));
    }
    return std::unique_ptr<addrinfo, AddrInfoDeleter>(res);
}

std::string peer_to_string(const sockaddr_storage& addr) {
    char host[INET6_ADDRSTRLEN] = {};
    std::uint16_t port = 0;
    if (addr.ss_family == AF_INET) {
        const auto* in = reinterpret_cast<const sockaddr_in*>(&addr);
        inet_ntop(AF_INET, &in->sin_addr, host, sizeof host);
        port = ntohs(in->sin_port);
    } else if (addr.ss_family == AF_INET6) {
        const auto* in6 = reinterpret_cast<const sockaddr_in6*>(&addr);
        inet_ntop(AF_INET6, &in6->sin6_addr, host, sizeof host);
        port = ntohs(in6->sin6_port);
    }
    return std::string(host) + ":" + std::to_string(port);
}

std::uint16_t random_id() {
    thread_local std::mt19937 rng{std::random_device{}()};
    return static_cast<std::uint16_t>(rng());
}

} // namespace

Endpoint Endpoint::parse(std::string_view text, std::uint16_t default_port) {
    Endpoint ep;
    ep.port = default_port;
    std::string_view host = text;
    std::string_view port;
    if (text.starts_with('[')) {
        const auto close = text.find(']');
        if (close == std::string_view::npos) {
            throw Error(Errc::ValidationFailure, "bad endpoint '" + std::string(text) + "'");
        }
        host = text.substr(1, close - 1);
        if (close + 1 < text.size()) {
            if (text[close + 1] != ':') {
                throw Error(Errc::ValidationFailure, "bad endpoint '" + std::string(text) + "'");
            }
            port = text.substr(close + 2);
        }
    } else if (const auto colon = text.rfind(':');
               colon != std::string_view::npos && text.find(':') == colon) {
        host = text.substr(0, colon);
        port = text.substr(colon + 1);
    }
    if (host.empty()) {
        throw Error(Errc::ValidationFailure, "bad endpoint '" + std::string(text) + "'");
    }
    ep.host = std::string(host);
    if (!port.empty()) {
        unsigned long v = 0;
        try {
            std::size_t used = 0;
            v = std::stoul(std::string(port), &used);
            if (used != port.size()) throw std::invalid_argument("port");
        } catch (const std::exception&) {
            throw Error(Errc::ValidationFailure, "bad port in '" + std::string(text) + "'");
        }
        if (v == 0 || v > 65535) {
            throw Error(Errc::ValidationFailure, "port out of range in '" + std::string(text) + "'");
        }
        ep.port = static_cast<std::uint16_t>(v);
    }
    return ep;
}

std::string Endpoint::to_string() const {
    if (host.find(':') != std::string::npos) {
        return "[" + host + "]:" + std::to_string(port);
    }
    return host + ":" + std::to_string(port);
}

Bytes udp_exchange(const Endpoint& server, std::span<const std::uint8_t> request,
                   std::chrono::milliseconds timeout) {
    if (request.size() < 2) {
        throw Error(Errc::ValidationFailure, "request too short");
    }
    const auto ai = resolve_endpoint(server);
    Socket sock(::socket(ai->ai_family, SOCK_DGRAM | SOCK_CLOEXEC, 0));
    if (sock.get() < 0 || ::connect(sock.get(), ai->ai_addr, ai->ai_addrlen) != 0) {
        throw Error(Errc::NetworkFailure, server.to_string() + ": " + std::strerror(errno));
    }
    if (::send(sock.get(), request.data(), request.size(), 0) < 0) {
        throw Error(Errc::NetworkFailure, server.to_string() + ": " + std::strerror(errno));
    }

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    Bytes buf(kMaxDatagram);
    while (true) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            throw Error(Errc::NetworkFailure, server.to_string() + ": timed out");
        }
        pollfd pfd{sock.get(), POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (ready < 0 && errno != EINTR) {
            throw Error(Errc::NetworkFailure, std::strerror(errno));
        }
        if (ready <= 0) {
            continue;
        }
        const auto n = ::recv(sock.get(), buf.data(), buf.size(), 0);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw Error(Errc::NetworkFailure, server.to_string() + ": " + std::strerror(errno));
        }
        if (n >= 2 && buf[0] == request[0] && buf[1] == request[1]) {
            buf.resize(static_cast<std::size_t>(n));
            return buf;
        }
    }
}

WireResponse query(const Endpoint& server, const DomainName& name, RecordType qtype,
                   std::chrono::milliseconds timeout) {
    WireQuery q;
    q.id = random_id();
    q.flags = flag::RD;
    q.qname = name;
    q.qtype = qtype;
    return decode_response(udp_exchange(server, encode_query(q), timeout));
}

UdpUpstream::UdpUpstream(Endpoint server, std::chrono::milliseconds timeout, int retries)
    : server_(std::move(server)), timeout_(timeout), retries_(retries) {}

ResolutionResult UdpUpstream::forward(const DomainName& name, RecordType qtype) {
    std::string last_error;
    for (int attempt = 0; attempt <= retries_; ++attempt) {
        try {
            const auto response = query(server_, name, qtype, timeout_);
            ResolutionResult result;
            result.rcode = rcode_from_wire(response.rcode());
            if (result.rcode == Rcode::NoError) {
                result.answers = response.answers;
            }
            return result;
        } catch (const Error& e) {
            last_error = e.what();
        }
    }
    throw Error(Errc::NetworkFailure, "upstream " + server_.to_string() + ": " + last_error);
}

UdpServer::UdpServer(ServerOptions options, Resolver& resolver)
    : options_(std::move(options)), resolver_(resolver) {
    sockaddr_storage addr{};
    socklen_t len = 0;
    if (options_.bind_address.find(':') != std::string::npos) {
        auto* in6 = reinterpret_cast<sockaddr_in6*>(&addr);
        in6->sin6_family = AF_INET6;
        in6->sin6_port = htons(options_.port);
        if (inet_pton(AF_INET6, options_.bind_address.c_str(), &in6->sin6_addr) != 1) {
            throw Error(Errc::BindFailure, "bad bind address " + options_.bind_address);
        }
        len = sizeof(sockaddr_in6);
    } else {
        auto* in = reinterpret_cast<sockaddr_in*>(&addr);
        in->sin_family = AF_INET;
        in->sin_port = htons(options_.port);
        if (inet_pton(AF_INET, options_.bind_address.c_str(), &in->sin_addr) != 1) {
            throw Error(Errc::BindFailure, "bad bind address " + options_.bind_address);
        }
        len = sizeof(sockaddr_in);
    }

    fd_ = ::socket(addr.ss_family, SOCK_DGRAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) {
        throw Error(Errc::BindFailure, std::strerror(errno));
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), len) != 0) {
        const std::string reason = std::strerror(errno);
        ::close(fd_);
        fd_ = -1;
        throw Error(Errc::BindFailure,
                    options_.bind_address + ":" + std::to_string(options_.port) + ": " + reason);
    }
    sockaddr_storage bound{};
    socklen_t bound_len = sizeof bound;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &bound_len);
    port_ = ntohs(bound.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port
                                              : reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
}

UdpServer::~UdpServer() {
    stop();
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

void UdpServer::start() {
    if (running_.exchange(true)) {
        return;
    }
    const auto n = std::max<std::size_t>(1, options_.workers);
    for (std::size_t i = 0; i < n; ++i) {
        threads_.emplace_back([this] { worker(); });
    }
}

void UdpServer::stop() {
    running_ = false;
    for (auto& t : threads_) {
        if (t.joinable()) {
            t.join();
        }
    }
    threads_.clear();
}

void UdpServer::worker() {
    Bytes buf(kMaxDatagram + 1);
    while (running_) {
        pollfd pfd{fd_, POLLIN, 0};
        if (::poll(&pfd, 1, 100) <= 0) {
            continue;
        }
        sockaddr_storage peer{};
        socklen_t peer_len = sizeof peer;
        const auto n = ::recvfrom(fd_, buf.data(), buf.size(), MSG_DONTWAIT,
                                  reinterpret_cast<sockaddr*>(&peer), &peer_len);
        if (n < 0) {
            continue; // another worker took it
        }
        ++datagrams_;
        const auto started = std::chrono::steady_clock::now();
        const std::span<const std::uint8_t> datagram(buf.data(), static_cast<std::size_t>(n));

        std::optional<Bytes> reply;
        QueryLog log;
        try {
            reply = handle_datagram(datagram, resolver_);
        } catch (const std::exception&) {
            reply = encode_error(datagram, static_cast<std::uint8_t>(Rcode::ServFail));
        }
        if (reply) {
            ::sendto(fd_, reply->data(), reply->size(), 0, reinterpret_cast<sockaddr*>(&peer), peer_len);
        }

        if (options_.on_query) {
            log.client = peer_to_string(peer);
            try {
                const auto q = decode_query(datagram);
                log.qname = q.qname.to_string();
                log.qtype = q.qtype;
            } catch (const Error&) {
            }
            if (reply && reply->size() >= kHeaderSize) {
                const auto flags = static_cast<std::uint16_t>((*reply)[2] << 8 | (*reply)[3]);
                const auto rc = static_cast<std::uint8_t>(flags & flag::RcodeMask);
                if (rc == 0 || rc == 2 || rc == 3) {
                    log.rcode = static_cast<Rcode>(rc);
                }
                log.answers = static_cast<std::size_t>((*reply)[6] << 8 | (*reply)[7]);
            }
            log.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
                std::chrono::steady_clock::now() - started);
            options_.on_query(log);
        }
    }
}

} // namespace ddns::wire
