#include "ddns/dns_wire.hpp"
#include "ddns/errors.hpp"
#include "generators.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <future>
#include <map>
#include <random>

using namespace ddns;
using namespace ddns::wire;
using namespace std::chrono_literals;
using ddns::test::StubDnsServer;
using ddns::test::TempDir;

namespace {

// Captured from dnspython's dns.message.make_query (second one with EDNS).
constexpr const char* kWwwQueryHex = "12340100000100000000000003777777037878780464646e730000010001";
constexpr const char* kMailQueryHex =
    "beef01000001000000000001046d61696c037878780464646e7300000f000100002904d0000000000000";

template <typename F>
Errc error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::ValidationFailure;
}

class MapBindings : public BindingLookup {
public:
    Binding get_binding(const AssetPath& path) const override {
        const auto it = bindings.find(path.to_string());
        if (it == bindings.end()) throw Error(Errc::UnknownAsset, path.to_string());
        return it->second;
    }
    std::map<std::string, Binding> bindings;
};

struct ServerFixture : ::testing::Test {
    TempDir dir;
    ContentStore store{dir.path()};
    MapBindings ledger;
    Resolver resolver{ResolverConfig{}, ledger, store, nullptr};

    ServerFixture() {
        ledger.bindings.insert_or_assign("XXX/WWW", Binding::active(store.put(R"({"Type":"A","Address":"1.2.3.4"})")));
        ledger.bindings.insert_or_assign(
            "XXX/MAIL", Binding::active(store.put(R"({"Type":"MX","MailServer":"mail.example.com","TTL":3600,"Priority":10})")));
        ledger.bindings.insert_or_assign("XXX/OFF", Binding::deactivated());
    }
};

int udp_socket() {
    const int fd = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    return fd;
}

} // namespace

TEST(WireQuery, RoundTripsCanonicalQuery) {
    WireQuery q{0x1234, flag::RD, DomainName::parse("www.xxx.ddns"), RecordType::A, kClassIn, {}};
    const auto bytes = encode_query(q);
    EXPECT_EQ(to_hex(bytes), kWwwQueryHex);
    EXPECT_EQ(decode_query(bytes), q);
}

TEST(WireQuery, DecodesCapturedDatagrams) {
    const auto www = decode_query(from_hex(kWwwQueryHex));
    EXPECT_EQ(www.id, 0x1234);
    EXPECT_EQ(www.qname.to_string(), "www.xxx.ddns");
    EXPECT_EQ(www.qtype, RecordType::A);

    const auto mail = decode_query(from_hex(kMailQueryHex));
    EXPECT_EQ(mail.id, 0xbeef);
    EXPECT_EQ(mail.qname.to_string(), "mail.xxx.ddns");
    EXPECT_EQ(mail.qtype, RecordType::MX);
    EXPECT_EQ(to_hex(mail.question_bytes), "046d61696c037878780464646e7300000f0001");
}

TEST(WireQuery, UppercaseQuestionIsNormalisedButEchoed) {
    WireQuery q{7, flag::RD, DomainName::parse("www.xxx.ddns"), RecordType::A, kClassIn, {}};
    auto bytes = encode_query(q);
    bytes[13] = 'W';
    const auto back = decode_query(bytes);
    EXPECT_EQ(back.qname.to_string(), "www.xxx.ddns");
    const auto resp = decode_response(encode_response(back, {}));
    EXPECT_EQ(resp.qname, "Www.xxx.ddns");
}

TEST(WireQuery, Errors) {
    const auto good = from_hex(kWwwQueryHex);
    EXPECT_EQ(error_of([] { decode_query(Bytes(11, 0)); }), Errc::Truncated);
    EXPECT_EQ(error_of([&] { decode_query(std::span(good).first(20)); }), Errc::Truncated);
    auto opcode = good;
    opcode[2] |= 0x10; // opcode 2 (status)
    EXPECT_EQ(error_of([&] { decode_query(opcode); }), Errc::UnsupportedOpcode);
    auto response = good;
    response[2] |= 0x80;
    EXPECT_EQ(error_of([&] { decode_query(response); }), Errc::FormErr);
    auto two_questions = good;
    two_questions[5] = 2;
    EXPECT_EQ(error_of([&] { decode_query(two_questions); }), Errc::FormErr);
    auto loop = good;
    loop[12] = 0xC0;
    loop[13] = 12;
    EXPECT_EQ(error_of([&] { decode_query(loop); }), Errc::FormErr);
}

TEST(WireResponse, ABytes) {
    const auto q = decode_query(from_hex(kWwwQueryHex));
    const auto bytes =
        encode_response(q, {Rcode::NoError, {{"www.xxx.ddns", RecordType::A, 60, Ipv4Data{{1, 2, 3, 4}}}}, {}});
    const auto hex = to_hex(bytes);
    // header: id, QR|RD|RA, 1 question, 1 answer
    EXPECT_EQ(hex.substr(0, 24), "123481800001000100000000");
    EXPECT_EQ(hex.substr(24, 36), std::string(kWwwQueryHex).substr(24));
    EXPECT_EQ(hex.substr(hex.size() - 12), "000401020304");
}

TEST(WireResponse, NxDomainHasRcode3AndNoAnswers) {
    const auto q = decode_query(from_hex(kWwwQueryHex));
    const auto bytes = encode_response(q, {Rcode::NxDomain, {}, {}});
    EXPECT_EQ(bytes[3] & 0x0f, 3);
    EXPECT_EQ(bytes[6], 0);
    EXPECT_EQ(bytes[7], 0);
    EXPECT_EQ(decode_response(bytes).rcode(), 3);
}

TEST(WireResponse, MxPreferencePrecedesExchange) {
    const auto q = decode_query(from_hex(kMailQueryHex));
    const auto bytes = encode_response(
        q, {Rcode::NoError, {{"mail.xxx.ddns", RecordType::MX, 3600, MxData{10, "mail.example.com"}}}, {}});
    const auto hex = to_hex(bytes);
    const std::string rdata = "000a046d61696c076578616d706c6503636f6d00";
    EXPECT_NE(hex.find("00000e10" + std::string("0014") + rdata), std::string::npos) << hex;
    const auto r = decode_response(bytes);
    ASSERT_EQ(r.answers.size(), 1u);
    EXPECT_EQ(std::get<MxData>(r.answers[0].data), (MxData{10, "mail.example.com"}));
}

TEST(WireResponse, TruncatesAt512Bytes) {
    const auto q = decode_query(from_hex(kWwwQueryHex));
    ResolutionResult big;
    for (int i = 0; i < 40; ++i) {
        big.answers.push_back({"www.xxx.ddns", RecordType::A, 60, Ipv4Data{{10, 0, 0, static_cast<std::uint8_t>(i)}}});
    }
    const auto bytes = encode_response(q, big);
    EXPECT_LE(bytes.size(), kMaxUdpResponse);
    const auto r = decode_response(bytes);
    EXPECT_TRUE(r.truncated());
    EXPECT_GT(r.answers.size(), 10u);
    EXPECT_LT(r.answers.size(), 40u);
}

TEST(WireResponse, FollowsCompressionPointers) {
    // Hand-built: answer owner is a pointer to the question name, CNAME
    // target ends in a pointer to "xxx.ddns".
    const auto bytes = from_hex(
        "abcd81800001000100000000"
        "03777777037878780464646e730000050001"
        "c00c000500010000003c0008"
        "05616c696173c010");
    const auto r = decode_response(bytes);
    ASSERT_EQ(r.answers.size(), 1u);
    EXPECT_EQ(r.answers[0].name, "www.xxx.ddns");
    EXPECT_EQ(std::get<NameData>(r.answers[0].data).name, "alias.xxx.ddns");
}

TEST(WireError, HeaderOnlyReplies) {
    const auto good = from_hex(kWwwQueryHex);
    const auto err = encode_error(good, kRcodeFormErr);
    ASSERT_TRUE(err);
    EXPECT_EQ(to_hex(*err), "123481010000000000000000");
    EXPECT_FALSE(encode_error(Bytes{0x12}, kRcodeFormErr));
    EXPECT_EQ(rcode_from_wire(3), Rcode::NxDomain);
    EXPECT_EQ(rcode_from_wire(5), Rcode::ServFail);
}

TEST(WireProperty, TenThousandQueriesRoundTrip) {
    std::mt19937 rng(11);
    for (int i = 0; i < 10000; ++i) {
        WireQuery q{static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng() & (flag::RD | 0x0010)),
                    DomainName::parse(gen::wire_name(rng)), static_cast<RecordType>(1 + rng() % 300), kClassIn, {}};
        const auto bytes = encode_query(q);
        const auto back = decode_query(bytes);
        ASSERT_EQ(back, q) << to_hex(bytes);
        ASSERT_EQ(encode_query(back), bytes);
    }
}

TEST(WireProperty, TenThousandResponsesRoundTrip) {
    std::mt19937 rng(12);
    for (int i = 0; i < 10000; ++i) {
        WireQuery q{static_cast<std::uint16_t>(rng()), flag::RD, DomainName::parse(gen::wire_name(rng)),
                    RecordType::ANY, kClassIn, {}};
        ResolutionResult res;
        res.rcode = rng() % 4 == 0 ? Rcode::ServFail : Rcode::NoError;
        for (int n = static_cast<int>(rng() % 4); n > 0 && res.rcode == Rcode::NoError; --n) {
            res.answers.push_back(gen::answer(rng, q.qname.to_string()));
        }
        const auto bytes = encode_response(q, res);
        const auto back = decode_response(bytes);
        ASSERT_EQ(back.id, q.id);
        ASSERT_EQ(rcode_from_wire(back.rcode()), res.rcode);
        ASSERT_EQ(back.qname, q.qname.to_string());
        if (!back.truncated()) {
            ASSERT_EQ(back.answers, res.answers) << to_hex(bytes);
        }
    }
}

TEST_F(ServerFixture, HandleDatagram) {
    auto reply = handle_datagram(from_hex(kWwwQueryHex), resolver);
    ASSERT_TRUE(reply);
    auto r = decode_response(*reply);
    ASSERT_EQ(r.answers.size(), 1u);
    EXPECT_EQ(std::get<Ipv4Data>(r.answers[0].data).octets, (std::array<std::uint8_t, 4>{1, 2, 3, 4}));

    reply = handle_datagram(from_hex(kMailQueryHex), resolver);
    r = decode_response(*reply);
    ASSERT_EQ(r.answers.size(), 1u);
    EXPECT_EQ(std::get<MxData>(r.answers[0].data).preference, 10);

    auto chaos = from_hex(kWwwQueryHex);
    chaos.back() = 3;
    EXPECT_EQ(decode_response(*handle_datagram(chaos, resolver)).rcode(), kRcodeNotImp);
    auto status = from_hex(kWwwQueryHex);
    status[2] |= 0x10;
    EXPECT_EQ(decode_response(*handle_datagram(status, resolver)).rcode(), kRcodeNotImp);
    EXPECT_EQ(decode_response(*handle_datagram(Bytes(5, 0xff), resolver)).rcode(), kRcodeFormErr);
    EXPECT_FALSE(handle_datagram(Bytes{1}, resolver));
}

TEST_F(ServerFixture, ServesOverUdp) {
    std::vector<QueryLog> logs;
    std::mutex logs_mutex;
    ServerOptions opts;
    opts.port = 0;
    opts.on_query = [&](const QueryLog& log) {
        std::lock_guard lock(logs_mutex);
        logs.push_back(log);
    };
    UdpServer server(opts, resolver);
    server.start();
    const Endpoint ep{"127.0.0.1", server.port()};

    const auto a = query(ep, DomainName::parse("www.xxx.ddns"), RecordType::A);
    ASSERT_EQ(a.answers.size(), 1u);
    EXPECT_EQ(std::get<Ipv4Data>(a.answers[0].data).octets, (std::array<std::uint8_t, 4>{1, 2, 3, 4}));
    EXPECT_EQ(query(ep, DomainName::parse("off.xxx.ddns"), RecordType::A).rcode(), 3);

    server.stop();
    std::lock_guard lock(logs_mutex);
    ASSERT_EQ(logs.size(), 2u);
    EXPECT_EQ(logs[0].qname, "www.xxx.ddns");
    EXPECT_EQ(logs[0].rcode, Rcode::NoError);
    EXPECT_EQ(logs[0].answers, 1u);
    EXPECT_EQ(logs[1].rcode, Rcode::NxDomain);
}

TEST_F(ServerFixture, SurvivesGarbage) {
    ServerOptions opts;
    opts.port = 0;
    UdpServer server(opts, resolver);
    server.start();
    const int fd = udp_socket();
    sockaddr_in to{};
    to.sin_family = AF_INET;
    to.sin_port = htons(server.port());
    to.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    const std::uint8_t junk[] = {0xde, 0xad, 0xbe, 0xef, 0xff, 0xff, 0x00};
    ::sendto(fd, junk, sizeof junk, 0, reinterpret_cast<sockaddr*>(&to), sizeof to);
    ::sendto(fd, junk, 1, 0, reinterpret_cast<sockaddr*>(&to), sizeof to);
    pollfd pfd{fd, POLLIN, 0};
    ASSERT_EQ(::poll(&pfd, 1, 2000), 1);
    std::uint8_t buf[512];
    const auto n = ::recv(fd, buf, sizeof buf, 0);
    ASSERT_EQ(n, 12);
    EXPECT_EQ(buf[0], 0xde);
    EXPECT_EQ(buf[3] & 0x0f, kRcodeFormErr);
    ::close(fd);
    EXPECT_EQ(query({"127.0.0.1", server.port()}, DomainName::parse("www.xxx.ddns"), RecordType::A).answers.size(), 1u);
}

TEST_F(ServerFixture, HundredConcurrentClientsGetTheirOwnIds) {
    ServerOptions opts;
    opts.port = 0;
    UdpServer server(opts, resolver);
    server.start();
    const Endpoint ep{"127.0.0.1", server.port()};
    std::vector<std::future<bool>> clients;
    for (int i = 0; i < 100; ++i) {
        clients.push_back(std::async(std::launch::async, [&ep, i] {
            const WireQuery q{static_cast<std::uint16_t>(1000 + i), flag::RD,
                              DomainName::parse(i % 2 ? "www.xxx.ddns" : "mail.xxx.ddns"),
                              i % 2 ? RecordType::A : RecordType::MX, kClassIn, {}};
            const auto reply = decode_response(udp_exchange(ep, encode_query(q), 3s));
            return reply.id == q.id && reply.answers.size() == 1 && reply.answers[0].type == q.qtype;
        }));
    }
    int ok = 0;
    for (auto& c : clients) ok += c.get() ? 1 : 0;
    EXPECT_EQ(ok, 100);
    EXPECT_GE(server.datagrams(), 100u);
}

TEST_F(ServerFixture, BindFailureOnOccupiedPort) {
    ServerOptions opts;
    opts.port = 0;
    UdpServer first(opts, resolver);
    opts.port = first.port();
    EXPECT_EQ(error_of([&] { UdpServer second(opts, resolver); }), Errc::BindFailure);
}

TEST(Endpoint, Parse) {
    const auto a = Endpoint::parse("1.1.1.1:53");
    EXPECT_EQ(a.host, "1.1.1.1");
    EXPECT_EQ(a.port, 53);
    EXPECT_EQ(Endpoint::parse("localhost", 5553).port, 5553);
    EXPECT_EQ(Endpoint::parse("127.0.0.1:5553").to_string(), "127.0.0.1:5553");
    EXPECT_THROW(Endpoint::parse("host:notaport"), Error);
}

TEST(UdpUpstream, RelaysAnswersFromStubServer) {
    StubDnsServer stub;
    stub.add_a("example.com", {93, 184, 216, 34}, 120);
    UdpUpstream upstream({"127.0.0.1", stub.port()}, 500ms);
    const auto res = upstream.forward(DomainName::parse("example.com"), RecordType::A);
    EXPECT_EQ(res.rcode, Rcode::NoError);
    ASSERT_EQ(res.answers.size(), 1u);
    EXPECT_EQ(res.answers[0], (Answer{"example.com", RecordType::A, 120, Ipv4Data{{93, 184, 216, 34}}}));
    EXPECT_EQ(upstream.forward(DomainName::parse("missing.example"), RecordType::A).rcode, Rcode::NxDomain);
}

TEST(UdpUpstream, SilentServerIsNetworkFailureAfterRetry) {
    StubDnsServer stub;
    stub.set_silent(true);
    UdpUpstream upstream({"127.0.0.1", stub.port()}, 200ms, 1);
    EXPECT_EQ(error_of([&] { upstream.forward(DomainName::parse("example.com"), RecordType::A); }),
              Errc::NetworkFailure);
    EXPECT_EQ(stub.queries(), 2u);
}

TEST(UdpUpstream, ResolverForwardsTraditionalNames) {
    StubDnsServer stub;
    stub.add_a("example.com", {93, 184, 216, 34});
    TempDir dir;
    ContentStore store(dir.path());
    MapBindings ledger;
    UdpUpstream upstream({"127.0.0.1", stub.port()}, 500ms);
    Resolver resolver(ResolverConfig{}, ledger, store, &upstream);
    ServerOptions opts;
    opts.port = 0;
    UdpServer server(opts, resolver);
    server.start();
    const auto r = query({"127.0.0.1", server.port()}, DomainName::parse("example.com"), RecordType::A);
    ASSERT_EQ(r.answers.size(), 1u);
    EXPECT_EQ(std::get<Ipv4Data>(r.answers[0].data).octets, (std::array<std::uint8_t, 4>{93, 184, 216, 34}));
}
