#include "ddns/content_store.hpp"

#include "ddns/errors.hpp"

#include <httplib.h>
#include <json.hpp>

namespace ddns {

namespace {

struct Endpoint {
    std::string origin; // scheme://host[:port]
    std::string prefix; // path prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    Endpoint ep;
    ep.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) {
        ep.prefix = url.substr(path_start);
        while (!ep.prefix.empty() && ep.prefix.back() == '/') {
            ep.prefix.pop_back();
        }
    }
    return ep;
}

} // namespace

PinningClient::PinningClient(PinningClientConfig config) : config_(std::move(config)) {}

std::size_t PinningClient::pinned_count() const {
    std::lock_guard lock(mutex_);
    return pinned_.size();
}

ContentId PinningClient::pin(std::string_view name, std::string_view payload) {
    const auto expected = compute_cid(payload);
    {
        std::lock_guard lock(mutex_);
        if (!pinned_.contains(expected.str()) && pinned_.size() >= config_.max_files) {
            throw Error(Errc::QuotaExceeded,
                        "pinning quota of " + std::to_string(config_.max_files) + " files reached");
        }
    }

    const auto ep = split_endpoint(config_.endpoint_url);
    httplib::Client client(ep.origin);
    if (!client.is_valid()) {
        throw Error(Errc::NetworkFailure, "unsupported endpoint " + config_.endpoint_url);
    }
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};
    const httplib::MultipartFormDataItems items{
        {"file", std::string(payload), std::string(name), "application/json"},
        {"pinataMetadata", nlohmann::json{{"name", std::string(name)}}.dump(), "",
         "application/json"},
    };
    auto res = client.Post(ep.prefix + "/pinning/pinFileToIPFS", headers, items);
    if (!res) {
        throw Error(Errc::NetworkFailure, httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
        throw Error(Errc::AuthFailure, "pinning service rejected the API key");
    }
    if (res->status == 429) {
        throw Error(Errc::QuotaExceeded, "pinning service quota reached");
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(Errc::NetworkFailure, "pinning service returned HTTP " + std::to_string(res->status));
    }

    std::string remote;
    try {
        remote = nlohmann::json::parse(res->body).at("IpfsHash").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::NetworkFailure, "unparseable pinning response: " + std::string(e.what()));
    }
    if (remote != expected.str()) {
        throw Error(Errc::RemoteMismatch, "remote " + remote + " != local " + expected.str());
    }

    std::lock_guard lock(mutex_);
    pinned_.insert(expected.str());
    return expected;
}

} // namespace ddns
