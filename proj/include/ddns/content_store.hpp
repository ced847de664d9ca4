#pragma once

#include "ddns/domain_model.hpp"

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace ddns {

inline constexpr std::size_t kDefaultMaxPayloadBytes = 64 * 1024;

// CID over the exact payload bytes. Throws Error(EmptyPayload).
ContentId compute_cid(std::string_view payload);

/// Read side of a content-addressed store, as seen by the resolver.
class ContentFetcher {
public:
    virtual ~ContentFetcher() = default;
    // Throws Error(NotFound | IntegrityMismatch).
    virtual std::string get(const ContentId& cid) const = 0;
};

struct StoredObject {
    ContentId cid;
    std::string bytes;
    std::optional<std::string> pinned_name;
};

/// Local persistent store. Layout under `root`:
///
///   objects/<cid[2:4]>/<cid>   raw payload bytes
///   index.json                 {"version":1,"objects":{cid:{"size":n,"name":s}}}
///
/// Every file is written to a temporary name and renamed into place. Reads
/// go to the object files, so objects written by another process are
/// visible without reloading the index.
class ContentStore : public ContentFetcher {
public:
    explicit ContentStore(std::filesystem::path root,
                          std::size_t max_payload_bytes = kDefaultMaxPayloadBytes);

    // Idempotent by content. Throws Error(EmptyPayload | PayloadTooLarge |
    // StorageFailure).
    ContentId put(std::string_view payload, std::optional<std::string> name = std::nullopt);

    std::string get(const ContentId& cid) const override;
    // Text form: sentinels raise SentinelCid, other bad text InvalidCid.
    std::string get(std::string_view cid_text) const;
    StoredObject get_object(const ContentId& cid) const;

    bool contains(const ContentId& cid) const;
    bool remove(const ContentId& cid);

    // Number of objects recorded in this process's view of the index.
    std::size_t size() const;
    std::vector<ContentId> list() const;

    // Re-hashes every object file on disk; returns the ids that no longer
    // match their content (or whose file name is not a valid cid).
    std::vector<std::string> fsck() const;

    std::filesystem::path object_path(const ContentId& cid) const;
    const std::filesystem::path& root() const noexcept { return root_; }

private:
    struct IndexEntry {
        std::size_t size = 0;
        std::optional<std::string> name;
    };

    void load_index();
    void save_index() const;

    std::filesystem::path root_;
    std::size_t max_payload_bytes_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, IndexEntry> index_;
};

struct PinningClientConfig {
    std::string endpoint_url;
    std::string api_key;
    std::size_t max_files = 500;
    std::chrono::milliseconds timeout{5000};
};

/// Client for a Pinata-style pinning service:
/// POST {endpoint}/pinning/pinFileToIPFS, multipart "file" plus
/// "pinataMetadata" {"name": ...}, bearer key; reply carries "IpfsHash".
class PinningClient {
public:
    explicit PinningClient(PinningClientConfig config);

    // Throws Error(AuthFailure | QuotaExceeded | RemoteMismatch |
    // NetworkFailure | EmptyPayload).
    ContentId pin(std::string_view name, std::string_view payload);

    std::size_t pinned_count() const;
    const PinningClientConfig& config() const noexcept { return config_; }

private:
    PinningClientConfig config_;
    mutable std::mutex mutex_;
    std::set<std::string> pinned_;
};

// Pins remotely, checks the returned id against the local one, then stores
// the payload locally under `name`.
ContentId pin_remote(std::string_view name, std::string_view payload, PinningClient& client,
                     ContentStore& store);

} // namespace ddns
