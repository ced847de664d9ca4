#include "ddns/content_store.hpp"

#include "ddns/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

namespace ddns {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::NotFound, path.filename().string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_atomically(const fs::path& path, std::string_view data) {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    auto tmp = path;
    tmp += ".tmp" + std::to_string(rng());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out.write(data.data(), static_cast<std::streamsize>(data.size()))) {
            throw Error(Errc::StorageFailure, "cannot write " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(Errc::StorageFailure, "cannot rename into " + path.string());
    }
}

} // namespace

ContentId compute_cid(std::string_view payload) {
    if (payload.empty()) {
        throw Error(Errc::EmptyPayload, "cannot address an empty payload");
    }
    return ContentId::from_digest(sha256(payload));
}

ContentStore::ContentStore(fs::path root, std::size_t max_payload_bytes)
    : root_(std::move(root)), max_payload_bytes_(max_payload_bytes) {
    std::error_code ec;
    fs::create_directories(root_ / "objects", ec);
    if (ec) {
        throw Error(Errc::StorageFailure, "cannot create " + root_.string() + ": " + ec.message());
    }
    load_index();
}

fs::path ContentStore::object_path(const ContentId& cid) const {
    return root_ / "objects" / cid.str().substr(2, 2) / cid.str();
}

void ContentStore::load_index() {
    const auto path = root_ / "index.json";
    if (!fs::exists(path)) {
        return;
    }
    try {
        const auto doc = nlohmann::json::parse(read_file(path));
        for (const auto& [cid, entry] : doc.at("objects").items()) {
            IndexEntry e;
            e.size = entry.at("size").get<std::size_t>();
            if (entry.contains("name") && entry["name"].is_string()) {
                e.name = entry["name"].get<std::string>();
            }
            index_[cid] = std::move(e);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::StorageFailure, "corrupt index.json: " + std::string(e.what()));
    }
}

void ContentStore::save_index() const {
    nlohmann::json objects = nlohmann::json::object();
    for (const auto& [cid, e] : index_) {
        nlohmann::json entry{{"size", e.size}};
        if (e.name) {
            entry["name"] = *e.name;
        }
        objects[cid] = std::move(entry);
    }
    const nlohmann::json doc{{"version", 1}, {"objects", std::move(objects)}};
    write_atomically(root_ / "index.json", doc.dump(1));
}

ContentId ContentStore::put(std::string_view payload, std::optional<std::string> name) {
    if (payload.size() > max_payload_bytes_) {
        throw Error(Errc::PayloadTooLarge, std::to_string(payload.size()) + " bytes exceeds cap of " +
                                               std::to_string(max_payload_bytes_));
    }
    auto cid = compute_cid(payload);

    std::unique_lock lock(mutex_);
    const auto path = object_path(cid);
    if (!fs::exists(path)) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        write_atomically(path, payload);
    }
    auto& entry = index_[cid.str()];
    const bool changed = entry.size != payload.size() || (name && entry.name != name);
    entry.size = payload.size();
    if (name) {
        entry.name = std::move(name);
    }
    if (changed) {
        save_index();
    }
    return cid;
}

std::string ContentStore::get(const ContentId& cid) const {
    std::shared_lock lock(mutex_);
    auto bytes = read_file(object_path(cid));
    if (bytes.empty() || compute_cid(bytes) != cid) {
        throw Error(Errc::IntegrityMismatch, cid.str());
    }
    return bytes;
}

std::string ContentStore::get(std::string_view cid_text) const {
    if (is_initial_sentinel(cid_text) || is_deactivated_sentinel(cid_text)) {
        throw Error(Errc::SentinelCid, std::string(cid_text));
    }
    return get(ContentId::parse(cid_text));
}

StoredObject ContentStore::get_object(const ContentId& cid) const {
    StoredObject obj{cid, get(cid), std::nullopt};
    std::shared_lock lock(mutex_);
    if (const auto it = index_.find(cid.str()); it != index_.end()) {
        obj.pinned_name = it->second.name;
    }
    return obj;
}

bool ContentStore::contains(const ContentId& cid) const {
    std::shared_lock lock(mutex_);
    return fs::exists(object_path(cid));
}

bool ContentStore::remove(const ContentId& cid) {
    std::unique_lock lock(mutex_);
    std::error_code ec;
    const bool removed = fs::remove(object_path(cid), ec);
    if (index_.erase(cid.str()) > 0) {
        save_index();
    }
    return removed;
}

std::size_t ContentStore::size() const {
    std::shared_lock lock(mutex_);
    return index_.size();
}

std::vector<ContentId> ContentStore::list() const {
    std::shared_lock lock(mutex_);
    std::vector<ContentId> out;
    out.reserve(index_.size());
    for (const auto& [cid, _] : index_) {
        out.push_back(ContentId::parse(cid));
    }
    return out;
}

std::vector<std::string> ContentStore::fsck() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> bad;
    for (const auto& entry : fs::recursive_directory_iterator(root_ / "objects")) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const auto name = entry.path().filename().string();
        if (name.find(".tmp") != std::string::npos) {
            continue;
        }
        try {
            const auto cid = ContentId::parse(name);
            const auto bytes = read_file(entry.path());
            if (bytes.empty() || compute_cid(bytes) != cid) {
                bad.push_back(name);
            }
        } catch (const Error&) {
            bad.push_back(name);
        }
    }
    return bad;
}

ContentId pin_remote(std::string_view name, std::string_view payload, PinningClient& client,
                     ContentStore& store) {
    auto cid = client.pin(name, payload);
    store.put(payload, std::string(name));
    return cid;
}

} // namespace ddns
