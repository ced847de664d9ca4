#include "ddns/domain_model.hpp"

#include "ddns/base58.hpp"
#include "ddns/errors.hpp"

#include <algorithm>
#include <numeric>

namespace ddns {

namespace {

bool is_label_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
}

bool is_asset_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '_';
}

char to_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

char to_upper(char c) {
    return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
}

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), to_upper);
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), to_lower);
    return out;
}

void validate_label(const std::string& label) {
    if (label.empty()) {
        throw Error(Errc::EmptyLabel, "empty label");
    }
    if (label.size() > kMaxLabelLength) {
        throw Error(Errc::TooLong, "label longer than 63 characters");
    }
    if (!std::all_of(label.begin(), label.end(), is_label_char) || label.front() == '-' ||
        label.back() == '-') {
        throw Error(Errc::IllegalCharacter, "label '" + label + "'");
    }
}

void validate_segment(const std::string& segment, const char* what) {
    if (segment.empty() || !std::all_of(segment.begin(), segment.end(), is_asset_char)) {
        throw Error(Errc::IllegalCharacter, std::string(what) + " '" + segment + "'");
    }
}

} // namespace

DomainName DomainName::parse(std::string_view text) {
    if (!text.empty() && text.back() == '.') {
        text.remove_suffix(1);
    }
    std::vector<std::string> labels;
    std::size_t start = 0;
    while (true) {
        const auto dot = text.find('.', start);
        labels.push_back(lower(text.substr(start, dot - start)));
        if (dot == std::string_view::npos) {
            break;
        }
        start = dot + 1;
    }
    return from_labels(std::move(labels));
}

DomainName DomainName::from_labels(std::vector<std::string> labels) {
    if (labels.empty()) {
        throw Error(Errc::EmptyLabel, "name has no labels");
    }
    std::size_t length = labels.size() - 1;
    for (const auto& label : labels) {
        validate_label(label);
        length += label.size();
    }
    if (length > kMaxNameLength) {
        throw Error(Errc::TooLong, "name longer than 253 characters");
    }
    return DomainName(std::move(labels));
}

std::string DomainName::to_string() const {
    std::string out;
    for (const auto& label : labels_) {
        if (!out.empty()) {
            out.push_back('.');
        }
        out += label;
    }
    return out;
}

AssetPath AssetPath::parent() const {
    AssetPath p = *this;
    if (!p.subpath.empty()) {
        p.subpath.pop_back();
    }
    return p;
}

AssetPath AssetPath::child(std::string segment) const {
    AssetPath p = *this;
    p.subpath.push_back(std::move(segment));
    return p;
}

std::size_t AssetPath::subpath_length() const noexcept {
    return std::accumulate(subpath.begin(), subpath.end(), std::size_t{0},
                           [](std::size_t n, const std::string& s) { return n + s.size(); });
}

std::string AssetPath::to_string() const {
    std::string out = root;
    for (const auto& seg : subpath) {
        out.push_back('/');
        out += seg;
    }
    return out;
}

AssetPath AssetPath::parse(std::string_view text) {
    AssetPath path;
    std::size_t start = 0;
    bool first = true;
    while (true) {
        const auto slash = text.find('/', start);
        std::string part(text.substr(start, slash - start));
        if (first) {
            path.root = std::move(part);
            first = false;
        } else {
            path.subpath.push_back(std::move(part));
        }
        if (slash == std::string_view::npos) {
            break;
        }
        start = slash + 1;
    }
    validate_asset_path(path);
    return path;
}

void validate_asset_path(const AssetPath& path) {
    validate_segment(path.root, "root");
    if (path.root.size() > kMaxRootLength) {
        throw Error(Errc::RootTooLong, path.root);
    }
    for (const auto& seg : path.subpath) {
        validate_segment(seg, "segment");
    }
    if (path.subpath_length() > kMaxSubpathLength) {
        throw Error(Errc::SubpathTooLong, path.to_string());
    }
}

AssetPath domain_to_asset_path(const DomainName& name, std::string_view root_suffix) {
    const auto& labels = name.labels();
    if (labels.size() < 2 || labels.back() != root_suffix) {
        throw Error(Errc::NotDdnsName, name.to_string());
    }
    AssetPath path;
    path.root = upper(labels[labels.size() - 2]);
    for (std::size_t i = labels.size() - 2; i-- > 0;) {
        path.subpath.push_back(upper(labels[i]));
    }
    try {
        validate_asset_path(path);
    } catch (const Error& e) {
        throw Error(Errc::ValidationFailure, e.what());
    }
    return path;
}

DomainName asset_path_to_domain(const AssetPath& path, std::string_view root_suffix) {
    validate_asset_path(path);
    std::vector<std::string> labels;
    labels.reserve(path.subpath.size() + 2);
    for (auto it = path.subpath.rbegin(); it != path.subpath.rend(); ++it) {
        labels.push_back(lower(*it));
    }
    labels.push_back(lower(path.root));
    labels.emplace_back(root_suffix);
    return DomainName::from_labels(std::move(labels));
}

bool is_initial_sentinel(std::string_view text) noexcept {
    return text == kInitialSentinel;
}

bool is_deactivated_sentinel(std::string_view text) noexcept {
    return text == kDeactivatedSentinel;
}

ContentId ContentId::parse(std::string_view text) {
    if (text.size() != kLength || !text.starts_with("Qm")) {
        throw Error(Errc::InvalidCid, "'" + std::string(text) + "' is not a 46-character Qm hash");
    }
    const auto bytes = base58::decode(text);
    if (!bytes || bytes->size() != 34 || (*bytes)[0] != 0x12 || (*bytes)[1] != 0x20) {
        throw Error(Errc::InvalidCid, "'" + std::string(text) + "' is not a sha2-256 multihash");
    }
    return ContentId(std::string(text));
}

ContentId ContentId::from_digest(const Sha256Digest& digest) {
    std::array<std::uint8_t, 34> multihash{};
    multihash[0] = 0x12;
    multihash[1] = 0x20;
    std::copy(digest.begin(), digest.end(), multihash.begin() + 2);
    return ContentId(base58::encode(multihash));
}

Sha256Digest ContentId::digest() const {
    const auto bytes = base58::decode(text_);
    Sha256Digest out{};
    std::copy(bytes->begin() + 2, bytes->end(), out.begin());
    return out;
}

Binding Binding::from_ledger_text(std::string_view text) {
    if (is_initial_sentinel(text)) {
        return initial();
    }
    if (is_deactivated_sentinel(text)) {
        return deactivated();
    }
    return active(ContentId::parse(text));
}

std::string Binding::ledger_text() const {
    switch (kind_) {
    case Kind::Initial: return kInitialSentinel;
    case Kind::Deactivated: return kDeactivatedSentinel;
    case Kind::Active: return cid_->str();
    }
    return {};
}

} // namespace ddns
