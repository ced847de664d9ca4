#pragma once

#include "ddns/crypto.hpp"

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ddns {

inline constexpr std::string_view kDefaultRootSuffix = "ddns";
inline constexpr std::size_t kMaxLabelLength = 63;
inline constexpr std::size_t kMaxNameLength = 253;
inline constexpr std::size_t kMaxRootLength = 32;
inline constexpr std::size_t kMaxSubpathLength = 30;

/// A lowercase DNS name, most-specific label first. Labels are 1-63
/// characters from [a-z0-9-] without a leading or trailing hyphen.
class DomainName {
public:
    DomainName() = default;

    // Splits on '.', lowercases, strips one trailing dot.
    // Throws Error(EmptyLabel | IllegalCharacter | TooLong).
    static DomainName parse(std::string_view text);
    static DomainName from_labels(std::vector<std::string> labels);

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }

    std::string to_string() const;

    bool operator==(const DomainName&) const = default;
    auto operator<=>(const DomainName&) const = default;

private:
    explicit DomainName(std::vector<std::string> labels) : labels_(std::move(labels)) {}

    std::vector<std::string> labels_;
};

/// On-ledger asset identifier, rendered `ROOT/SEG1/SEG2`. Segments are
/// ordered from the pTLD outward, so `a.b.xxx.ddns` is `XXX/B/A`.
struct AssetPath {
    std::string root;
    std::vector<std::string> subpath;

    bool is_root() const noexcept { return subpath.empty(); }
    AssetPath parent() const;
    AssetPath child(std::string segment) const;
    std::size_t subpath_length() const noexcept;

    std::string to_string() const;
    // Parses the rendered form and validates it.
    static AssetPath parse(std::string_view text);

    bool operator==(const AssetPath&) const = default;
    auto operator<=>(const AssetPath&) const = default;
};

// Throws Error(RootTooLong | SubpathTooLong | IllegalCharacter).
void validate_asset_path(const AssetPath& path);

// Throws Error(NotDdnsName) when the name is not below root_suffix and
// Error(ValidationFailure) when the result breaks the asset length rules.
AssetPath domain_to_asset_path(const DomainName& name,
                               std::string_view root_suffix = kDefaultRootSuffix);
DomainName asset_path_to_domain(const AssetPath& path,
                                std::string_view root_suffix = kDefaultRootSuffix);

// Ledger encodings of the two reserved bindings. Neither is a ContentId.
inline const std::string kInitialSentinel(64, '0');
inline const std::string kDeactivatedSentinel = "Qm" + std::string(44, '0');

bool is_initial_sentinel(std::string_view text) noexcept;
bool is_deactivated_sentinel(std::string_view text) noexcept;

/// Version-0 style content identifier: base58btc of the sha2-256 multihash
/// (0x12 0x20 || digest), always 46 characters starting with "Qm".
class ContentId {
public:
    static constexpr std::size_t kLength = 46;

    // Throws Error(InvalidCid); sentinels are rejected here.
    static ContentId parse(std::string_view text);
    static ContentId from_digest(const Sha256Digest& digest);

    const std::string& str() const noexcept { return text_; }
    Sha256Digest digest() const;

    bool operator==(const ContentId&) const = default;
    auto operator<=>(const ContentId&) const = default;

private:
    explicit ContentId(std::string text) : text_(std::move(text)) {}

    std::string text_;
};

/// Current pointer from a domain asset to its record file.
class Binding {
public:
    enum class Kind { Initial, Active, Deactivated };

    static Binding initial() { return Binding(Kind::Initial, std::nullopt); }
    static Binding deactivated() { return Binding(Kind::Deactivated, std::nullopt); }
    static Binding active(ContentId cid) { return Binding(Kind::Active, std::move(cid)); }

    // Accepts the 64-zero sentinel, the deactivation sentinel, or a valid cid.
    static Binding from_ledger_text(std::string_view text);
    std::string ledger_text() const;

    Kind kind() const noexcept { return kind_; }
    bool is_active() const noexcept { return kind_ == Kind::Active; }
    // Precondition: is_active().
    const ContentId& cid() const { return *cid_; }

    bool operator==(const Binding&) const = default;

private:
    Binding(Kind kind, std::optional<ContentId> cid) : kind_(kind), cid_(std::move(cid)) {}

    Kind kind_;
    std::optional<ContentId> cid_;
};

} // namespace ddns
