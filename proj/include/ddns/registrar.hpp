#pragma once

#include "ddns/content_store.hpp"
#include "ddns/domain_model.hpp"
#include "ddns/ledger.hpp"
#include "ddns/record_file.hpp"
#include "ddns/resolver.hpp"

#include <string>
#include <string_view>

namespace ddns {

struct SetRecordResult {
    ContentId cid;
    std::string txid;
};

/// Owner-side workflows: encode records, store (and optionally pin) them,
/// then sign the ledger transaction that points the domain at them.
class RegistrarSession {
public:
    RegistrarSession(KeyPair keypair, Ledger& ledger, ContentStore& store,
                     std::string root_suffix = std::string(kDefaultRootSuffix),
                     PinningClient* pinning = nullptr);

    const Address& owner_address() const noexcept { return owner_; }
    const KeyPair& keypair() const noexcept { return keypair_; }

    // `tld` is the pTLD label, e.g. "xxx". Returns the txid.
    std::string register_tld(std::string_view tld);

    // `sub` is relative to the tld and may hold several labels ("a.b");
    // the session must own the immediate parent asset.
    std::string add_subdomain(std::string_view tld, std::string_view sub, const Address& owner);

    SetRecordResult set_record(const DomainName& domain, const RecordFile& records);

    std::string disable_subdomain(const DomainName& domain);

    std::string transfer(const DomainName& domain, const Address& new_owner);

private:
    AssetPath owned_path(const DomainName& domain) const;

    KeyPair keypair_;
    Address owner_;
    Ledger& ledger_;
    ContentStore& store_;
    std::string root_suffix_;
    PinningClient* pinning_;
};

// Invalidates cached answers for every name whose asset a block touches.
void invalidate_on_blocks(Ledger& ledger, Resolver& resolver);

// {"result": [ids...], "error": null, "id": id}
std::string rpc_envelope(const std::vector<std::string>& result, std::string_view id);
std::string rpc_error_envelope(int code, std::string_view message, std::string_view id);

} // namespace ddns
