#include "ddns/registrar.hpp"

#include "ddns/errors.hpp"

#include <json.hpp>

#include <algorithm>

namespace ddns {

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(c >= 'a' && c <= 'z' ? c - 32 : c); });
    return out;
}

AssetPath tld_path(std::string_view tld, std::string_view root_suffix) {
    try {
        return domain_to_asset_path(
            DomainName::parse(std::string(tld) + "." + std::string(root_suffix)), root_suffix);
    } catch (const Error& e) {
        throw Error(Errc::ValidationFailure, e.what());
    }
}

} // namespace

RegistrarSession::RegistrarSession(KeyPair keypair, Ledger& ledger, ContentStore& store,
                                   std::string root_suffix, PinningClient* pinning)
    : keypair_(std::move(keypair)), owner_(keypair_.address()), ledger_(ledger), store_(store),
      root_suffix_(std::move(root_suffix)), pinning_(pinning) {}

std::string RegistrarSession::register_tld(std::string_view tld) {
    const auto path = tld_path(tld, root_suffix_);
    if (!path.is_root()) {
        throw Error(Errc::ValidationFailure, "'" + std::string(tld) + "' is not a single label");
    }
    return ledger_.create_root_asset(path, owner_, keypair_);
}

std::string RegistrarSession::add_subdomain(std::string_view tld, std::string_view sub,
                                            const Address& owner) {
    AssetPath path;
    try {
        const auto name = DomainName::parse(std::string(sub) + "." + std::string(tld) + "." + root_suffix_);
        path = domain_to_asset_path(name, root_suffix_);
    } catch (const Error& e) {
        throw Error(Errc::ValidationFailure, e.what());
    }
    if (path.is_root()) {
        throw Error(Errc::ValidationFailure, "empty subdomain");
    }
    const auto segment = path.subpath.back();
    return ledger_.create_sub_asset(path.parent(), segment, owner, keypair_);
}

AssetPath RegistrarSession::owned_path(const DomainName& domain) const {
    AssetPath path;
    try {
        path = domain_to_asset_path(domain, root_suffix_);
    } catch (const Error& e) {
        throw Error(Errc::ValidationFailure, e.what());
    }
    ledger_.sync();
    const auto record = ledger_.get_pending_asset(path);
    if (!record) {
        throw Error(Errc::UnknownAsset, path.to_string());
    }
    if (record->owner != owner_) {
        throw Error(Errc::NotOwner, owner_.text + " does not own " + path.to_string());
    }
    return path;
}

SetRecordResult RegistrarSession::set_record(const DomainName& domain, const RecordFile& records) {
    const auto path = owned_path(domain);
    const auto bytes = encode_record_file(records);
    const auto name = upper(domain.to_string());
    auto cid = pinning_ ? pin_remote(name, bytes, *pinning_, store_) : store_.put(bytes, name);
    auto txid = ledger_.set_binding(path, Binding::active(cid), keypair_);
    return {std::move(cid), std::move(txid)};
}

std::string RegistrarSession::disable_subdomain(const DomainName& domain) {
    return ledger_.set_binding(owned_path(domain), Binding::deactivated(), keypair_);
}

std::string RegistrarSession::transfer(const DomainName& domain, const Address& new_owner) {
    return ledger_.transfer_ownership(owned_path(domain), new_owner, keypair_);
}

void invalidate_on_blocks(Ledger& ledger, Resolver& resolver) {
    const auto suffix = resolver.config().root_suffix;
    ledger.add_block_listener([&resolver, suffix](const Block& block) {
        for (const auto& tx : block.txs) {
            try {
                resolver.invalidate(asset_path_to_domain(tx.path(), suffix));
            } catch (const Error&) {
            }
        }
    });
}

std::string rpc_envelope(const std::vector<std::string>& result, std::string_view id) {
    return nlohmann::ordered_json{{"result", result}, {"error", nullptr}, {"id", id}}.dump();
}

std::string rpc_error_envelope(int code, std::string_view message, std::string_view id) {
    return nlohmann::ordered_json{{"result", nullptr},
                                  {"error", {{"code", code}, {"message", message}}},
                                  {"id", id}}
        .dump();
}

} // namespace ddns
