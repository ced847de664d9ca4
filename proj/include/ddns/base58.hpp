#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ddns::base58 {

// Bitcoin/IPFS alphabet (base58btc).
inline constexpr std::string_view kAlphabet =
    "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

std::string encode(std::span<const std::uint8_t> bytes);

// nullopt when the text contains a character outside the alphabet.
std::optional<std::vector<std::uint8_t>> decode(std::string_view text);

} // namespace ddns::base58
