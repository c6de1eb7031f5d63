#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace acgen::util {

using Bytes = std::vector<std::uint8_t>;

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);
std::string sha256_hex(std::span<const std::uint8_t> data);

/// SHA-256 over the canonical serialization (sorted keys, no whitespace).
std::string canonical_hash(const nlohmann::json& value);
std::string canonical_dump(const nlohmann::json& value);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string base64_encode(std::span<const std::uint8_t> data);
/// Strict RFC 4648 decoding; throws Error(InvalidArgument) on malformed input.
Bytes base64_decode(std::string_view text);
bool is_valid_base64(std::string_view text);

}  // namespace acgen::util
