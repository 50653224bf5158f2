#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ragfb {

/// SHA-256 of `data`, lowercase hex (64 chars).
std::string sha256_hex(std::string_view data);

/// HMAC-SHA256 keyed by `key`, lowercase hex (64 chars).
std::string hmac_sha256_hex(std::string_view key, std::string_view data);

/// CRC32 (zlib polynomial) of `data`.
std::uint32_t crc32_of(std::string_view data);

/// Request fingerprint used by the gateway mock/replay machinery.
/// Deliberately covers the user text only; system text and sampling
/// parameters are constant within a run.
std::string prompt_fingerprint(std::string_view user_text);

}  // namespace ragfb
