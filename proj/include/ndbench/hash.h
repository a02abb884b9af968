#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace ndbench {

using Md5Digest = std::array<std::uint8_t, 16>;

Md5Digest md5_bytes(const void* data, std::size_t len);
Md5Digest md5_string(std::string_view s);

/// Digest of a file's raw bytes. Throws input_error if unreadable.
Md5Digest md5_file(const std::string& path);

std::string to_hex(const Md5Digest& d);

/// Parses 32 hex characters. Throws input_error on bad input.
Md5Digest md5_from_hex(std::string_view hex);

}  // namespace ndbench
