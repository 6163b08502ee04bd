// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace synqa {

using Sha256Digest = std::array<std::uint8_t, 32>;

Sha256Digest sha256(std::string_view data);
std::string to_hex(const Sha256Digest& digest);
inline std::string sha256_hex(std::string_view data) { return to_hex(sha256(data)); }

/// First eight digest bytes read as a big-endian integer.
std::uint64_t leading_u64(const Sha256Digest& digest);

}  // namespace synqa
