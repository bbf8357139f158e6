#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace patho {

/// Deterministic serialization: keys sorted, two-space indent, floats printed
/// with "%.12f" (negative zero as zero), non-finite floats as null.
std::string canonical_dump(const nlohmann::json& j);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace patho
