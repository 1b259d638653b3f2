#pragma once

#include <cstdint>
#include <string>

namespace fcrl {

std::uint64_t fnv1a64(const std::string& s);
std::string hash_hex(const std::string& s);  // 16 hex digits

}  // namespace fcrl
