#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace synthcxr {

std::string base64_encode(const std::vector<std::uint8_t>& data);

/// Throws Error on malformed input.
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace synthcxr
