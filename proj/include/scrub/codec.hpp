#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scrub::codec {

std::string base64_encode(std::string_view bytes);
/// Throws FormatError on characters outside the standard alphabet or bad padding.
std::string base64_decode(std::string_view text);

void append_u32_le(std::string& out, std::uint32_t value);
std::uint32_t read_u32_le(std::string_view bytes, std::size_t offset);

/// Values narrowed to f32 and packed little-endian.
std::string pack_f32(std::span<const double> values);
std::vector<double> unpack_f32(std::string_view bytes);

std::string sha256_hex(std::string_view bytes);

/// Shortest decimal text that round-trips the double ('.' decimal separator).
std::string format_number(double value);

}  // namespace scrub::codec
