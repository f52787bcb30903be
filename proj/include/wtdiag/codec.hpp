#pragma once

// Byte-level helpers shared by the on-disk formats.

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wtdiag::codec {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws FormatError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Little-endian float64 payloads.
std::vector<std::uint8_t> pack_doubles(std::span<const double> values);
std::vector<double> unpack_doubles(std::span<const std::uint8_t> bytes);

std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(std::string_view text);

/// Interleaved (re, im) pairs.
std::string encode_complex(std::span<const std::complex<double>> values);
std::vector<std::complex<double>> decode_complex(std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);

std::string hex64(std::uint64_t v);

}  // namespace wtdiag::codec
