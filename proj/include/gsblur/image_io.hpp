#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsblur/image.hpp"

namespace gsblur {

// 8-bit PNG, RGB or grayscale. Encoding is deterministic (fixed zlib
// settings) so identical pixel content yields identical bytes.
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(const std::vector<std::uint8_t>& bytes);

void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

// Quantize float [0,1] to the 8-bit grid and back; the fixed point of the
// PNG round trip.
Image quantize_u8(const Image& img);

// PFM float image (1 or 3 channel), little-endian.
void write_pfm(const std::string& path, const Image& img);
Image read_pfm(const std::string& path);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace gsblur
