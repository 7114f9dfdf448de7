#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chaneff/stimulus.hpp"

namespace chaneff::stimulus {

/// 8-bit RGB, non-interlaced, filter None, zlib level 6, no ancillary chunks.
/// Identical images always produce identical bytes.
std::vector<std::uint8_t> encode_png(const RasterImage& img);

/// Decodes any 8-bit PNG to RGB8 (palette/grey are expanded, alpha dropped).
/// Throws ParseError on malformed input.
RasterImage decode_png(std::span<const std::uint8_t> bytes);

}  // namespace chaneff::stimulus
