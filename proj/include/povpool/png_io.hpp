#pragma once

#include "povpool/image.hpp"

#include <filesystem>

namespace povpool {

/// Decode a PNG to 8-bit RGB. Palette, gray and alpha variants are
/// expanded/stripped; 16-bit depth is reduced to 8.
Image read_png(const std::filesystem::path& path);

/// Encode 8-bit RGB with fixed settings so identical pixels give
/// identical bytes.
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace povpool
