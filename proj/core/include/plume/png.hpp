#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

namespace plume {

/// Minimal RGB8 PNG writer (zlib-compressed, filter 0 rows).
void write_png_rgb(const std::filesystem::path& path, int width, int height,
                   std::span<const std::uint8_t> rgb);

}  // namespace plume
