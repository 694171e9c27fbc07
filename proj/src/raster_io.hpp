#pragma once

#include <filesystem>
#include <string>

#include "chem/core.hpp"

namespace chem {

// Float raster container: magic "CHEM", u16 version, u32 height, u32 width,
// then height*width little-endian doubles in row-major order.

inline constexpr std::uint16_t kRasterVersion = 1;

void write_raster(const std::filesystem::path& path, const ImageD& img);
ImageD read_raster(const std::filesystem::path& path);

/// 16-bit PGM preview, min-max scaled; scaling constants go into a header
/// comment. The float raster remains the source of truth.
void write_pgm16(const std::filesystem::path& path, const ImageD& img);

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace chem
