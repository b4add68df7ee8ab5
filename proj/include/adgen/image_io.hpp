#pragma once

#include "adgen/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace adgen::image_io {

/// Decodes PNG or JPEG (sniffed from the signature). Throws InputError on
/// unknown formats or corrupt data. PNG keeps its channel layout
/// (gray/gray+alpha are widened to 1/4 channels); JPEG decodes to RGB.
Raster decode(std::span<const std::uint8_t> bytes);

/// Deterministic PNG encoding: identical rasters produce identical bytes.
std::vector<std::uint8_t> encode_png(const Raster &raster);

std::vector<std::uint8_t> read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::span<const std::uint8_t> bytes);

Raster load(const std::filesystem::path &path);
void save_png(const std::filesystem::path &path, const Raster &raster);

} // namespace adgen::image_io
