#pragma once

#include <filesystem>
#include <optional>

#include "fruitlet/types.hpp"

namespace fruitlet {

struct ImageSize {
  int width = 0;
  int height = 0;
};

/// Loads a depth raster by extension.
///
/// `.png`: 16-bit single channel, millimeters; converted to meters and always
/// tagged metric-meters (declaring a relative convention is an error).
/// `.pfm`: single-channel float32, values kept raw under `convention`; rows are
/// returned top-down.
///
/// When `expected` is set, a raster of any other size raises Error(dimension).
DepthMap load_depth(const std::filesystem::path& path, DepthConvention convention,
                    std::optional<ImageSize> expected = std::nullopt);

/// Metric raster to millimeter PNG (rounded to the nearest millimeter).
void write_depth_png(const DepthMap& depth, const std::filesystem::path& path);

/// Single-channel little-endian PFM, rows written bottom-up as the format requires.
void write_pfm(const DepthMap& depth, const std::filesystem::path& path);

DepthMap read_pfm(const std::filesystem::path& path, DepthConvention convention);

}  // namespace fruitlet
