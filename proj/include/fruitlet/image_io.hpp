#pragma once

#include <filesystem>

#include "fruitlet/types.hpp"

namespace fruitlet {

/// Decodes any 8-bit colour image OpenCV understands into RGB order.
RgbImage load_rgb(const std::filesystem::path& path);

void write_rgb(const RgbImage& image, const std::filesystem::path& path);

}  // namespace fruitlet
