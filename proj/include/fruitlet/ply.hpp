#pragma once

#include <filesystem>

#include "fruitlet/types.hpp"

namespace fruitlet {

enum class PlyFormat { ascii, binary_little_endian };

/// PLY 1.0 with float32 x, y, z and, when the cloud is coloured, uchar r, g, b.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format);

/// Reads files produced by write_ply (either encoding). Vertex properties
/// other than x/y/z/red/green/blue are rejected.
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace fruitlet
