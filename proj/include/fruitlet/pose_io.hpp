#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fruitlet/types.hpp"

namespace fruitlet {

/// Parses a pose label file. Each non-empty line is
///
///   class cx cy w h x1 y1 v1 x2 y2 v2 [confidence]
///
/// with normalized coordinates, keypoint 1 = calyx, keypoint 2 = peduncle.
/// Eleven fields denote an annotation (confidence 1.0), twelve a prediction.
/// Only class 0 exists. Boxes reaching past the image edge are clamped.
std::vector<PoseDetection> parse_pose_file(std::string_view text, std::string_view image_id);

/// Reads `path` and parses it, using the file stem as image id.
std::vector<PoseDetection> load_pose_file(const std::filesystem::path& path);

/// Inverse of parse_pose_file; appends confidence when `with_confidence`.
std::string format_pose_file(const std::vector<PoseDetection>& detections, bool with_confidence);

}  // namespace fruitlet
