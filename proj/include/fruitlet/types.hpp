#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fruitlet/camera.hpp"

namespace fruitlet {

/// Normalized centre-format box; all fields relative to image size.
struct BBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double left() const noexcept { return cx - w / 2.0; }
  double right() const noexcept { return cx + w / 2.0; }
  double top() const noexcept { return cy - h / 2.0; }
  double bottom() const noexcept { return cy + h / 2.0; }
  double area() const noexcept { return w * h; }

  bool operator==(const BBox&) const = default;
};

enum class Visibility : int { not_labeled = 0, occluded = 1, visible = 2 };

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  Visibility visibility = Visibility::not_labeled;

  bool labeled() const noexcept { return visibility != Visibility::not_labeled; }

  bool operator==(const Keypoint&) const = default;
};

/// One fruit: box, confidence (1.0 for annotations) and the calyx/peduncle pair.
struct PoseDetection {
  std::string image_id;
  BBox bbox;
  double confidence = 1.0;
  Keypoint calyx;
  Keypoint peduncle;

  bool operator==(const PoseDetection&) const = default;
};

enum class DepthConvention { metric_meters, relative_depth, relative_inverse_depth };

std::string_view to_string(DepthConvention c) noexcept;
DepthConvention parse_depth_convention(std::string_view text);

/// Row-major depth raster. A value of 0 marks a pixel without data.
struct DepthMap {
  int width = 0;
  int height = 0;
  DepthConvention convention = DepthConvention::metric_meters;
  std::vector<float> values;

  DepthMap() = default;
  DepthMap(int w, int h, DepthConvention c, float fill = 0.0F);

  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }

  static bool valid(float value) noexcept { return value > 0.0F; }

  /// Throws Error(dimension) or Error(value) if the raster breaks its invariants.
  void validate() const;

  bool operator==(const DepthMap&) const = default;
};

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::array<std::uint8_t, 3> at(int x, int y) const {
    const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  bool empty() const noexcept { return pixels.empty(); }
};

struct GroundTruthLength {
  std::string image_id;
  std::string fruit_id;
  double length_mm = 0.0;
  /// Annotated fruit centre in pixels, used for pairing with detections.
  std::optional<PixelCoord> center;
};

using Rgb = std::array<std::uint8_t, 3>;

struct PointCloud {
  std::vector<Point3> points;
  std::vector<Rgb> colors;  // empty or one per point

  bool has_colors() const noexcept { return !colors.empty(); }
  std::size_t size() const noexcept { return points.size(); }
};

/// Where a metric depth estimate came from.
enum class DepthSource { realsense, dpt, depth_anything_v2 };

std::string_view to_string(DepthSource s) noexcept;
DepthSource parse_depth_source(std::string_view text);
inline constexpr std::array<DepthSource, 3> all_depth_sources{DepthSource::realsense, DepthSource::dpt,
                                                              DepthSource::depth_anything_v2};

/// Measured versus caliper length for one fruit.
struct LengthRecord {
  std::string image_id;
  std::string fruit_id;
  double predicted_mm = 0.0;
  double actual_mm = 0.0;
  DepthSource method = DepthSource::realsense;

  double residual_mm() const noexcept { return predicted_mm - actual_mm; }
};

}  // namespace fruitlet
