#include "fruitlet/types.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fruitlet/error.hpp"

namespace fruitlet {

std::string_view to_string(DepthConvention c) noexcept {
  switch (c) {
    case DepthConvention::metric_meters: return "metric-meters";
    case DepthConvention::relative_depth: return "relative-depth";
    case DepthConvention::relative_inverse_depth: return "relative-inverse-depth";
  }
  return "unknown";
}

DepthConvention parse_depth_convention(std::string_view text) {
  if (text == "metric-meters" || text == "metric") return DepthConvention::metric_meters;
  if (text == "relative-depth") return DepthConvention::relative_depth;
  if (text == "relative-inverse-depth") return DepthConvention::relative_inverse_depth;
  throw Error(ErrorCode::invalid_argument, fmt::format("unknown depth convention '{}'", text));
}

std::string_view to_string(DepthSource s) noexcept {
  switch (s) {
    case DepthSource::realsense: return "realsense";
    case DepthSource::dpt: return "dpt";
    case DepthSource::depth_anything_v2: return "depth-anything-v2";
  }
  return "unknown";
}

DepthSource parse_depth_source(std::string_view text) {
  for (auto s : all_depth_sources) {
    if (text == to_string(s)) return s;
  }
  throw Error(ErrorCode::invalid_argument, fmt::format("unknown depth source '{}'", text));
}

DepthMap::DepthMap(int w, int h, DepthConvention c, float fill)
    : width(w), height(h), convention(c), values(static_cast<std::size_t>(w) * h, fill) {}

void DepthMap::validate() const {
  if (width < 0 || height < 0 || values.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::dimension,
                fmt::format("{}x{} raster holds {} values", width, height, values.size()));
  }
  for (float v : values) {
    if (!std::isfinite(v) || v < 0.0F) {
      throw Error(ErrorCode::value, fmt::format("depth value {} is not finite and non-negative", v));
    }
  }
}

}  // namespace fruitlet
