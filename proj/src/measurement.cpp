#include "fruitlet/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "fruitlet/error.hpp"

namespace fruitlet {

DepthSample sample_keypoint_depth(const DepthMap& depth, int u, int v, int window) {
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorCode::invalid_argument, fmt::format("window {} must be odd and positive", window));
  }
  if (u < 0 || v < 0 || u >= depth.width || v >= depth.height) {
    throw Error(ErrorCode::out_of_bounds, fmt::format("pixel ({}, {}) outside {}x{} raster", u, v, depth.width,
                                                      depth.height));
  }
  const int r = window / 2;
  const int x0 = std::max(0, u - r), x1 = std::min(depth.width - 1, u + r);
  const int y0 = std::max(0, v - r), y1 = std::min(depth.height - 1, v + r);

  std::vector<float> valid;
  valid.reserve(static_cast<std::size_t>(window) * window);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (DepthMap::valid(depth.at(x, y))) valid.push_back(depth.at(x, y));
    }
  }
  const auto total = static_cast<double>((x1 - x0 + 1) * (y1 - y0 + 1));
  const double fraction = static_cast<double>(valid.size()) / total;
  if (valid.empty() || fraction < kMinValidFraction) {
    throw Error(ErrorCode::insufficient_depth,
                fmt::format("{} of {} pixels around ({}, {}) hold depth", valid.size(), total, u, v));
  }
  std::sort(valid.begin(), valid.end());
  const std::size_t n = valid.size();
  const double median = n % 2 == 1 ? valid[n / 2] : (static_cast<double>(valid[n / 2 - 1]) + valid[n / 2]) / 2.0;
  return {median, fraction};
}

namespace {

struct LiftedKeypoint {
  Point3 point;
  double quality = 0.0;
};

LiftedKeypoint lift(const Keypoint& kp, std::string_view name, const DepthMap& depth, const CameraIntrinsics& k) {
  const double u = kp.x * depth.width;
  const double v = kp.y * depth.height;
  const int px = std::clamp(static_cast<int>(std::lround(u)), 0, depth.width - 1);
  const int py = std::clamp(static_cast<int>(std::lround(v)), 0, depth.height - 1);
  try {
    const auto sample = sample_keypoint_depth(depth, px, py);
    return {backproject(u, v, sample.depth_m, k), sample.valid_fraction};
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{} keypoint: {}", name, e.what()));
  }
}

}  // namespace

MeasuredPose measure_length(const PoseDetection& detection, const DepthMap& depth, const CameraIntrinsics& k) {
  if (!detection.calyx.labeled() || !detection.peduncle.labeled()) {
    throw Error(ErrorCode::missing_keypoint,
                fmt::format("detection in '{}' lacks the {} keypoint", detection.image_id,
                            detection.calyx.labeled() ? "peduncle" : "calyx"));
  }
  if (depth.convention != DepthConvention::metric_meters) {
    throw Error(ErrorCode::convention, "length measurement needs metric depth");
  }
  if (depth.width != k.width || depth.height != k.height) {
    throw Error(ErrorCode::dimension, fmt::format("depth is {}x{} but intrinsics are {}x{}", depth.width,
                                                  depth.height, k.width, k.height));
  }

  const auto calyx = lift(detection.calyx, "calyx", depth, k);
  const auto peduncle = lift(detection.peduncle, "peduncle", depth, k);

  MeasuredPose m;
  m.detection = detection;
  m.calyx_3d = calyx.point;
  m.peduncle_3d = peduncle.point;
  m.calyx_depth_quality = calyx.quality;
  m.peduncle_depth_quality = peduncle.quality;
  m.length_mm = 1000.0 * distance(calyx.point, peduncle.point);
  if (!std::isfinite(m.length_mm) || !(m.length_mm > 0.0)) {
    throw Error(ErrorCode::degenerate_pose,
                fmt::format("calyx and peduncle coincide in 3D (length {} mm)", m.length_mm));
  }
  return m;
}

GroundTruthMatch match_to_ground_truth(std::span<const MeasuredPose> measured,
                                       std::span<const GroundTruthLength> truth, std::string_view image_id,
                                       int image_width, int image_height, DepthSource method) {
  for (const auto& t : truth) {
    if (t.image_id != image_id) {
      throw Error(ErrorCode::contract, fmt::format("truth row ({}, {}) does not belong to image '{}'", t.image_id,
                                                   t.fruit_id, image_id));
    }
  }
  using Candidate = std::tuple<double, std::size_t, std::size_t>;
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const double u = measured[i].detection.bbox.cx * image_width;
    const double v = measured[i].detection.bbox.cy * image_height;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (!truth[j].center) continue;
      candidates.emplace_back(std::hypot(u - truth[j].center->u, v - truth[j].center->v), i, j);
    }
  }
  std::sort(candidates.begin(), candidates.end());

  GroundTruthMatch out;
  std::vector<bool> measured_used(measured.size(), false);
  std::vector<bool> truth_used(truth.size(), false);
  for (const auto& [dist, i, j] : candidates) {
    if (measured_used[i] || truth_used[j]) continue;
    measured_used[i] = true;
    truth_used[j] = true;
    out.pairs.push_back({std::string(image_id), truth[j].fruit_id, measured[i].length_mm, truth[j].length_mm, method});
    out.pair_measured.push_back(i);
  }
  for (std::size_t i = 0; i < measured.size(); ++i) {
    if (!measured_used[i]) out.unmatched_measured.push_back(i);
  }
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (!truth_used[j]) out.unmatched_truth.push_back(truth[j]);
  }
  return out;
}

}  // namespace fruitlet
