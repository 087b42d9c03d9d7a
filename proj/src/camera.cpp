#include "fruitlet/camera.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fruitlet/error.hpp"

namespace fruitlet {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error(ErrorCode::invalid_argument, fmt::format("focal lengths must be positive (fx={}, fy={})", fx, fy));
  }
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::invalid_argument, fmt::format("image size {}x{} is empty", width, height));
  }
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("principal point ({}, {}) outside {}x{} image", cx, cy, width, height));
  }
}

double distance(const Point3& a, const Point3& b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

CameraIntrinsics intrinsics_from_fov(int width, int height, double hfov_deg, double vfov_deg) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::invalid_argument, fmt::format("image size {}x{} is empty", width, height));
  }
  const auto in_range = [](double fov) { return fov > 0.0 && fov < 180.0; };
  if (!in_range(hfov_deg) || !in_range(vfov_deg)) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("field of view must lie in (0, 180) degrees (hfov={}, vfov={})", hfov_deg, vfov_deg));
  }
  constexpr double deg = std::numbers::pi / 180.0;
  CameraIntrinsics k;
  k.width = width;
  k.height = height;
  k.fx = (width / 2.0) / std::tan(hfov_deg * deg / 2.0);
  k.fy = (height / 2.0) / std::tan(vfov_deg * deg / 2.0);
  k.cx = width / 2.0;
  k.cy = height / 2.0;
  return k;
}

CameraIntrinsics default_capture_intrinsics() { return intrinsics_from_fov(1280, 720, 69.4, 42.5); }

Point3 backproject(double u, double v, double depth_m, const CameraIntrinsics& k) {
  if (!(depth_m > 0.0) || !std::isfinite(depth_m)) {
    throw Error(ErrorCode::invalid_depth, fmt::format("depth {} m is not positive", depth_m));
  }
  if (!(u >= 0.0 && u <= k.width) || !(v >= 0.0 && v <= k.height)) {
    throw Error(ErrorCode::out_of_bounds, fmt::format("pixel ({}, {}) outside {}x{} image", u, v, k.width, k.height));
  }
  return {(u - k.cx) * depth_m / k.fx, (v - k.cy) * depth_m / k.fy, depth_m};
}

PixelCoord project(const Point3& p, const CameraIntrinsics& k) {
  if (!(p.z > 0.0)) {
    throw Error(ErrorCode::behind_camera, fmt::format("point z = {} is not in front of the camera", p.z));
  }
  return {k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy};
}

}  // namespace fruitlet
