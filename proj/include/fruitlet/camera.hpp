#pragma once

namespace fruitlet {

/// Pinhole intrinsics in pixels. Lens distortion is not modelled: the
/// capture setup only publishes field of view and resolution.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws Error(invalid_argument) unless fx, fy > 0 and the principal point
  /// lies strictly inside the image.
  void validate() const;

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Camera-frame point in meters; z points along the optical axis.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Point3&) const = default;
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

double distance(const Point3& a, const Point3& b) noexcept;

/// Focal lengths from horizontal/vertical FOV in degrees, principal point at
/// the image centre. fx and fy are derived independently.
CameraIntrinsics intrinsics_from_fov(int width, int height, double hfov_deg, double vfov_deg);

/// Intrinsics of the capture camera: 1280x720, 69.4 x 42.5 degrees.
CameraIntrinsics default_capture_intrinsics();

/// Pixel + metric depth to camera frame. (u, v) must lie in the closed image
/// rectangle [0, width] x [0, height]; depth must be positive.
Point3 backproject(double u, double v, double depth_m, const CameraIntrinsics& k);

PixelCoord project(const Point3& p, const CameraIntrinsics& k);

}  // namespace fruitlet
