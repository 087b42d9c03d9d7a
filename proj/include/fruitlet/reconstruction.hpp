#pragma once

#include <optional>

#include "fruitlet/camera.hpp"
#include "fruitlet/types.hpp"

namespace fruitlet {

enum class FitSpace { depth, inverse_depth };

std::string_view to_string(FitSpace s) noexcept;

/// Fit space implied by a raster's convention: inverse depth for
/// relative-inverse-depth, depth otherwise.
FitSpace fit_space_for(DepthConvention c) noexcept;

/// Affine map from relative values r to metric: depth = s*r + t in depth
/// space, 1/depth = s*r + t in inverse-depth space.
struct ScaleAlignment {
  double scale = 1.0;
  double shift = 0.0;
  FitSpace space = FitSpace::depth;
  double residual_rmse = 0.0;  // meters, after mapping back to depth
  std::size_t inlier_count = 0;
  // Standard errors of scale and shift in the fit space (0 for exact fits).
  double scale_stderr = 0.0;
  double shift_stderr = 0.0;

  static ScaleAlignment identity(std::size_t pixels = 0) { return {1.0, 0.0, FitSpace::depth, 0.0, pixels, 0.0, 0.0}; }
};

inline constexpr double kMaxDepthM = 10.0;
inline constexpr int kDefaultSampleStride = 4;
inline constexpr double kCaptureDistanceM = 0.61;

/// Inclusive metric depth window for point synthesis.
struct RangeFilter {
  double min_m = 0.15;
  double max_m = 2.0;

  /// Requires 0 < min_m < max_m <= 10 m.
  void validate() const;
  bool contains(double depth_m) const noexcept { return depth_m >= min_m && depth_m <= max_m; }
};

/// Least-squares scale and shift of `relative` onto the metric reference over
/// every `sample_stride`-th pixel in each axis where both maps hold data.
///
/// Errors: dimension mismatch, fewer than two pairs (insufficient_data), all
/// sampled relative values equal (rank_deficient), non-positive scale
/// (rank_deficient).
ScaleAlignment fit_scale(const DepthMap& relative, const DepthMap& metric_reference,
                         int sample_stride = kDefaultSampleStride);

/// Scale-only alignment that puts the median relative value at `distance_m`
/// (the canopy plane assumption used when no metric reference exists).
ScaleAlignment fit_fixed_distance(const DepthMap& relative, double distance_m = kCaptureDistanceM);

/// Applies an alignment. Results outside (0, 10] m and non-positive
/// inverse-depth denominators become no-data.
DepthMap to_metric(const DepthMap& relative, const ScaleAlignment& alignment);

/// One point per valid pixel inside `filter`, in row-major pixel order. Pixel
/// index (x, y) back-projects at u = x, v = y. Colours come from `rgb` when given.
PointCloud depth_to_cloud(const DepthMap& depth, const CameraIntrinsics& k, const RangeFilter& filter,
                          const RgbImage* rgb = nullptr);

}  // namespace fruitlet
