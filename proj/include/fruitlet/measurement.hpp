#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "fruitlet/camera.hpp"
#include "fruitlet/types.hpp"

namespace fruitlet {

inline constexpr int kDepthWindow = 5;
inline constexpr double kMinValidFraction = 0.2;

struct DepthSample {
  double depth_m = 0.0;
  double valid_fraction = 0.0;  // valid pixels / pixels in the clipped window
};

/// Median of the valid depths in the `window` x `window` neighbourhood of
/// pixel (u, v), clipped to the image. An even number of valid pixels takes
/// the mean of the two middle values. Fewer than 20% valid pixels raises
/// Error(insufficient_depth).
DepthSample sample_keypoint_depth(const DepthMap& depth, int u, int v, int window = kDepthWindow);

/// A detection lifted to 3D. length_mm is the straight calyx-peduncle chord.
struct MeasuredPose {
  PoseDetection detection;
  Point3 calyx_3d;
  Point3 peduncle_3d;
  double length_mm = 0.0;
  double calyx_depth_quality = 0.0;
  double peduncle_depth_quality = 0.0;

  /// True when either keypoint was labeled as occluded; such lengths are kept
  /// but should be read with care.
  bool occluded() const noexcept {
    return detection.calyx.visibility == Visibility::occluded ||
           detection.peduncle.visibility == Visibility::occluded;
  }
};

/// Denormalizes both keypoints against the depth raster, samples depth around
/// the nearest pixel, back-projects the sub-pixel keypoint and measures the
/// chord in millimeters.
///
/// Errors: missing_keypoint (a keypoint with visibility 0), convention
/// (non-metric depth), dimension (depth and intrinsics disagree),
/// insufficient_depth, degenerate_pose (zero length).
MeasuredPose measure_length(const PoseDetection& detection, const DepthMap& depth, const CameraIntrinsics& k);

struct GroundTruthMatch {
  std::vector<LengthRecord> pairs;
  std::vector<std::size_t> pair_measured;        // index into `measured` for each pair
  std::vector<std::size_t> unmatched_measured;   // indices into `measured`
  std::vector<GroundTruthLength> unmatched_truth;
};

/// Greedy nearest-centre pairing of measured poses and caliper records of one
/// image. Pixel distances run between the detection box centre and the truth
/// centre; the globally closest remaining pair is taken first (ties by
/// measured index, then truth index). Truth rows without a centre stay unmatched.
GroundTruthMatch match_to_ground_truth(std::span<const MeasuredPose> measured,
                                       std::span<const GroundTruthLength> truth, std::string_view image_id,
                                       int image_width, int image_height, DepthSource method);

}  // namespace fruitlet
