#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "fruitlet/types.hpp"

namespace fruitlet {

/// Wall time of one image through a backend, split into the three phases.
/// Pre-processing here means decode + resize + normalize.
struct PhaseTiming {
  double preprocess_ms = 0.0;
  double inference_ms = 0.0;
  double postprocess_ms = 0.0;

  double total_ms() const noexcept { return preprocess_ms + inference_ms + postprocess_ms; }
};

/// Per-phase arithmetic mean. Throws Error(empty_input) on an empty list.
PhaseTiming mean_phase_timing(std::span<const PhaseTiming> timings);

enum class BackendKind { file_oracle, onnx };

std::string_view to_string(BackendKind kind) noexcept;
BackendKind parse_backend_kind(std::string_view text);

struct BackendConfig {
  BackendKind kind = BackendKind::file_oracle;
  /// Prediction directory for the file oracle, model file for ONNX.
  std::filesystem::path path;
  int input_size = 640;
  double confidence_threshold = 0.25;
  double iou_nms_threshold = 0.7;
  /// Convention assigned to PFM rasters replayed by the file oracle.
  DepthConvention depth_convention = DepthConvention::relative_inverse_depth;

  /// Throws Error(config) for out-of-range thresholds or a missing path.
  void validate() const;
};

struct PoseResult {
  std::vector<PoseDetection> detections;  // confidence non-increasing
  PhaseTiming timing;
};

/// Pose producers. Instances are not thread-safe; use one per worker.
class PoseBackend {
 public:
  virtual ~PoseBackend() = default;

  /// `image` may be empty for backends that do not look at pixels (the file
  /// oracle); when present it must be at least 32x32.
  virtual PoseResult detect_pose(std::string_view image_id, const RgbImage& image) = 0;
};

class DepthBackend {
 public:
  virtual ~DepthBackend() = default;

  virtual DepthMap estimate_depth(std::string_view image_id, const RgbImage& image) = 0;
};

std::unique_ptr<PoseBackend> make_pose_backend(const BackendConfig& cfg);
std::unique_ptr<DepthBackend> make_depth_backend(const BackendConfig& cfg);

/// Greedy NMS: keeps the highest-confidence box and drops any later box whose
/// IoU with a kept one exceeds `iou_threshold`. Output sorted by confidence.
std::vector<PoseDetection> non_max_suppression(std::vector<PoseDetection> detections, double iou_threshold);

/// Drops detections under `threshold` and stable-sorts by descending confidence.
std::vector<PoseDetection> filter_and_sort(std::vector<PoseDetection> detections, double threshold);

}  // namespace fruitlet
