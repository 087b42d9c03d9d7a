#include "fruitlet/inference.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "fruitlet/error.hpp"
#include "fruitlet/evaluation.hpp"

namespace fruitlet {

PhaseTiming mean_phase_timing(std::span<const PhaseTiming> timings) {
  if (timings.empty()) throw Error(ErrorCode::empty_input, "no timings to average");
  PhaseTiming sum;
  for (const auto& t : timings) {
    sum.preprocess_ms += t.preprocess_ms;
    sum.inference_ms += t.inference_ms;
    sum.postprocess_ms += t.postprocess_ms;
  }
  const auto n = static_cast<double>(timings.size());
  return {sum.preprocess_ms / n, sum.inference_ms / n, sum.postprocess_ms / n};
}

std::string_view to_string(BackendKind kind) noexcept {
  return kind == BackendKind::onnx ? "onnx" : "file";
}

BackendKind parse_backend_kind(std::string_view text) {
  if (text == "file" || text == "file-oracle") return BackendKind::file_oracle;
  if (text == "onnx") return BackendKind::onnx;
  throw Error(ErrorCode::config, fmt::format("unknown backend '{}' (expected file or onnx)", text));
}

void BackendConfig::validate() const {
  const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(confidence_threshold) || !unit(iou_nms_threshold)) {
    throw Error(ErrorCode::config, fmt::format("thresholds must lie in [0, 1] (confidence={}, iou={})",
                                               confidence_threshold, iou_nms_threshold));
  }
  if (input_size < 32) throw Error(ErrorCode::config, fmt::format("input size {} is below 32", input_size));
  if (path.empty() || !std::filesystem::exists(path)) {
    throw Error(ErrorCode::config, fmt::format("backend path '{}' does not exist", path.string()));
  }
  if (kind == BackendKind::file_oracle && !std::filesystem::is_directory(path)) {
    throw Error(ErrorCode::config, fmt::format("file-oracle path '{}' is not a directory", path.string()));
  }
}

std::vector<PoseDetection> filter_and_sort(std::vector<PoseDetection> detections, double threshold) {
  std::erase_if(detections, [threshold](const PoseDetection& d) { return d.confidence < threshold; });
  std::stable_sort(detections.begin(), detections.end(),
                   [](const PoseDetection& a, const PoseDetection& b) { return a.confidence > b.confidence; });
  return detections;
}

std::vector<PoseDetection> non_max_suppression(std::vector<PoseDetection> detections, double iou_threshold) {
  detections = filter_and_sort(std::move(detections), 0.0);
  std::vector<PoseDetection> kept;
  for (auto& d : detections) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                        [&](const PoseDetection& k) { return iou(k.bbox, d.bbox) > iou_threshold; });
    if (!suppressed) kept.push_back(std::move(d));
  }
  return kept;
}

}  // namespace fruitlet
