#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fruitlet/types.hpp"

namespace fruitlet {

/// Intersection over union of two normalized boxes, in [0, 1].
double iou(const BBox& a, const BBox& b) noexcept;

struct MatchedPair {
  std::size_t prediction = 0;
  std::size_t truth = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<MatchedPair> pairs;  // in prediction order
};

/// Greedy matching in confidence order: each prediction takes the unmatched
/// truth of highest IoU >= `iou_threshold`, ties going to the lower truth
/// index. `predictions` must already be sorted by descending confidence,
/// otherwise Error(contract) is thrown.
MatchResult match_detections(std::span<const PoseDetection> predictions, std::span<const PoseDetection> truths,
                             double iou_threshold);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  // Set when the denominator was zero and the ratio was defined as 0.
  bool precision_degenerate = false;
  bool recall_degenerate = false;
};

PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn) noexcept;
PrecisionRecall precision_recall(const MatchResult& m) noexcept;

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
  double score = 0.0;  // confidence threshold producing this point
};

struct PRCurve {
  std::vector<PRPoint> points;  // ascending recall
  double ap = 0.0;
};

/// Scored true/false-positive labels pooled over a dataset.
struct ScoredOutcome {
  double score = 0.0;
  bool true_positive = false;
};

/// All-point interpolated AP: one PR point per distinct score (descending),
/// precision made non-increasing in recall, integrated over recall.
/// Throws Error(undefined_ap) when `positives` is zero.
PRCurve precision_recall_curve(std::vector<ScoredOutcome> outcomes, std::size_t positives);

struct ImageDetections {
  std::vector<PoseDetection> predictions;  // any order
  std::vector<PoseDetection> truths;
};

inline constexpr double kMatchIou = 0.5;

/// Dataset-pooled AP at IoU 0.5 with per-image greedy matching.
PRCurve average_precision_50(std::span<const ImageDetections> images);

/// Object keypoint similarity: mean over the truth's labeled keypoints of
/// exp(-d^2 / (2 * area * kappa^2)), d in normalized units and area the truth
/// box w*h. nullopt when the truth has no labeled keypoint.
std::optional<double> pose_correctness(const PoseDetection& prediction, const PoseDetection& truth,
                                       double kappa = 0.05);

struct EvaluationConfig {
  double iou_threshold = kMatchIou;
  double oks_kappa = 0.05;
  double oks_threshold = 0.5;
};

struct DetectionMetrics {
  std::size_t images = 0;
  MatchResult box_counts;  // pooled counts; pairs left empty
  PrecisionRecall box;
  std::optional<double> box_map50;
  std::size_t pose_tp = 0;
  std::size_t pose_fp = 0;
  std::size_t pose_fn = 0;
  PrecisionRecall pose;
  std::optional<double> pose_map50;
};

/// Box and pose quality over a dataset. A pose is a true positive when its box
/// matched and the OKS against that truth reaches `oks_threshold`. Truths
/// without labeled keypoints, and predictions matched to them, are left out of
/// the pose counts.
DetectionMetrics evaluate_detections(std::span<const ImageDetections> images, const EvaluationConfig& cfg = {});

struct LengthErrorStats {
  double rmse_mm = 0.0;
  double mae_mm = 0.0;
  std::size_t n = 0;
  std::vector<double> residuals;  // predicted - actual, input order
};

/// RMSE and MAE of predicted against actual lengths. Throws Error(empty_input).
LengthErrorStats length_error_stats(std::span<const LengthRecord> records);

}  // namespace fruitlet
