#include "fruitlet/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fruitlet/error.hpp"

namespace fruitlet {

double iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

MatchResult match_detections(std::span<const PoseDetection> predictions, std::span<const PoseDetection> truths,
                             double iou_threshold) {
  for (std::size_t i = 1; i < predictions.size(); ++i) {
    if (predictions[i].confidence > predictions[i - 1].confidence) {
      throw Error(ErrorCode::contract, fmt::format("predictions not sorted by confidence at index {}", i));
    }
  }
  MatchResult m;
  std::vector<bool> taken(truths.size(), false);
  for (std::size_t p = 0; p < predictions.size(); ++p) {
    std::optional<std::size_t> best;
    double best_iou = 0.0;
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (taken[t]) continue;
      const double overlap = iou(predictions[p].bbox, truths[t].bbox);
      if (overlap >= iou_threshold && (!best || overlap > best_iou)) {
        best = t;
        best_iou = overlap;
      }
    }
    if (best) {
      taken[*best] = true;
      m.pairs.push_back({p, *best, best_iou});
    }
  }
  m.tp = m.pairs.size();
  m.fp = predictions.size() - m.tp;
  m.fn = truths.size() - m.tp;
  return m;
}

PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn) noexcept {
  PrecisionRecall pr;
  if (tp + fp == 0) {
    pr.precision_degenerate = true;
  } else {
    pr.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    pr.recall_degenerate = true;
  } else {
    pr.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  return pr;
}

PrecisionRecall precision_recall(const MatchResult& m) noexcept { return precision_recall(m.tp, m.fp, m.fn); }

PRCurve precision_recall_curve(std::vector<ScoredOutcome> outcomes, std::size_t positives) {
  if (positives == 0) throw Error(ErrorCode::undefined_ap, "no ground-truth instances to recall");
  std::stable_sort(outcomes.begin(), outcomes.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) { return a.score > b.score; });

  PRCurve curve;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < outcomes.size();) {
    const double score = outcomes[i].score;
    for (; i < outcomes.size() && outcomes[i].score == score; ++i) {
      (outcomes[i].true_positive ? tp : fp) += 1;
    }
    curve.points.push_back({static_cast<double>(tp) / static_cast<double>(positives),
                            static_cast<double>(tp) / static_cast<double>(tp + fp), score});
  }

  // Precision envelope, swept from the high-recall end.
  double envelope = 0.0;
  std::vector<double> interpolated(curve.points.size());
  for (std::size_t k = curve.points.size(); k-- > 0;) {
    envelope = std::max(envelope, curve.points[k].precision);
    interpolated[k] = envelope;
  }
  double previous_recall = 0.0;
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    curve.ap += (curve.points[k].recall - previous_recall) * interpolated[k];
    previous_recall = curve.points[k].recall;
  }
  return curve;
}

namespace {

std::vector<PoseDetection> sorted_by_confidence(std::vector<PoseDetection> dets) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const PoseDetection& a, const PoseDetection& b) { return a.confidence > b.confidence; });
  return dets;
}

}  // namespace

PRCurve average_precision_50(std::span<const ImageDetections> images) {
  std::vector<ScoredOutcome> outcomes;
  std::size_t positives = 0;
  for (const auto& image : images) {
    const auto preds = sorted_by_confidence(image.predictions);
    const auto m = match_detections(preds, image.truths, kMatchIou);
    std::vector<bool> matched(preds.size(), false);
    for (const auto& pair : m.pairs) matched[pair.prediction] = true;
    for (std::size_t p = 0; p < preds.size(); ++p) outcomes.push_back({preds[p].confidence, matched[p]});
    positives += image.truths.size();
  }
  return precision_recall_curve(std::move(outcomes), positives);
}

std::optional<double> pose_correctness(const PoseDetection& prediction, const PoseDetection& truth, double kappa) {
  const double area = truth.bbox.area();
  double sum = 0.0;
  int labeled = 0;
  const auto accumulate = [&](const Keypoint& p, const Keypoint& t) {
    if (!t.labeled()) return;
    const double dx = p.x - t.x;
    const double dy = p.y - t.y;
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * area * kappa * kappa));
    ++labeled;
  };
  accumulate(prediction.calyx, truth.calyx);
  accumulate(prediction.peduncle, truth.peduncle);
  if (labeled == 0) return std::nullopt;
  return sum / labeled;
}

DetectionMetrics evaluate_detections(std::span<const ImageDetections> images, const EvaluationConfig& cfg) {
  DetectionMetrics out;
  out.images = images.size();
  std::vector<ScoredOutcome> box_outcomes;
  std::vector<ScoredOutcome> pose_outcomes;
  std::size_t box_positives = 0;
  std::size_t pose_positives = 0;

  for (const auto& image : images) {
    const auto preds = sorted_by_confidence(image.predictions);
    const auto m = match_detections(preds, image.truths, cfg.iou_threshold);
    out.box_counts.tp += m.tp;
    out.box_counts.fp += m.fp;
    out.box_counts.fn += m.fn;
    box_positives += image.truths.size();

    std::vector<std::optional<std::size_t>> truth_of(preds.size());
    for (const auto& pair : m.pairs) truth_of[pair.prediction] = pair.truth;

    std::size_t image_pose_positives = 0;
    for (const auto& t : image.truths) {
      if (t.calyx.labeled() || t.peduncle.labeled()) ++image_pose_positives;
    }
    pose_positives += image_pose_positives;

    std::size_t image_pose_tp = 0;
    for (std::size_t p = 0; p < preds.size(); ++p) {
      box_outcomes.push_back({preds[p].confidence, truth_of[p].has_value()});
      bool pose_hit = false;
      if (truth_of[p]) {
        const auto score = pose_correctness(preds[p], image.truths[*truth_of[p]], cfg.oks_kappa);
        if (!score) continue;  // nothing to judge the pose against
        pose_hit = *score >= cfg.oks_threshold;
      }
      pose_outcomes.push_back({preds[p].confidence, pose_hit});
      if (pose_hit) {
        ++image_pose_tp;
      } else {
        ++out.pose_fp;
      }
    }
    out.pose_tp += image_pose_tp;
    out.pose_fn += image_pose_positives - image_pose_tp;
  }

  out.box = precision_recall(out.box_counts);
  out.pose = precision_recall(out.pose_tp, out.pose_fp, out.pose_fn);
  if (box_positives > 0) out.box_map50 = precision_recall_curve(std::move(box_outcomes), box_positives).ap;
  if (pose_positives > 0) out.pose_map50 = precision_recall_curve(std::move(pose_outcomes), pose_positives).ap;
  return out;
}

LengthErrorStats length_error_stats(std::span<const LengthRecord> records) {
  if (records.empty()) throw Error(ErrorCode::empty_input, "no length records");
  LengthErrorStats s;
  s.n = records.size();
  s.residuals.reserve(records.size());
  double sum_sq = 0.0;
  double sum_abs = 0.0;
  for (const auto& r : records) {
    const double e = r.predicted_mm - r.actual_mm;
    s.residuals.push_back(e);
    sum_sq += e * e;
    sum_abs += std::abs(e);
  }
  const auto n = static_cast<double>(s.n);
  s.rmse_mm = std::sqrt(sum_sq / n);
  s.mae_mm = sum_abs / n;
  return s;
}

}  // namespace fruitlet
