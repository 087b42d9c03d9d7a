#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fruitlet/error.hpp"
#include "fruitlet/evaluation.hpp"
#include "support/test_support.hpp"

using namespace fruitlet;
using fruitlet::fixtures::make_det;

namespace {

/// Lexicographic best assignment: each prediction in order gets the highest
/// IoU still available (>= threshold), ties to the lower truth index.
std::vector<int> brute_force_assignment(const std::vector<PoseDetection>& preds,
                                        const std::vector<PoseDetection>& truths, double thr) {
  std::vector<int> best;
  std::vector<std::pair<double, int>> best_key;
  std::vector<int> current(preds.size(), -1);
  std::vector<bool> used(truths.size(), false);
  const auto key_of = [&](const std::vector<int>& a) {
    std::vector<std::pair<double, int>> key;
    for (std::size_t p = 0; p < a.size(); ++p) {
      if (a[p] < 0) {
        key.emplace_back(-1.0, 0);
      } else {
        key.emplace_back(iou(preds[p].bbox, truths[static_cast<std::size_t>(a[p])].bbox), -a[p]);
      }
    }
    return key;
  };
  const auto recurse = [&](auto&& self, std::size_t p) -> void {
    if (p == preds.size()) {
      const auto key = key_of(current);
      if (best.empty() && !preds.empty() ? true : key > best_key) {
        best = current;
        best_key = key;
      }
      return;
    }
    current[p] = -1;
    self(self, p + 1);
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (used[t] || iou(preds[p].bbox, truths[t].bbox) < thr) continue;
      used[t] = true;
      current[p] = static_cast<int>(t);
      self(self, p + 1);
      used[t] = false;
      current[p] = -1;
    }
  };
  recurse(recurse, 0);
  return best;
}

}  // namespace

TEST(Evaluation, IouBasics) {
  const BBox a{0.5, 0.5, 0.2, 0.2};
  EXPECT_NEAR(iou(a, a), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(iou(a, {0.9, 0.9, 0.1, 0.1}), 0.0);
  // two unit squares overlapping in a quarter: 1 / 7
  EXPECT_NEAR(iou({0.5, 0.5, 0.2, 0.2}, {0.6, 0.6, 0.2, 0.2}), 1.0 / 7.0, 1e-12);
  EXPECT_DOUBLE_EQ(iou(a, {0.7, 0.5, 0.2, 0.2}), 0.0);  // touching edges
}

TEST(Evaluation, IouProperties) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pos(0.1, 0.9), size(0.01, 0.4);
  for (int i = 0; i < 2000; ++i) {
    const BBox a{pos(rng), pos(rng), size(rng), size(rng)}, b{pos(rng), pos(rng), size(rng), size(rng)};
    const double v = iou(a, b);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    ASSERT_DOUBLE_EQ(v, iou(b, a));
    ASSERT_NEAR(v, fixtures::oracle_iou(a, b), 1e-12);
  }
}

TEST(Evaluation, MatchingPrefersHigherConfidenceAndLowerIndexOnTies) {
  const std::vector<PoseDetection> truths{make_det(0.5, 0.5, 0.2, 0.2), make_det(0.5, 0.5, 0.2, 0.2)};
  const std::vector<PoseDetection> preds{make_det(0.5, 0.5, 0.2, 0.2, 0.9), make_det(0.5, 0.5, 0.2, 0.2, 0.8),
                                         make_det(0.5, 0.5, 0.2, 0.2, 0.7)};
  const auto m = match_detections(preds, truths, 0.5);
  EXPECT_EQ(m.tp, 2U);
  EXPECT_EQ(m.fp, 1U);
  EXPECT_EQ(m.fn, 0U);
  ASSERT_EQ(m.pairs.size(), 2U);
  EXPECT_EQ(m.pairs[0].truth, 0U);
  EXPECT_EQ(m.pairs[1].truth, 1U);
}

TEST(Evaluation, MatchingRejectsUnsortedPredictions) {
  const std::vector<PoseDetection> preds{make_det(0.5, 0.5, 0.2, 0.2, 0.5), make_det(0.5, 0.5, 0.2, 0.2, 0.6)};
  try {
    match_detections(preds, {}, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::contract);
  }
}

TEST(Evaluation, MatchingEqualsLexicographicBruteForce) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 400; ++trial) {
    auto images = fixtures::random_dataset(rng, 1, 5);
    auto& im = images[0];
    std::stable_sort(im.predictions.begin(), im.predictions.end(),
                     [](const auto& a, const auto& b) { return a.confidence > b.confidence; });
    const auto m = match_detections(im.predictions, im.truths, 0.5);
    const auto expected = brute_force_assignment(im.predictions, im.truths, 0.5);
    std::vector<int> got(im.predictions.size(), -1);
    for (const auto& p : m.pairs) got[p.prediction] = static_cast<int>(p.truth);
    ASSERT_EQ(got, expected) << "trial " << trial;
  }
}

TEST(Evaluation, PrecisionRecallDegenerateCases) {
  const auto none = precision_recall(0, 0, 0);
  EXPECT_TRUE(none.precision_degenerate);
  EXPECT_TRUE(none.recall_degenerate);
  EXPECT_EQ(none.precision, 0.0);
  const auto misses = precision_recall(0, 0, 3);
  EXPECT_TRUE(misses.precision_degenerate);
  EXPECT_FALSE(misses.recall_degenerate);
  const auto pr = precision_recall(3, 1, 2);
  EXPECT_DOUBLE_EQ(pr.precision, 0.75);
  EXPECT_DOUBLE_EQ(pr.recall, 0.6);
}

TEST(Evaluation, ApHandComputed) {
  // scores 0.9 TP, 0.8 FP, 0.7 TP, 0.6 FP with 3 positives
  const auto c = precision_recall_curve({{0.9, true}, {0.8, false}, {0.7, true}, {0.6, false}}, 3);
  ASSERT_EQ(c.points.size(), 4U);
  // recall 1/3 at precision 1, recall 2/3 at envelope 2/3
  EXPECT_NEAR(c.ap, 1.0 / 3.0 + (1.0 / 3.0) * (2.0 / 3.0), 1e-12);
  EXPECT_DOUBLE_EQ(precision_recall_curve({{0.5, true}}, 1).ap, 1.0);
  EXPECT_DOUBLE_EQ(precision_recall_curve({}, 2).ap, 0.0);
  EXPECT_THROW(precision_recall_curve({{0.5, false}}, 0), Error);
}

TEST(Evaluation, TiedScoresFormOnePoint) {
  const auto c = precision_recall_curve({{0.8, false}, {0.8, true}, {0.5, true}}, 2);
  ASSERT_EQ(c.points.size(), 2U);
  EXPECT_DOUBLE_EQ(c.points[0].precision, 0.5);
  EXPECT_DOUBLE_EQ(c.points[0].recall, 0.5);
  // envelope lifts the first step to 2/3
  EXPECT_NEAR(c.ap, 0.5 * (2.0 / 3.0) + 0.5 * (2.0 / 3.0), 1e-12);
}

TEST(Evaluation, DatasetMetricsMatchOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto images = fixtures::random_dataset(rng);
    const auto oracle = fixtures::oracle_metrics(images);
    const auto m = evaluate_detections(images);
    ASSERT_NEAR(m.box.precision, oracle.precision, 1e-12);
    ASSERT_NEAR(m.box.recall, oracle.recall, 1e-12);
    ASSERT_EQ(m.box_map50.has_value(), oracle.ap_defined);
    if (oracle.ap_defined) {
      ASSERT_NEAR(*m.box_map50, oracle.ap, 1e-12) << "trial " << trial;
      ASSERT_NEAR(average_precision_50(images).ap, oracle.ap, 1e-12);
    }
  }
}

TEST(Evaluation, OksSingleKeypointAtHalf) {
  auto truth = make_det(0.5, 0.5, 0.2, 0.2);
  truth.peduncle.visibility = Visibility::not_labeled;
  auto pred = truth;
  // d^2 = 2 * area * kappa^2 * ln 2 gives exp(-ln 2) = 0.5
  const double d = std::sqrt(2.0 * truth.bbox.area() * 0.05 * 0.05 * std::log(2.0));
  pred.calyx.x += d;
  EXPECT_NEAR(*pose_correctness(pred, truth), 0.5, 1e-12);
  pred.peduncle.x += 0.3;  // ignored: not labeled in the truth
  EXPECT_NEAR(*pose_correctness(pred, truth), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(*pose_correctness(truth, truth), 1.0);
  truth.calyx.visibility = Visibility::not_labeled;
  EXPECT_FALSE(pose_correctness(pred, truth));
}

TEST(Evaluation, PoseCountsNeedBoxMatchAndOks) {
  ImageDetections im;
  im.truths = {make_det(0.3, 0.3, 0.2, 0.2), make_det(0.7, 0.7, 0.2, 0.2), make_det(0.5, 0.9, 0.1, 0.1)};
  im.truths[2].calyx.visibility = Visibility::not_labeled;
  im.truths[2].peduncle.visibility = Visibility::not_labeled;
  auto good = make_det(0.3, 0.3, 0.2, 0.2, 0.9);
  auto bad_pose = make_det(0.7, 0.7, 0.2, 0.2, 0.8);
  bad_pose.calyx.y += 0.2;
  bad_pose.peduncle.y -= 0.2;
  auto unlabeled = make_det(0.5, 0.9, 0.1, 0.1, 0.7);
  auto clutter = make_det(0.1, 0.8, 0.05, 0.05, 0.6);
  im.predictions = {bad_pose, clutter, good, unlabeled};

  const std::vector<ImageDetections> images{im};
  const auto m = evaluate_detections(images);
  EXPECT_EQ(m.box_counts.tp, 3U);
  EXPECT_EQ(m.box_counts.fp, 1U);
  EXPECT_EQ(m.box_counts.fn, 0U);
  EXPECT_EQ(m.pose_tp, 1U);
  EXPECT_EQ(m.pose_fp, 2U);  // wrong keypoints and clutter
  EXPECT_EQ(m.pose_fn, 1U);
  EXPECT_DOUBLE_EQ(m.pose.precision, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.pose.recall, 0.5);
  ASSERT_TRUE(m.pose_map50);
  EXPECT_DOUBLE_EQ(*m.pose_map50, 0.5);
}

TEST(Evaluation, EmptyTruthLeavesApUndefined) {
  ImageDetections im;
  im.predictions = {make_det(0.5, 0.5, 0.1, 0.1, 0.9)};
  const std::vector<ImageDetections> images{im};
  const auto m = evaluate_detections(images);
  EXPECT_FALSE(m.box_map50);
  EXPECT_TRUE(m.box.recall_degenerate);
  EXPECT_DOUBLE_EQ(m.box.precision, 0.0);
}

TEST(Evaluation, LengthErrorStats) {
  const std::vector<LengthRecord> r{{"a", "1", 21, 20}, {"a", "2", 18, 20}, {"b", "1", 20, 21}, {"b", "2", 22, 21}};
  const auto s = length_error_stats(r);
  EXPECT_EQ(s.n, 4U);
  // residuals 1, -2, -1, 1
  EXPECT_NEAR(s.rmse_mm, std::sqrt(7.0 / 4.0), 1e-15);
  EXPECT_NEAR(s.mae_mm, 1.25, 1e-15);
  EXPECT_EQ(s.residuals, (std::vector<double>{1, -2, -1, 1}));

  const std::vector<LengthRecord> two{{"a", "1", 21, 20}, {"a", "2", 18, 20}};
  EXPECT_NEAR(length_error_stats(two).rmse_mm, 1.58113883008419, 1e-14);
  EXPECT_NEAR(length_error_stats(two).mae_mm, 1.5, 1e-15);
  EXPECT_THROW(length_error_stats({}), Error);
}
