#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fruitlet/camera.hpp"
#include "fruitlet/error.hpp"
#include "fruitlet/reconstruction.hpp"

using namespace fruitlet;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorCode::contract;
}

/// Relative map with values spread over [lo, hi] and the metric map it maps to
/// under depth = f(r).
template <typename F>
std::pair<DepthMap, DepthMap> affine_pair(int w, int h, DepthConvention c, double lo, double hi, F&& f) {
  DepthMap rel(w, h, c), metric(w, h, DepthConvention::metric_meters);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float r = static_cast<float>(lo + (hi - lo) * ((x * 7 + y * 13) % 101) / 100.0);
      rel.at(x, y) = r;
      metric.at(x, y) = static_cast<float>(f(static_cast<double>(r)));
    }
  }
  return {rel, metric};
}

}  // namespace

TEST(Reconstruction, FitSpaceFollowsConvention) {
  EXPECT_EQ(fit_space_for(DepthConvention::relative_inverse_depth), FitSpace::inverse_depth);
  EXPECT_EQ(fit_space_for(DepthConvention::relative_depth), FitSpace::depth);
  EXPECT_EQ(fit_space_for(DepthConvention::metric_meters), FitSpace::depth);
}

TEST(Reconstruction, RecoversDepthSpaceAffine) {
  auto [rel, metric] = affine_pair(64, 48, DepthConvention::relative_depth, 0.5, 3.0,
                                   [](double r) { return 0.3 * r + 0.2; });
  const auto a = fit_scale(rel, metric, 1);
  EXPECT_EQ(a.space, FitSpace::depth);
  EXPECT_NEAR(a.scale, 0.3, 1e-6);
  EXPECT_NEAR(a.shift, 0.2, 1e-6);
  EXPECT_EQ(a.inlier_count, 64U * 48U);
  EXPECT_LT(a.residual_rmse, 1e-6);
}

TEST(Reconstruction, RecoversInverseDepthAffine) {
  auto [rel, metric] = affine_pair(40, 40, DepthConvention::relative_inverse_depth, 1.0, 8.0,
                                   [](double r) { return 1.0 / (0.25 * r + 0.5); });
  const auto a = fit_scale(rel, metric, 2);
  EXPECT_EQ(a.space, FitSpace::inverse_depth);
  EXPECT_NEAR(a.scale, 0.25, 1e-5);
  EXPECT_NEAR(a.shift, 0.5, 1e-5);
  EXPECT_EQ(a.inlier_count, 400U);

  const auto back = to_metric(rel, a);
  EXPECT_EQ(back.convention, DepthConvention::metric_meters);
  for (std::size_t i = 0; i < back.values.size(); ++i) ASSERT_NEAR(back.values[i], metric.values[i], 1e-5);
}

TEST(Reconstruction, StrideAndNoDataAreSkipped) {
  auto [rel, metric] = affine_pair(10, 10, DepthConvention::relative_depth, 1.0, 2.0,
                                   [](double r) { return 2.0 * r; });
  rel.at(0, 0) = 0.0F;
  metric.at(4, 0) = 0.0F;
  const auto a = fit_scale(rel, metric, 4);
  // stride 4 over 10x10 visits 3x3 pixels; two of them hold no data
  EXPECT_EQ(a.inlier_count, 7U);
}

TEST(Reconstruction, FitErrors) {
  DepthMap rel(8, 8, DepthConvention::relative_depth, 1.0F), metric(8, 8, DepthConvention::metric_meters, 0.6F);
  EXPECT_EQ(code_of([&] { fit_scale(rel, metric, 1); }), ErrorCode::rank_deficient);
  EXPECT_EQ(code_of([&] { fit_scale(rel, DepthMap(4, 4, DepthConvention::metric_meters, 1.0F), 1); }),
            ErrorCode::dimension);
  EXPECT_EQ(code_of([&] { fit_scale(rel, DepthMap(8, 8, DepthConvention::relative_depth, 1.0F), 1); }),
            ErrorCode::convention);
  DepthMap sparse(8, 8, DepthConvention::relative_depth);
  sparse.at(0, 0) = 1.0F;
  EXPECT_EQ(code_of([&] { fit_scale(sparse, metric, 1); }), ErrorCode::insufficient_data);

  // metric decreasing with relative depth would need a negative scale
  auto [r2, m2] = affine_pair(8, 8, DepthConvention::relative_depth, 1.0, 2.0, [](double r) { return 3.0 - r; });
  EXPECT_EQ(code_of([&] { fit_scale(r2, m2, 1); }), ErrorCode::rank_deficient);
}

TEST(Reconstruction, StandardErrorsShrinkWithNoise) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.01);
  auto [rel, metric] = affine_pair(50, 50, DepthConvention::relative_depth, 0.5, 2.5,
                                   [](double r) { return 0.4 * r + 0.1; });
  for (auto& v : metric.values) v = static_cast<float>(v + noise(rng));
  const auto a = fit_scale(rel, metric, 1);
  EXPECT_GT(a.scale_stderr, 0.0);
  EXPECT_GT(a.shift_stderr, 0.0);
  EXPECT_LT(std::abs(a.scale - 0.4), 4 * a.scale_stderr);
  EXPECT_LT(std::abs(a.shift - 0.1), 4 * a.shift_stderr);
  EXPECT_NEAR(a.residual_rmse, 0.01, 0.002);
}

TEST(Reconstruction, ToMetricHandCase) {
  DepthMap rel(4, 1, DepthConvention::relative_inverse_depth);
  rel.values = {0.25F, 0.5F, 1.0F, 2.0F};
  ScaleAlignment a{2.0, 0.5, FitSpace::inverse_depth};
  const auto m = to_metric(rel, a);
  EXPECT_FLOAT_EQ(m.values[0], 1.0F);
  EXPECT_FLOAT_EQ(m.values[1], static_cast<float>(2.0 / 3.0));
  EXPECT_FLOAT_EQ(m.values[2], 0.4F);
  EXPECT_FLOAT_EQ(m.values[3], static_cast<float>(2.0 / 9.0));
}

TEST(Reconstruction, ToMetricInvalidatesOutOfRange) {
  DepthMap rel(4, 1, DepthConvention::relative_depth);
  rel.values = {0.0F, 1.0F, 30.0F, 0.01F};
  ScaleAlignment a{0.5, -0.1, FitSpace::depth};
  const auto m = to_metric(rel, a);
  EXPECT_EQ(m.values[0], 0.0F);            // no data stays no data
  EXPECT_FLOAT_EQ(m.values[1], 0.4F);
  EXPECT_EQ(m.values[2], 0.0F);            // 14.9 m is beyond range
  EXPECT_EQ(m.values[3], 0.0F);            // negative depth
  EXPECT_EQ(code_of([&] { to_metric(rel, ScaleAlignment{1, 0, FitSpace::inverse_depth}); }), ErrorCode::convention);
}

TEST(Reconstruction, FixedDistancePutsMedianAtCaptureDistance) {
  DepthMap rel(5, 1, DepthConvention::relative_inverse_depth);
  rel.values = {1.0F, 2.0F, 4.0F, 8.0F, 0.0F};
  const auto a = fit_fixed_distance(rel);
  EXPECT_EQ(a.space, FitSpace::inverse_depth);
  EXPECT_EQ(a.inlier_count, 4U);
  // even count: median of {1,2,4,8} is 3
  const auto m = to_metric(rel, a);
  EXPECT_NEAR(3.0 * a.scale, 1.0 / 0.61, 1e-12);
  EXPECT_NEAR(m.values[1], 0.61 * 3.0 / 2.0, 1e-6);

  DepthMap flat(3, 3, DepthConvention::relative_depth, 7.0F);
  const auto f = to_metric(flat, fit_fixed_distance(flat, 0.61));
  for (float v : f.values) EXPECT_FLOAT_EQ(v, 0.61F);
  EXPECT_EQ(code_of([] { fit_fixed_distance(DepthMap(2, 2, DepthConvention::relative_depth)); }),
            ErrorCode::insufficient_data);
}

TEST(Reconstruction, CloudFromFlatPlane) {
  const auto k = default_capture_intrinsics();
  DepthMap d(k.width, k.height, DepthConvention::metric_meters, 0.61F);
  const auto cloud = depth_to_cloud(d, k, RangeFilter{});
  ASSERT_EQ(cloud.size(), static_cast<std::size_t>(k.width) * k.height);
  EXPECT_FALSE(cloud.has_colors());
  double xmin = 1e9, xmax = -1e9;
  for (const auto& p : cloud.points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ASSERT_FLOAT_EQ(static_cast<float>(p.z), 0.61F);
  }
  EXPECT_NEAR(xmin, -0.422384025136821, 1e-7);
  EXPECT_NEAR(xmax, 0.421724050097545, 1e-7);
  // row-major: second point is pixel (1, 0)
  EXPECT_NEAR(cloud.points[1].x - cloud.points[0].x, 0.61F / k.fx, 1e-12);
}

TEST(Reconstruction, CloudHonoursRangeFilterAndColours) {
  CameraIntrinsics k{100, 100, 2, 1.5, 4, 3};
  DepthMap d(4, 3, DepthConvention::metric_meters);
  d.values = {0.1F, 0.15F, 0.5F, 2.0F, 2.01F, 0.0F, 1.0F, 1.0F, 0.0F, 0.3F, 0.3F, 9.0F};
  RgbImage rgb;
  rgb.width = 4;
  rgb.height = 3;
  for (int i = 0; i < 12; ++i) {
    rgb.pixels.push_back(static_cast<std::uint8_t>(i));
    rgb.pixels.push_back(0);
    rgb.pixels.push_back(255);
  }
  const auto cloud = depth_to_cloud(d, k, RangeFilter{}, &rgb);
  // inclusive bounds keep 0.15 and 2.0
  std::vector<int> kept_pixels{1, 2, 3, 6, 7, 9, 10};
  ASSERT_EQ(cloud.size(), kept_pixels.size());
  for (std::size_t i = 0; i < kept_pixels.size(); ++i) EXPECT_EQ(cloud.colors[i][0], kept_pixels[i]);

  EXPECT_EQ(code_of([&] { depth_to_cloud(DepthMap(4, 3, DepthConvention::relative_depth, 1.0F), k, {}); }),
            ErrorCode::convention);
  EXPECT_EQ(code_of([&] { depth_to_cloud(DepthMap(5, 3, DepthConvention::metric_meters, 1.0F), k, {}); }),
            ErrorCode::dimension);
  EXPECT_EQ(code_of([&] { depth_to_cloud(d, k, RangeFilter{1.0, 0.5}); }), ErrorCode::invalid_argument);
}

TEST(Reconstruction, CloudCountEqualsInRangePixelsProperty) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<float> depth(0.0F, 3.0F);
  std::bernoulli_distribution hole(0.2);
  CameraIntrinsics k = intrinsics_from_fov(64, 48, 69.4, 42.5);
  for (int trial = 0; trial < 50; ++trial) {
    DepthMap d(64, 48, DepthConvention::metric_meters);
    std::size_t expected = 0;
    for (auto& v : d.values) {
      v = hole(rng) ? 0.0F : depth(rng);
      if (v >= 0.15F && v <= 2.0F) ++expected;
    }
    ASSERT_EQ(depth_to_cloud(d, k, RangeFilter{}).size(), expected);
  }
}
