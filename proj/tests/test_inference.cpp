#include <cmath>
#include <thread>

#include <gtest/gtest.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "fruitlet/depth_io.hpp"
#include "fruitlet/error.hpp"
#include "fruitlet/inference.hpp"
#include "fruitlet/pose_io.hpp"
#include "support/test_support.hpp"

using namespace fruitlet;
using fruitlet::fixtures::TempDir;
using fruitlet::fixtures::data_dir;
using fruitlet::fixtures::make_det;

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

RgbImage solid_image(int w, int h, std::uint8_t v) {
  RgbImage img;
  img.width = w;
  img.height = h;
  img.pixels.assign(static_cast<std::size_t>(w) * h * 3, v);
  return img;
}

BackendConfig oracle_config(const std::filesystem::path& dir) {
  BackendConfig cfg;
  cfg.kind = BackendKind::file_oracle;
  cfg.path = dir;
  return cfg;
}

}  // namespace

TEST(Inference, MeanPhaseTiming) {
  const std::vector<PhaseTiming> t{{1, 10, 2}, {3, 20, 4}};
  const auto m = mean_phase_timing(t);
  EXPECT_DOUBLE_EQ(m.preprocess_ms, 2.0);
  EXPECT_DOUBLE_EQ(m.inference_ms, 15.0);
  EXPECT_DOUBLE_EQ(m.postprocess_ms, 3.0);
  EXPECT_DOUBLE_EQ(m.total_ms(), 20.0);
  EXPECT_EQ(code_of([] { mean_phase_timing({}); }), ErrorCode::empty_input);
}

TEST(Inference, BackendKindNames) {
  EXPECT_EQ(parse_backend_kind("file"), BackendKind::file_oracle);
  EXPECT_EQ(parse_backend_kind("file-oracle"), BackendKind::file_oracle);
  EXPECT_EQ(parse_backend_kind("onnx"), BackendKind::onnx);
  EXPECT_EQ(code_of([] { parse_backend_kind("tensorrt"); }), ErrorCode::config);
}

TEST(Inference, ConfigValidation) {
  TempDir dir("cfg");
  auto cfg = oracle_config(dir.path());
  EXPECT_NO_THROW(cfg.validate());
  cfg.confidence_threshold = 1.5;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::config);
  cfg = oracle_config(dir / "nope");
  EXPECT_EQ(code_of([&] { make_pose_backend(cfg); }), ErrorCode::config);
  cfg = oracle_config(dir.path());
  cfg.input_size = 16;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::config);
}

TEST(Inference, FilterAndSortIsStable) {
  std::vector<PoseDetection> d{make_det(0.1, 0.1, 0.1, 0.1, 0.3), make_det(0.2, 0.2, 0.1, 0.1, 0.9),
                               make_det(0.3, 0.3, 0.1, 0.1, 0.3), make_det(0.4, 0.4, 0.1, 0.1, 0.1)};
  const auto out = filter_and_sort(d, 0.25);
  ASSERT_EQ(out.size(), 3U);
  EXPECT_EQ(out[0].bbox.cx, 0.2);
  EXPECT_EQ(out[1].bbox.cx, 0.1);
  EXPECT_EQ(out[2].bbox.cx, 0.3);
}

TEST(Inference, NonMaxSuppression) {
  std::vector<PoseDetection> d{make_det(0.5, 0.5, 0.2, 0.2, 0.6), make_det(0.51, 0.5, 0.2, 0.2, 0.9),
                               make_det(0.2, 0.2, 0.1, 0.1, 0.5)};
  const auto kept = non_max_suppression(d, 0.7);
  ASSERT_EQ(kept.size(), 2U);
  EXPECT_EQ(kept[0].confidence, 0.9);
  EXPECT_EQ(kept[1].confidence, 0.5);
  EXPECT_EQ(non_max_suppression(d, 1.0).size(), 3U);
}

TEST(FileOracle, ReplaysThresholdedSortedPredictions) {
  auto cfg = oracle_config(data_dir() / "oracle");
  cfg.confidence_threshold = 0.25;
  auto backend = make_pose_backend(cfg);
  const auto result = backend->detect_pose("stub", {});
  ASSERT_EQ(result.detections.size(), 3U);
  EXPECT_DOUBLE_EQ(result.detections[0].confidence, 0.92);
  EXPECT_DOUBLE_EQ(result.detections[1].confidence, 0.55);
  EXPECT_DOUBLE_EQ(result.detections[2].confidence, 0.4);
  for (const auto& d : result.detections) EXPECT_EQ(d.image_id, "stub");
  EXPECT_GE(result.timing.preprocess_ms, 0.0);
  EXPECT_GE(result.timing.inference_ms, 0.0);
  EXPECT_GE(result.timing.postprocess_ms, 0.0);

  cfg.confidence_threshold = 0.0;
  EXPECT_EQ(make_pose_backend(cfg)->detect_pose("stub", {}).detections.size(), 4U);
}

TEST(FileOracle, RepeatedCallsAreIdentical) {
  auto backend = make_pose_backend(oracle_config(data_dir() / "oracle"));
  const auto first = backend->detect_pose("stub", {}).detections;
  for (int i = 0; i < 5; ++i) EXPECT_EQ(backend->detect_pose("stub", {}).detections, first);
}

TEST(FileOracle, MissingOrBrokenFilesNameTheImage) {
  TempDir dir("oracle");
  std::ofstream(dir / "broken.txt") << "0 0.5\n";
  auto backend = make_pose_backend(oracle_config(dir.path()));
  for (const char* id : {"missing", "broken"}) {
    try {
      backend->detect_pose(id, {});
      ADD_FAILURE() << id;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::backend);
      EXPECT_NE(std::string(e.what()).find(id), std::string::npos);
    }
  }
  EXPECT_EQ(code_of([&] { backend->detect_pose("missing", solid_image(16, 16, 0)); }), ErrorCode::backend);
}

TEST(FileOracle, DepthPrefersPfmThenPng) {
  TempDir dir("odepth");
  DepthMap rel(40, 36, DepthConvention::relative_inverse_depth, 2.0F);
  write_pfm(rel, dir / "a.pfm");
  DepthMap metric(40, 36, DepthConvention::metric_meters, 0.61F);
  write_depth_png(metric, dir / "a.png");
  write_depth_png(metric, dir / "b.png");

  auto cfg = oracle_config(dir.path());
  auto backend = make_depth_backend(cfg);
  const auto a = backend->estimate_depth("a", {});
  EXPECT_EQ(a.convention, DepthConvention::relative_inverse_depth);
  EXPECT_EQ(a.values.front(), 2.0F);
  const auto b = backend->estimate_depth("b", solid_image(40, 36, 9));
  EXPECT_EQ(b.convention, DepthConvention::metric_meters);
  EXPECT_FLOAT_EQ(b.values.front(), 0.61F);

  EXPECT_EQ(code_of([&] { backend->estimate_depth("b", solid_image(64, 64, 9)); }), ErrorCode::backend);
  EXPECT_EQ(code_of([&] { backend->estimate_depth("c", {}); }), ErrorCode::backend);
}

TEST(OnnxBackend, PoseMatchesFileOracleFixture) {
  BackendConfig onnx;
  onnx.kind = BackendKind::onnx;
  onnx.path = data_dir() / "onnx" / "pose_stub.onnx";
  const auto got = make_pose_backend(onnx)->detect_pose("stub", solid_image(640, 640, 90));
  const auto want = make_pose_backend(oracle_config(data_dir() / "oracle"))->detect_pose("stub", {});
  ASSERT_EQ(got.detections.size(), want.detections.size());
  for (std::size_t i = 0; i < got.detections.size(); ++i) {
    const auto& g = got.detections[i];
    const auto& w = want.detections[i];
    EXPECT_NEAR(g.bbox.cx, w.bbox.cx, 1e-3);
    EXPECT_NEAR(g.bbox.cy, w.bbox.cy, 1e-3);
    EXPECT_NEAR(g.bbox.w, w.bbox.w, 1e-3);
    EXPECT_NEAR(g.bbox.h, w.bbox.h, 1e-3);
    EXPECT_NEAR(g.confidence, w.confidence, 1e-3);
    EXPECT_NEAR(g.calyx.x, w.calyx.x, 1e-3);
    EXPECT_NEAR(g.calyx.y, w.calyx.y, 1e-3);
    EXPECT_NEAR(g.peduncle.x, w.peduncle.x, 1e-3);
    EXPECT_NEAR(g.peduncle.y, w.peduncle.y, 1e-3);
    EXPECT_EQ(g.calyx.visibility, w.calyx.visibility);
    EXPECT_EQ(g.peduncle.visibility, w.peduncle.visibility);
  }
}

TEST(OnnxBackend, PoseLetterboxMapsBackToSourceFrame) {
  BackendConfig onnx;
  onnx.kind = BackendKind::onnx;
  onnx.path = data_dir() / "onnx" / "pose_stub.onnx";
  // 1280x720 letterboxes at scale 0.5 with 140 px bands above and below.
  const auto got = make_pose_backend(onnx)->detect_pose("wide", solid_image(1280, 720, 90)).detections;
  ASSERT_FALSE(got.empty());
  EXPECT_NEAR(got[0].bbox.cx, 0.5, 1e-6);
  EXPECT_NEAR(got[0].bbox.cy, (320.0 - 140.0) / 360.0, 1e-6);
  EXPECT_NEAR(got[0].bbox.h, 192.0 / 360.0, 1e-6);
  EXPECT_NEAR(got[0].bbox.w, 128.0 / 640.0, 1e-6);
}

TEST(OnnxBackend, DepthStubOutput) {
  BackendConfig onnx;
  onnx.kind = BackendKind::onnx;
  onnx.input_size = 64;
  onnx.path = data_dir() / "onnx" / "depth_stub.onnx";
  auto backend = make_depth_backend(onnx);
  const auto depth = backend->estimate_depth("d", solid_image(96, 80, 128));
  EXPECT_EQ(depth.width, 96);
  EXPECT_EQ(depth.height, 80);
  EXPECT_EQ(depth.convention, DepthConvention::relative_inverse_depth);
  const double mean[3] = {0.485, 0.456, 0.406}, stddev[3] = {0.229, 0.224, 0.225};
  double expected = 5.0;
  for (int c = 0; c < 3; ++c) expected += ((128.0 / 255.0) - mean[c]) / stddev[c] / 3.0;
  for (float v : depth.values) ASSERT_NEAR(v, expected, 1e-4);
}

TEST(OnnxBackend, RejectsMissingPixelsAndModels) {
  BackendConfig onnx;
  onnx.kind = BackendKind::onnx;
  onnx.path = data_dir() / "onnx" / "pose_stub.onnx";
  auto backend = make_pose_backend(onnx);
  EXPECT_EQ(code_of([&] { backend->detect_pose("x", {}); }), ErrorCode::backend);
  EXPECT_EQ(code_of([&] { backend->detect_pose("x", solid_image(20, 20, 0)); }), ErrorCode::backend);
  onnx.path = data_dir() / "oracle" / "stub.txt";
  EXPECT_EQ(code_of([&] { make_pose_backend(onnx); }), ErrorCode::backend);
}
