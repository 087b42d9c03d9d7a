#include <filesystem>

#include <fmt/format.h>

#include "backends.hpp"
#include "fruitlet/depth_io.hpp"
#include "fruitlet/error.hpp"
#include "fruitlet/pose_io.hpp"
#include "text_util.hpp"

namespace fruitlet {

namespace detail {

void check_input_image(std::string_view image_id, const RgbImage& image) {
  if (image.width < 32 || image.height < 32) {
    throw Error(ErrorCode::backend,
                fmt::format("image '{}' is {}x{}, below the 32x32 minimum", image_id, image.width, image.height));
  }
}

namespace {

// Replays `<dir>/<image_id>.txt` pose files and `<dir>/<image_id>.pfm|png` depth files.
class FileOraclePose final : public PoseBackend {
 public:
  explicit FileOraclePose(BackendConfig cfg) : cfg_(std::move(cfg)) {}

  PoseResult detect_pose(std::string_view image_id, const RgbImage& image) override {
    if (!image.empty()) check_input_image(image_id, image);
    PoseResult result;
    Stopwatch clock;
    result.timing.preprocess_ms = clock.lap_ms();

    const auto path = cfg_.path / (std::string(image_id) + ".txt");
    std::vector<PoseDetection> raw;
    try {
      raw = parse_pose_file(read_text_file(path), image_id);
    } catch (const Error& e) {
      throw Error(ErrorCode::backend, fmt::format("image '{}': {} ({})", image_id, e.what(), path.string()));
    }
    result.timing.inference_ms = clock.lap_ms();

    result.detections = filter_and_sort(std::move(raw), cfg_.confidence_threshold);
    result.timing.postprocess_ms = clock.lap_ms();
    return result;
  }

 private:
  BackendConfig cfg_;
};

class FileOracleDepth final : public DepthBackend {
 public:
  explicit FileOracleDepth(BackendConfig cfg) : cfg_(std::move(cfg)) {}

  DepthMap estimate_depth(std::string_view image_id, const RgbImage& image) override {
    if (!image.empty()) check_input_image(image_id, image);
    const auto stem = cfg_.path / std::string(image_id);
    auto pfm = stem;
    pfm += ".pfm";
    auto png = stem;
    png += ".png";
    std::optional<ImageSize> expected;
    if (!image.empty()) expected = ImageSize{image.width, image.height};
    try {
      if (std::filesystem::exists(pfm)) return load_depth(pfm, cfg_.depth_convention, expected);
      if (std::filesystem::exists(png)) return load_depth(png, DepthConvention::metric_meters, expected);
    } catch (const Error& e) {
      throw Error(ErrorCode::backend, fmt::format("image '{}': {}", image_id, e.what()));
    }
    throw Error(ErrorCode::backend,
                fmt::format("image '{}': no depth file at '{}' or '{}'", image_id, pfm.string(), png.string()));
  }

 private:
  BackendConfig cfg_;
};

}  // namespace

std::unique_ptr<PoseBackend> make_file_oracle_pose(const BackendConfig& cfg) {
  return std::make_unique<FileOraclePose>(cfg);
}

std::unique_ptr<DepthBackend> make_file_oracle_depth(const BackendConfig& cfg) {
  return std::make_unique<FileOracleDepth>(cfg);
}

}  // namespace detail

std::unique_ptr<PoseBackend> make_pose_backend(const BackendConfig& cfg) {
  cfg.validate();
  return cfg.kind == BackendKind::onnx ? detail::make_onnx_pose(cfg) : detail::make_file_oracle_pose(cfg);
}

std::unique_ptr<DepthBackend> make_depth_backend(const BackendConfig& cfg) {
  cfg.validate();
  return cfg.kind == BackendKind::onnx ? detail::make_onnx_depth(cfg) : detail::make_file_oracle_depth(cfg);
}

}  // namespace fruitlet
