// ONNX backends run through OpenCV's dnn module.

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>
#include <opencv2/imgproc.hpp>

#include "backends.hpp"
#include "fruitlet/error.hpp"

namespace fruitlet::detail {

namespace {

// Raw pose tensor rows: cx, cy, w, h, score, then (x, y, conf) per keypoint.
constexpr int kPoseChannels = 5 + 3 * 2;
constexpr double kKeypointVisibleConfidence = 0.5;
constexpr float kLetterboxPad = 114.0F;
constexpr float kMinInverseDepth = 1e-6F;

cv::Mat wrap(const RgbImage& image) {
  return cv::Mat(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.pixels.data()));
}

cv::dnn::Net load_net(const BackendConfig& cfg) {
  try {
    auto net = cv::dnn::readNetFromONNX(cfg.path.string());
    if (net.empty()) throw Error(ErrorCode::backend, fmt::format("model '{}' is empty", cfg.path.string()));
    return net;
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::backend, fmt::format("cannot load model '{}': {}", cfg.path.string(), e.what()));
  }
}

cv::Mat forward(cv::dnn::Net& net, const cv::Mat& blob, std::string_view image_id) {
  try {
    net.setInput(blob);
    return net.forward().clone();
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::backend, fmt::format("image '{}': inference failed: {}", image_id, e.what()));
  }
}

struct Letterbox {
  double scale = 1.0;
  double pad_x = 0.0;
  double pad_y = 0.0;
};

class OnnxPose final : public PoseBackend {
 public:
  explicit OnnxPose(const BackendConfig& cfg) : cfg_(cfg), net_(load_net(cfg)) {}

  PoseResult detect_pose(std::string_view image_id, const RgbImage& image) override {
    if (image.empty()) throw Error(ErrorCode::backend, fmt::format("image '{}': ONNX backend needs pixels", image_id));
    check_input_image(image_id, image);
    PoseResult result;
    Stopwatch clock;

    const int size = cfg_.input_size;
    Letterbox lb;
    lb.scale = std::min(static_cast<double>(size) / image.width, static_cast<double>(size) / image.height);
    const int new_w = static_cast<int>(std::lround(image.width * lb.scale));
    const int new_h = static_cast<int>(std::lround(image.height * lb.scale));
    lb.pad_x = (size - new_w) / 2.0;
    lb.pad_y = (size - new_h) / 2.0;
    cv::Mat resized;
    cv::resize(wrap(image), resized, {new_w, new_h}, 0, 0, cv::INTER_LINEAR);
    cv::Mat canvas(size, size, CV_8UC3, cv::Scalar::all(kLetterboxPad));
    resized.copyTo(canvas(cv::Rect(static_cast<int>(std::floor(lb.pad_x)), static_cast<int>(std::floor(lb.pad_y)),
                                   new_w, new_h)));
    lb.pad_x = std::floor(lb.pad_x);
    lb.pad_y = std::floor(lb.pad_y);
    const cv::Mat blob = cv::dnn::blobFromImage(canvas, 1.0 / 255.0, {size, size}, cv::Scalar(), false, false);
    result.timing.preprocess_ms = clock.lap_ms();

    const cv::Mat out = forward(net_, blob, image_id);
    result.timing.inference_ms = clock.lap_ms();

    result.detections = decode(out, lb, image, image_id);
    result.timing.postprocess_ms = clock.lap_ms();
    return result;
  }

 private:
  std::vector<PoseDetection> decode(const cv::Mat& out, const Letterbox& lb, const RgbImage& image,
                                    std::string_view image_id) const {
    if (out.dims != 3 || out.size[0] != 1 || (out.size[1] != kPoseChannels && out.size[2] != kPoseChannels)) {
      throw Error(ErrorCode::backend, fmt::format("image '{}': pose output must be [1,{},N] or [1,N,{}]", image_id,
                                                  kPoseChannels, kPoseChannels));
    }
    const bool channel_major = out.size[1] == kPoseChannels;
    const int anchors = channel_major ? out.size[2] : out.size[1];
    const auto* data = out.ptr<float>();
    const auto value = [&](int channel, int anchor) -> double {
      return channel_major ? data[channel * anchors + anchor] : data[anchor * kPoseChannels + channel];
    };
    const auto norm_x = [&](double px) { return std::clamp((px - lb.pad_x) / lb.scale / image.width, 0.0, 1.0); };
    const auto norm_y = [&](double py) { return std::clamp((py - lb.pad_y) / lb.scale / image.height, 0.0, 1.0); };
    const auto keypoint = [&](int first_channel, int a) {
      const double conf = value(first_channel + 2, a);
      return Keypoint{norm_x(value(first_channel, a)), norm_y(value(first_channel + 1, a)),
                      conf >= kKeypointVisibleConfidence ? Visibility::visible : Visibility::occluded};
    };

    std::vector<PoseDetection> candidates;
    for (int a = 0; a < anchors; ++a) {
      const double score = value(4, a);
      if (score < cfg_.confidence_threshold) continue;
      const double cx = value(0, a), cy = value(1, a), w = value(2, a), h = value(3, a);
      const double left = norm_x(cx - w / 2.0), right = norm_x(cx + w / 2.0);
      const double top = norm_y(cy - h / 2.0), bottom = norm_y(cy + h / 2.0);
      if (!(right > left) || !(bottom > top)) continue;
      PoseDetection det;
      det.image_id = std::string(image_id);
      det.bbox = {(left + right) / 2.0, (top + bottom) / 2.0, right - left, bottom - top};
      det.confidence = std::clamp(score, 0.0, 1.0);
      det.calyx = keypoint(5, a);
      det.peduncle = keypoint(8, a);
      candidates.push_back(std::move(det));
    }
    return non_max_suppression(std::move(candidates), cfg_.iou_nms_threshold);
  }

  BackendConfig cfg_;
  cv::dnn::Net net_;
};

// Relative inverse depth producer (Depth Anything / DPT style export):
// ImageNet-normalized [1,3,S,S] in, [1,S,S] or [1,1,S,S] out.
class OnnxDepth final : public DepthBackend {
 public:
  explicit OnnxDepth(const BackendConfig& cfg) : cfg_(cfg), net_(load_net(cfg)) {}

  DepthMap estimate_depth(std::string_view image_id, const RgbImage& image) override {
    if (image.empty()) throw Error(ErrorCode::backend, fmt::format("image '{}': ONNX backend needs pixels", image_id));
    check_input_image(image_id, image);
    const int size = cfg_.input_size;

    cv::Mat resized;
    cv::resize(wrap(image), resized, {size, size}, 0, 0, cv::INTER_CUBIC);
    cv::Mat scaled;
    resized.convertTo(scaled, CV_32FC3, 1.0 / 255.0);
    scaled -= cv::Scalar(0.485, 0.456, 0.406);
    cv::divide(scaled, cv::Scalar(0.229, 0.224, 0.225), scaled);
    const cv::Mat blob = cv::dnn::blobFromImage(scaled, 1.0, {size, size}, cv::Scalar(), false, false, CV_32F);

    const cv::Mat out = forward(net_, blob, image_id);
    const bool shape_ok = (out.dims == 3 && out.size[0] == 1 && out.size[1] == size && out.size[2] == size) ||
                          (out.dims == 4 && out.size[0] == 1 && out.size[1] == 1 && out.size[2] == size &&
                           out.size[3] == size);
    if (!shape_ok) {
      throw Error(ErrorCode::backend, fmt::format("image '{}': depth output must be [1,{},{}] or [1,1,{},{}]",
                                                  image_id, size, size, size, size));
    }
    const cv::Mat plane(size, size, CV_32F, const_cast<float*>(out.ptr<float>()));
    cv::Mat full;
    cv::resize(plane, full, {image.width, image.height}, 0, 0, cv::INTER_LINEAR);

    DepthMap depth(image.width, image.height, DepthConvention::relative_inverse_depth);
    for (int y = 0; y < image.height; ++y) {
      const auto* row = full.ptr<float>(y);
      for (int x = 0; x < image.width; ++x) {
        if (!std::isfinite(row[x])) {
          throw Error(ErrorCode::backend, fmt::format("image '{}': model produced a non-finite value", image_id));
        }
        // Zero is the no-data marker, so model outputs are floored above it.
        depth.at(x, y) = std::max(row[x], kMinInverseDepth);
      }
    }
    return depth;
  }

 private:
  BackendConfig cfg_;
  cv::dnn::Net net_;
};

}  // namespace

std::unique_ptr<PoseBackend> make_onnx_pose(const BackendConfig& cfg) { return std::make_unique<OnnxPose>(cfg); }

std::unique_ptr<DepthBackend> make_onnx_depth(const BackendConfig& cfg) { return std::make_unique<OnnxDepth>(cfg); }

}  // namespace fruitlet::detail
