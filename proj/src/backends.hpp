#pragma once

#include <chrono>
#include <memory>

#include "fruitlet/inference.hpp"

namespace fruitlet::detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}

  /// Milliseconds since construction or the previous lap.
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const std::chrono::duration<double, std::milli> elapsed = now - start_;
    start_ = now;
    return elapsed.count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::unique_ptr<PoseBackend> make_file_oracle_pose(const BackendConfig& cfg);
std::unique_ptr<DepthBackend> make_file_oracle_depth(const BackendConfig& cfg);
std::unique_ptr<PoseBackend> make_onnx_pose(const BackendConfig& cfg);
std::unique_ptr<DepthBackend> make_onnx_depth(const BackendConfig& cfg);

void check_input_image(std::string_view image_id, const RgbImage& image);

}  // namespace fruitlet::detail
