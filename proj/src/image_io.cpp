#include "fruitlet/image_io.hpp"

#include <cstring>

#include <fmt/format.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "fruitlet/error.hpp"

namespace fruitlet {

RgbImage load_rgb(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::io, fmt::format("image '{}' does not exist", path.string()));
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw Error(ErrorCode::format, fmt::format("cannot decode image '{}'", path.string()));
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  RgbImage out{rgb.cols, rgb.rows, std::vector<std::uint8_t>(rgb.total() * 3)};
  for (int y = 0; y < rgb.rows; ++y) {
    std::memcpy(out.pixels.data() + static_cast<std::size_t>(y) * rgb.cols * 3, rgb.ptr(y),
                static_cast<std::size_t>(rgb.cols) * 3);
  }
  return out;
}

void write_rgb(const RgbImage& image, const std::filesystem::path& path) {
  cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.pixels.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr)) throw Error(ErrorCode::io, fmt::format("cannot write '{}'", path.string()));
}

}  // namespace fruitlet
