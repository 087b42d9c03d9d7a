#include "fruitlet/depth_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include <fmt/format.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "fruitlet/error.hpp"
#include "text_util.hpp"

namespace fruitlet {

namespace {

constexpr double kMillimetersPerMeter = 1000.0;

std::string lower_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

DepthMap read_depth_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::io, fmt::format("depth file '{}' does not exist", path.string()));
  }
  const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw Error(ErrorCode::format, fmt::format("cannot decode '{}'", path.string()));
  if (raw.depth() != CV_16U || raw.channels() != 1) {
    throw Error(ErrorCode::format,
                fmt::format("'{}' must be a 16-bit single-channel PNG (got {} channels, depth code {})",
                            path.string(), raw.channels(), raw.depth()));
  }
  DepthMap out(raw.cols, raw.rows, DepthConvention::metric_meters);
  for (int y = 0; y < raw.rows; ++y) {
    const auto* row = raw.ptr<std::uint16_t>(y);
    for (int x = 0; x < raw.cols; ++x) {
      out.at(x, y) = static_cast<float>(row[x] / kMillimetersPerMeter);
    }
  }
  return out;
}

std::string read_token(std::istream& in) {
  std::string token;
  in >> token;
  return token;
}

}  // namespace

DepthMap read_pfm(const std::filesystem::path& path, DepthConvention convention) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, fmt::format("cannot open '{}'", path.string()));

  const auto magic = read_token(in);
  if (magic == "PF") {
    throw Error(ErrorCode::format, fmt::format("'{}' is a 3-channel PFM; depth needs one channel", path.string()));
  }
  if (magic != "Pf") throw Error(ErrorCode::format, fmt::format("'{}' is not a PFM file", path.string()));

  const auto width = detail::parse_int(read_token(in));
  const auto height = detail::parse_int(read_token(in));
  const auto scale = detail::parse_double(read_token(in));
  if (!width || !height || !scale || *width <= 0 || *height <= 0 || *scale == 0.0) {
    throw Error(ErrorCode::format, fmt::format("'{}' has a malformed PFM header", path.string()));
  }
  in.get();  // the single whitespace byte ending the header

  const bool little_endian = *scale < 0.0;
  const auto count = static_cast<std::size_t>(*width) * static_cast<std::size_t>(*height);
  std::vector<std::uint32_t> words(count);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(count * sizeof(std::uint32_t)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(std::uint32_t)) {
    throw Error(ErrorCode::format, fmt::format("'{}' is truncated", path.string()));
  }

  const bool host_little = std::endian::native == std::endian::little;
  DepthMap out(static_cast<int>(*width), static_cast<int>(*height), convention);
  for (int file_row = 0; file_row < out.height; ++file_row) {
    // PFM stores the bottom image row first.
    const int y = out.height - 1 - file_row;
    for (int x = 0; x < out.width; ++x) {
      auto word = words[static_cast<std::size_t>(file_row) * out.width + x];
      if (little_endian != host_little) word = __builtin_bswap32(word);
      out.at(x, y) = std::bit_cast<float>(word);
    }
  }
  for (float v : out.values) {
    if (!std::isfinite(v) || v < 0.0F) {
      throw Error(ErrorCode::value, fmt::format("'{}' holds depth value {}", path.string(), v));
    }
  }
  return out;
}

DepthMap load_depth(const std::filesystem::path& path, DepthConvention convention,
                    std::optional<ImageSize> expected) {
  const auto ext = lower_extension(path);
  DepthMap depth;
  if (ext == ".png") {
    if (convention != DepthConvention::metric_meters) {
      throw Error(ErrorCode::convention,
                  fmt::format("'{}': 16-bit PNG depth is millimeter metric, not {}", path.string(),
                              to_string(convention)));
    }
    depth = read_depth_png(path);
  } else if (ext == ".pfm") {
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::io, fmt::format("depth file '{}' does not exist", path.string()));
    }
    depth = read_pfm(path, convention);
  } else {
    throw Error(ErrorCode::format, fmt::format("unsupported depth file type '{}'", path.string()));
  }
  if (expected && (depth.width != expected->width || depth.height != expected->height)) {
    throw Error(ErrorCode::dimension, fmt::format("'{}' is {}x{}, expected {}x{}", path.string(), depth.width,
                                                  depth.height, expected->width, expected->height));
  }
  return depth;
}

void write_depth_png(const DepthMap& depth, const std::filesystem::path& path) {
  if (depth.convention != DepthConvention::metric_meters) {
    throw Error(ErrorCode::convention, "only metric depth can be stored as millimeter PNG");
  }
  depth.validate();
  cv::Mat raw(depth.height, depth.width, CV_16UC1);
  for (int y = 0; y < depth.height; ++y) {
    auto* row = raw.ptr<std::uint16_t>(y);
    for (int x = 0; x < depth.width; ++x) {
      const double mm = std::round(depth.at(x, y) * kMillimetersPerMeter);
      if (mm > 65535.0) throw Error(ErrorCode::value, fmt::format("depth {} m exceeds 16-bit millimeters", depth.at(x, y)));
      row[x] = static_cast<std::uint16_t>(mm);
    }
  }
  if (!cv::imwrite(path.string(), raw)) throw Error(ErrorCode::io, fmt::format("cannot write '{}'", path.string()));
}

void write_pfm(const DepthMap& depth, const std::filesystem::path& path) {
  depth.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, fmt::format("cannot write '{}'", path.string()));
  out << "Pf\n" << depth.width << ' ' << depth.height << "\n-1.0\n";
  const bool host_little = std::endian::native == std::endian::little;
  for (int y = depth.height - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width; ++x) {
      auto word = std::bit_cast<std::uint32_t>(depth.at(x, y));
      if (!host_little) word = __builtin_bswap32(word);
      out.write(reinterpret_cast<const char*>(&word), sizeof(word));
    }
  }
  if (!out) throw Error(ErrorCode::io, fmt::format("failed writing '{}'", path.string()));
}

}  // namespace fruitlet
