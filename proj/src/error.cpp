#include "fruitlet/error.hpp"

namespace fruitlet {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_depth: return "invalid-depth";
    case ErrorCode::out_of_bounds: return "out-of-bounds";
    case ErrorCode::behind_camera: return "behind-camera";
    case ErrorCode::parse: return "parse";
    case ErrorCode::format: return "format";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::io: return "io";
    case ErrorCode::schema: return "schema";
    case ErrorCode::value: return "value";
    case ErrorCode::duplicate_key: return "duplicate-key";
    case ErrorCode::backend: return "backend";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::rank_deficient: return "rank-deficient";
    case ErrorCode::convention: return "convention";
    case ErrorCode::insufficient_depth: return "insufficient-depth";
    case ErrorCode::missing_keypoint: return "missing-keypoint";
    case ErrorCode::degenerate_pose: return "degenerate-pose";
    case ErrorCode::undefined_ap: return "undefined-ap";
    case ErrorCode::contract: return "contract";
    case ErrorCode::config: return "config";
  }
  return "unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message, std::size_t line) {
  std::string out{to_string(code)};
  out += " error";
  if (line != 0) {
    out += " (line ";
    out += std::to_string(line);
    out += ")";
  }
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::size_t line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

}  // namespace fruitlet
