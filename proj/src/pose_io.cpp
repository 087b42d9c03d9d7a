#include "fruitlet/pose_io.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "fruitlet/error.hpp"
#include "text_util.hpp"

namespace fruitlet {

namespace {

constexpr std::size_t kAnnotationFields = 11;
constexpr std::size_t kPredictionFields = 12;

double unit_field(std::string_view token, std::string_view name, std::size_t line) {
  const auto value = detail::parse_double(token);
  if (!value) throw Error(ErrorCode::parse, fmt::format("{} '{}' is not a number", name, token), line);
  if (!(*value >= 0.0 && *value <= 1.0)) {
    throw Error(ErrorCode::parse, fmt::format("{} {} outside [0, 1]", name, *value), line);
  }
  return *value;
}

Visibility visibility_field(std::string_view token, std::size_t line) {
  const auto value = detail::parse_double(token);
  if (!value || (*value != 0.0 && *value != 1.0 && *value != 2.0)) {
    throw Error(ErrorCode::parse, fmt::format("keypoint visibility '{}' must be 0, 1 or 2", token), line);
  }
  return static_cast<Visibility>(static_cast<int>(*value));
}

BBox clamp_to_image(BBox box) {
  const double left = std::max(0.0, box.left());
  const double right = std::min(1.0, box.right());
  const double top = std::max(0.0, box.top());
  const double bottom = std::min(1.0, box.bottom());
  if (left == box.left() && right == box.right() && top == box.top() && bottom == box.bottom()) return box;
  return {(left + right) / 2.0, (top + bottom) / 2.0, right - left, bottom - top};
}

}  // namespace

std::vector<PoseDetection> parse_pose_file(std::string_view text, std::string_view image_id) {
  std::vector<PoseDetection> out;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto fields = detail::split_whitespace(lines[i]);
    if (fields.empty()) continue;
    if (fields.size() != kAnnotationFields && fields.size() != kPredictionFields) {
      throw Error(ErrorCode::parse,
                  fmt::format("expected {} or {} fields, found {}", kAnnotationFields, kPredictionFields,
                              fields.size()),
                  line_no);
    }
    const auto cls = detail::parse_double(fields[0]);
    if (!cls || *cls != 0.0) {
      throw Error(ErrorCode::parse, fmt::format("unknown class id '{}'", fields[0]), line_no);
    }

    PoseDetection det;
    det.image_id = std::string(image_id);
    det.bbox = {unit_field(fields[1], "box cx", line_no), unit_field(fields[2], "box cy", line_no),
                unit_field(fields[3], "box w", line_no), unit_field(fields[4], "box h", line_no)};
    if (!(det.bbox.w > 0.0) || !(det.bbox.h > 0.0)) {
      throw Error(ErrorCode::parse, "box width and height must be positive", line_no);
    }
    det.bbox = clamp_to_image(det.bbox);
    det.calyx = {unit_field(fields[5], "calyx x", line_no), unit_field(fields[6], "calyx y", line_no),
                 visibility_field(fields[7], line_no)};
    det.peduncle = {unit_field(fields[8], "peduncle x", line_no), unit_field(fields[9], "peduncle y", line_no),
                    visibility_field(fields[10], line_no)};
    det.confidence = fields.size() == kPredictionFields ? unit_field(fields[11], "confidence", line_no) : 1.0;
    out.push_back(std::move(det));
  }
  return out;
}

std::vector<PoseDetection> load_pose_file(const std::filesystem::path& path) {
  const auto text = detail::read_text_file(path);
  return parse_pose_file(text, path.stem().string());
}

std::string format_pose_file(const std::vector<PoseDetection>& detections, bool with_confidence) {
  using detail::format_shortest;
  std::string out;
  for (const auto& d : detections) {
    out += fmt::format("0 {} {} {} {} {} {} {} {} {} {}", format_shortest(d.bbox.cx), format_shortest(d.bbox.cy),
                       format_shortest(d.bbox.w), format_shortest(d.bbox.h), format_shortest(d.calyx.x),
                       format_shortest(d.calyx.y), static_cast<int>(d.calyx.visibility),
                       format_shortest(d.peduncle.x), format_shortest(d.peduncle.y),
                       static_cast<int>(d.peduncle.visibility));
    if (with_confidence) {
      out += ' ';
      out += format_shortest(d.confidence);
    }
    out += '\n';
  }
  return out;
}

}  // namespace fruitlet
