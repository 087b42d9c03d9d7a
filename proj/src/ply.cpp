#include "fruitlet/ply.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <string>

#include <fmt/format.h>

#include "fruitlet/error.hpp"
#include "text_util.hpp"

namespace fruitlet {

namespace {

void put_le(std::string& buf, float value) {
  auto word = std::bit_cast<std::uint32_t>(value);
  if constexpr (std::endian::native == std::endian::big) word = __builtin_bswap32(word);
  char bytes[4];
  std::memcpy(bytes, &word, 4);
  buf.append(bytes, 4);
}

float get_le(const char* p) {
  std::uint32_t word = 0;
  std::memcpy(&word, p, 4);
  if constexpr (std::endian::native == std::endian::big) word = __builtin_bswap32(word);
  return std::bit_cast<float>(word);
}

}  // namespace

void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format) {
  if (cloud.has_colors() && cloud.colors.size() != cloud.points.size()) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("cloud has {} points but {} colors", cloud.points.size(), cloud.colors.size()));
  }
  const bool colored = cloud.has_colors();
  std::string buf;
  buf += "ply\n";
  buf += format == PlyFormat::ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  buf += fmt::format("element vertex {}\n", cloud.points.size());
  buf += "property float x\nproperty float y\nproperty float z\n";
  if (colored) buf += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  buf += "end_header\n";

  if (format == PlyFormat::ascii) {
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      const auto& p = cloud.points[i];
      buf += detail::format_shortest(static_cast<float>(p.x));
      buf += ' ';
      buf += detail::format_shortest(static_cast<float>(p.y));
      buf += ' ';
      buf += detail::format_shortest(static_cast<float>(p.z));
      if (colored) {
        const auto& c = cloud.colors[i];
        buf += fmt::format(" {} {} {}", c[0], c[1], c[2]);
      }
      buf += '\n';
    }
  } else {
    buf.reserve(buf.size() + cloud.points.size() * (colored ? 15 : 12));
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      const auto& p = cloud.points[i];
      put_le(buf, static_cast<float>(p.x));
      put_le(buf, static_cast<float>(p.y));
      put_le(buf, static_cast<float>(p.z));
      if (colored) buf.append(reinterpret_cast<const char*>(cloud.colors[i].data()), 3);
    }
  }
  detail::write_text_file(path, buf);
}

PointCloud read_ply(const std::filesystem::path& path) {
  const std::string data = detail::read_text_file(path);
  const auto header_end = data.find("end_header\n");
  if (data.rfind("ply\n", 0) != 0 || header_end == std::string::npos) {
    throw Error(ErrorCode::format, fmt::format("'{}' is not a PLY file", path.string()));
  }
  const auto header = std::string_view(data).substr(0, header_end);
  bool binary = false;
  std::size_t vertex_count = 0;
  std::vector<std::string> properties;
  for (auto line : detail::split_lines(header)) {
    const auto f = detail::split_whitespace(line);
    if (f.empty() || f[0] == "ply" || f[0] == "comment") continue;
    if (f[0] == "format" && f.size() == 3) {
      if (f[1] == "binary_little_endian") {
        binary = true;
      } else if (f[1] != "ascii") {
        throw Error(ErrorCode::format, fmt::format("unsupported PLY encoding '{}'", f[1]));
      }
    } else if (f[0] == "element" && f.size() == 3) {
      if (f[1] != "vertex") throw Error(ErrorCode::format, fmt::format("unsupported PLY element '{}'", f[1]));
      const auto n = detail::parse_int(f[2]);
      if (!n || *n < 0) throw Error(ErrorCode::format, "bad vertex count");
      vertex_count = static_cast<std::size_t>(*n);
    } else if (f[0] == "property" && f.size() == 3) {
      properties.emplace_back(f[2]);
      const bool is_pos = f[2] == "x" || f[2] == "y" || f[2] == "z";
      const bool is_col = f[2] == "red" || f[2] == "green" || f[2] == "blue";
      if ((is_pos && f[1] != "float") || (is_col && f[1] != "uchar") || (!is_pos && !is_col)) {
        throw Error(ErrorCode::format, fmt::format("unsupported PLY property '{} {}'", f[1], f[2]));
      }
    }
  }
  const std::vector<std::string> xyz{"x", "y", "z"};
  const std::vector<std::string> xyzrgb{"x", "y", "z", "red", "green", "blue"};
  if (properties != xyz && properties != xyzrgb) {
    throw Error(ErrorCode::format, "PLY vertex layout must be x y z [red green blue]");
  }
  const bool colored = properties.size() == 6;

  PointCloud cloud;
  cloud.points.resize(vertex_count);
  if (colored) cloud.colors.resize(vertex_count);
  const std::size_t body = header_end + std::string_view("end_header\n").size();

  if (binary) {
    const std::size_t stride = colored ? 15 : 12;
    if (data.size() - body < vertex_count * stride) throw Error(ErrorCode::format, "PLY payload is truncated");
    const char* p = data.data() + body;
    for (std::size_t i = 0; i < vertex_count; ++i, p += stride) {
      cloud.points[i] = {get_le(p), get_le(p + 4), get_le(p + 8)};
      if (colored) std::memcpy(cloud.colors[i].data(), p + 12, 3);
    }
    return cloud;
  }

  const auto lines = detail::split_lines(std::string_view(data).substr(body));
  if (lines.size() < vertex_count) throw Error(ErrorCode::format, "PLY payload is truncated");
  for (std::size_t i = 0; i < vertex_count; ++i) {
    const auto f = detail::split_whitespace(lines[i]);
    if (f.size() != properties.size()) throw Error(ErrorCode::format, "PLY vertex has wrong field count", i + 1);
    float xyz_values[3];
    for (int k = 0; k < 3; ++k) {
      float v = 0.0F;
      const auto [ptr, ec] = std::from_chars(f[k].data(), f[k].data() + f[k].size(), v);
      if (ec != std::errc{} || ptr != f[k].data() + f[k].size()) throw Error(ErrorCode::format, "bad PLY coordinate", i + 1);
      xyz_values[k] = v;
    }
    cloud.points[i] = {xyz_values[0], xyz_values[1], xyz_values[2]};
    if (colored) {
      for (int k = 0; k < 3; ++k) {
        const auto c = detail::parse_int(f[3 + k]);
        if (!c || *c < 0 || *c > 255) throw Error(ErrorCode::format, "bad PLY color", i + 1);
        cloud.colors[i][k] = static_cast<std::uint8_t>(*c);
      }
    }
  }
  return cloud;
}

}  // namespace fruitlet
