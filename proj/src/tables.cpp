#include "fruitlet/tables.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "fruitlet/error.hpp"
#include "text_util.hpp"

namespace fruitlet {

namespace {

std::vector<std::string_view> csv_fields(std::string_view line) {
  auto fields = detail::split_char(line, ',');
  for (auto& f : fields) f = detail::trim(f);
  return fields;
}

std::string_view strip_bom(std::string_view text) {
  constexpr std::string_view bom = "\xEF\xBB\xBF";
  if (text.substr(0, bom.size()) == bom) text.remove_prefix(bom.size());
  return text;
}

}  // namespace

std::vector<GroundTruthLength> parse_ground_truth(std::string_view csv) {
  const auto lines = detail::split_lines(strip_bom(csv));
  if (lines.empty()) throw Error(ErrorCode::schema, "ground-truth CSV has no header");
  const auto header = csv_fields(lines.front());
  const std::vector<std::string_view> base{"image_id", "fruit_id", "length_mm"};
  const std::vector<std::string_view> with_center{"image_id", "fruit_id", "length_mm", "center_u_px", "center_v_px"};
  if (header != base && header != with_center) {
    throw Error(ErrorCode::schema,
                fmt::format("ground-truth header must be 'image_id,fruit_id,length_mm' (got '{}')", lines.front()));
  }
  const bool has_center = header.size() == with_center.size();

  std::vector<GroundTruthLength> rows;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t row_no = i;  // data rows are numbered from 1
    if (detail::trim(lines[i]).empty()) continue;
    const auto f = csv_fields(lines[i]);
    if (f.size() != header.size()) {
      throw Error(ErrorCode::schema, fmt::format("expected {} columns, found {}", header.size(), f.size()), row_no);
    }
    if (f[0].empty() || f[1].empty()) throw Error(ErrorCode::schema, "empty image_id or fruit_id", row_no);
    GroundTruthLength rec{std::string(f[0]), std::string(f[1]), 0.0, std::nullopt};
    const auto length = detail::parse_double(f[2]);
    if (!length) throw Error(ErrorCode::value, fmt::format("length '{}' is not a number", f[2]), row_no);
    if (!(*length > 0.0) || !std::isfinite(*length)) {
      throw Error(ErrorCode::value, fmt::format("length {} mm is not positive", *length), row_no);
    }
    rec.length_mm = *length;
    if (has_center && !(f[3].empty() && f[4].empty())) {
      const auto u = detail::parse_double(f[3]);
      const auto v = detail::parse_double(f[4]);
      if (!u || !v) throw Error(ErrorCode::value, "fruit centre is not numeric", row_no);
      rec.center = PixelCoord{*u, *v};
    }
    if (!seen.emplace(rec.image_id, rec.fruit_id).second) {
      throw Error(ErrorCode::duplicate_key, fmt::format("duplicate fruit ({}, {})", rec.image_id, rec.fruit_id),
                  row_no);
    }
    rows.push_back(std::move(rec));
  }
  return rows;
}

std::vector<GroundTruthLength> load_ground_truth(const std::filesystem::path& path) {
  return parse_ground_truth(detail::read_text_file(path));
}

std::string format_ground_truth(const std::vector<GroundTruthLength>& rows) {
  const bool any_center = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.center.has_value(); });
  std::string out = any_center ? "image_id,fruit_id,length_mm,center_u_px,center_v_px\n" : "image_id,fruit_id,length_mm\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{}", r.image_id, r.fruit_id, detail::format_shortest(r.length_mm));
    if (any_center) {
      if (r.center) {
        out += fmt::format(",{},{}", detail::format_shortest(r.center->u), detail::format_shortest(r.center->v));
      } else {
        out += ",,";
      }
    }
    out += '\n';
  }
  return out;
}

const std::vector<std::string>& SplitManifest::subset(std::string_view name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw Error(ErrorCode::invalid_argument, fmt::format("unknown split '{}'", name));
}

SplitManifest parse_split_manifest(std::string_view text) {
  SplitManifest m;
  std::set<std::string, std::less<>> seen;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto f = detail::split_whitespace(lines[i]);
    if (f.empty()) continue;
    if (f.size() != 2) throw Error(ErrorCode::parse, "expected '<image_id> <train|val|test>'", i + 1);
    std::vector<std::string>* target = nullptr;
    if (f[1] == "train") target = &m.train;
    else if (f[1] == "val") target = &m.val;
    else if (f[1] == "test") target = &m.test;
    else throw Error(ErrorCode::parse, fmt::format("unknown split '{}'", f[1]), i + 1);
    if (!seen.emplace(f[0]).second) {
      throw Error(ErrorCode::duplicate_key, fmt::format("image '{}' listed twice", f[0]), i + 1);
    }
    target->emplace_back(f[0]);
  }
  return m;
}

SplitManifest load_split_manifest(const std::filesystem::path& path) {
  return parse_split_manifest(detail::read_text_file(path));
}

std::string format_lengths_csv(const std::vector<LengthRow>& rows) {
  using detail::format_shortest;
  std::string out =
      "image_id,fruit_id,method,predicted_mm,actual_mm,residual_mm,calyx_depth_quality,peduncle_depth_quality,"
      "occluded\n";
  for (const auto& row : rows) {
    const auto& r = row.record;
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.image_id, r.fruit_id, to_string(r.method),
                       format_shortest(r.predicted_mm), format_shortest(r.actual_mm),
                       format_shortest(r.residual_mm()), format_shortest(row.calyx_depth_quality),
                       format_shortest(row.peduncle_depth_quality), row.occluded ? 1 : 0);
  }
  return out;
}

std::vector<LengthRecord> parse_lengths_csv(std::string_view csv) {
  const auto lines = detail::split_lines(strip_bom(csv));
  if (lines.empty()) throw Error(ErrorCode::schema, "lengths CSV has no header");
  const auto header = csv_fields(lines.front());
  std::map<std::string_view, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column.emplace(header[i], i);
  for (std::string_view required : {"image_id", "fruit_id", "method", "predicted_mm", "actual_mm"}) {
    if (!column.contains(required)) throw Error(ErrorCode::schema, fmt::format("missing column '{}'", required));
  }

  std::vector<LengthRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto f = csv_fields(lines[i]);
    if (f.size() != header.size()) {
      throw Error(ErrorCode::schema, fmt::format("expected {} columns, found {}", header.size(), f.size()), i);
    }
    LengthRecord r;
    r.image_id = std::string(f[column["image_id"]]);
    r.fruit_id = std::string(f[column["fruit_id"]]);
    try {
      r.method = parse_depth_source(f[column["method"]]);
    } catch (const Error& e) {
      throw Error(ErrorCode::value, e.what(), i);
    }
    const auto pred = detail::parse_double(f[column["predicted_mm"]]);
    const auto actual = detail::parse_double(f[column["actual_mm"]]);
    if (!pred || !actual) throw Error(ErrorCode::value, "lengths must be numeric", i);
    if (!(*pred > 0.0) || !(*actual > 0.0)) throw Error(ErrorCode::value, "lengths must be positive", i);
    r.predicted_mm = *pred;
    r.actual_mm = *actual;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<LengthRecord> load_lengths_csv(const std::filesystem::path& path) {
  return parse_lengths_csv(detail::read_text_file(path));
}

}  // namespace fruitlet
