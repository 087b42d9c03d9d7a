#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fruitlet/types.hpp"

namespace fruitlet {

/// Caliper table. Header is `image_id,fruit_id,length_mm`, optionally followed
/// by `center_u_px,center_v_px` giving the annotated fruit centre in pixels.
/// Rows are unique on (image_id, fruit_id) and lengths are positive.
std::vector<GroundTruthLength> parse_ground_truth(std::string_view csv);
std::vector<GroundTruthLength> load_ground_truth(const std::filesystem::path& path);
std::string format_ground_truth(const std::vector<GroundTruthLength>& rows);

struct SplitManifest {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;

  std::size_t total() const noexcept { return train.size() + val.size() + test.size(); }
  /// "train", "val" or "test"; anything else is Error(invalid_argument).
  const std::vector<std::string>& subset(std::string_view name) const;
};

/// `<image_id> <train|val|test>` per line. An id may appear only once.
SplitManifest parse_split_manifest(std::string_view text);
SplitManifest load_split_manifest(const std::filesystem::path& path);

/// One lengths.csv row: the record plus how much valid depth backed each keypoint.
struct LengthRow {
  LengthRecord record;
  double calyx_depth_quality = 1.0;
  double peduncle_depth_quality = 1.0;
  bool occluded = false;
};

/// Writes `image_id,fruit_id,method,predicted_mm,actual_mm,residual_mm,
/// calyx_depth_quality,peduncle_depth_quality,occluded` in the given order.
std::string format_lengths_csv(const std::vector<LengthRow>& rows);

/// Reads any CSV carrying at least image_id, fruit_id, method, predicted_mm
/// and actual_mm columns (in any order); other columns are ignored. This is
/// also the entry point for externally measured per-fruit tables.
std::vector<LengthRecord> parse_lengths_csv(std::string_view csv);
std::vector<LengthRecord> load_lengths_csv(const std::filesystem::path& path);

}  // namespace fruitlet
