#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fruitlet/camera.hpp"
#include "fruitlet/inference.hpp"
#include "fruitlet/reconstruction.hpp"
#include "fruitlet/types.hpp"

namespace fruitlet::app {

enum class ExitCode : int {
  ok = 0,
  config_error = 2,
  empty_input = 3,
  total_failure = 4,
};

struct AlignmentMode {
  enum class Kind { reference_fit, fixed_distance };
  Kind kind = Kind::reference_fit;
  double distance_m = kCaptureDistanceM;
};

/// Parses "reference" or "fixed:<meters>" (plain "fixed" means 0.61 m).
AlignmentMode parse_alignment_mode(std::string_view text);

struct NamedPoseBackend {
  std::string name;
  BackendConfig backend;
};

struct DepthSourceConfig {
  DepthSource source = DepthSource::realsense;
  BackendConfig backend;
};

struct PipelineConfig {
  std::filesystem::path labels_dir;    // <image_id>.txt annotations
  std::filesystem::path images_dir;    // optional <image_id>.png|jpg
  std::filesystem::path ground_truth;  // caliper CSV
  std::filesystem::path split_manifest;
  std::string subset = "test";

  CameraIntrinsics intrinsics = default_capture_intrinsics();
  std::vector<NamedPoseBackend> pose_backends;
  std::vector<DepthSourceConfig> depth_sources;
  RangeFilter filter;
  AlignmentMode alignment;
  DepthSource reference_source = DepthSource::realsense;
  int sample_stride = kDefaultSampleStride;
  std::string measure_pose;                      // pose backend used for lengths
  std::optional<DepthSource> reconstruct_depth;  // depth source turned into clouds

  std::filesystem::path output_dir = "out";
  std::filesystem::path lengths_input;  // report input; defaults to <out>/lengths.csv
  unsigned threads = 1;

  const DepthSourceConfig* depth_source(DepthSource s) const;
  const NamedPoseBackend* pose_backend(std::string_view name) const;
};

/// Command-line values that win over the config file.
struct CliOverrides {
  std::optional<std::string> backend;  // "file" | "onnx", applied to every backend
  std::optional<std::string> align;
  std::optional<std::filesystem::path> out;
  std::optional<unsigned> threads;
  std::optional<std::filesystem::path> lengths;
};

inline constexpr const char* kThreadsEnv = "FRUITLET_METRIC_THREADS";

/// Reads an INI config. Relative paths resolve against `[dataset] root`,
/// which itself resolves against the config file's directory. Thread count
/// precedence: --threads, then FRUITLET_METRIC_THREADS, then `[run] threads`,
/// then the number of logical CPUs. Throws Error(config).
PipelineConfig load_config(const std::filesystem::path& path, const CliOverrides& overrides = {});

/// Config for `report` runs that only name a lengths table.
PipelineConfig report_only_config(const CliOverrides& overrides);

/// Image ids to process: the chosen split subset when a manifest is
/// configured, otherwise the stems of the annotation files. Sorted.
std::vector<std::string> dataset_image_ids(const PipelineConfig& cfg);

ExitCode run_reconstruct(const PipelineConfig& cfg);
ExitCode run_measure(const PipelineConfig& cfg);
ExitCode run_eval(const PipelineConfig& cfg);
ExitCode run_report(const PipelineConfig& cfg);

}  // namespace fruitlet::app
