#include <cstdlib>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "app/worker_pool.hpp"
#include "fruitlet/app.hpp"
#include "fruitlet/error.hpp"

namespace fruitlet::app {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

AlignmentMode parse_alignment_mode(std::string_view text) {
  if (text == "reference") return {AlignmentMode::Kind::reference_fit, kCaptureDistanceM};
  if (text == "fixed") return {AlignmentMode::Kind::fixed_distance, kCaptureDistanceM};
  if (text.starts_with("fixed:")) {
    const std::string value(text.substr(6));
    char* end = nullptr;
    const double d = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || !(d > 0.0 && d <= kMaxDepthM)) {
      throw Error(ErrorCode::config, fmt::format("bad fixed alignment distance '{}'", value));
    }
    return {AlignmentMode::Kind::fixed_distance, d};
  }
  throw Error(ErrorCode::config, fmt::format("alignment must be 'reference' or 'fixed:<meters>', got '{}'", text));
}

const DepthSourceConfig* PipelineConfig::depth_source(DepthSource s) const {
  for (const auto& d : depth_sources) {
    if (d.source == s) return &d;
  }
  return nullptr;
}

const NamedPoseBackend* PipelineConfig::pose_backend(std::string_view name) const {
  for (const auto& p : pose_backends) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

namespace {

template <typename T>
T get_or(const pt::ptree& section, const std::string& key, T fallback, std::string_view where) {
  const auto child = section.get_child_optional(pt::ptree::path_type(key, '\0'));
  if (!child) return fallback;
  try {
    return child->get_value<T>();
  } catch (const pt::ptree_error&) {
    throw Error(ErrorCode::config, fmt::format("[{}] {} = '{}' has the wrong type", where, key, child->data()));
  }
}

std::optional<std::string> get_string(const pt::ptree& section, const std::string& key) {
  const auto child = section.get_child_optional(pt::ptree::path_type(key, '\0'));
  if (!child) return std::nullopt;
  return child->data();
}

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

BackendConfig read_backend(const pt::ptree& section, const fs::path& root, std::string_view where,
                           DepthConvention default_convention) {
  BackendConfig b;
  b.kind = parse_backend_kind(get_or<std::string>(section, "backend", "file", where));
  const auto path = get_string(section, "path");
  if (!path) throw Error(ErrorCode::config, fmt::format("[{}] needs a 'path'", where));
  b.path = resolve(root, *path);
  b.input_size = get_or<int>(section, "input_size", b.input_size, where);
  b.confidence_threshold = get_or<double>(section, "confidence", b.confidence_threshold, where);
  b.iou_nms_threshold = get_or<double>(section, "iou_nms", b.iou_nms_threshold, where);
  b.depth_convention = default_convention;
  if (const auto c = get_string(section, "convention")) {
    try {
      b.depth_convention = parse_depth_convention(*c);
    } catch (const Error& e) {
      throw Error(ErrorCode::config, fmt::format("[{}] {}", where, e.what()));
    }
  }
  return b;
}

unsigned thread_count(const pt::ptree* run, const CliOverrides& overrides) {
  if (overrides.threads && *overrides.threads > 0) return *overrides.threads;
  if (const char* env = std::getenv(kThreadsEnv); env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) throw Error(ErrorCode::config, fmt::format("{}='{}' is not a positive integer", kThreadsEnv, env));
    return static_cast<unsigned>(n);
  }
  if (run) {
    const int n = get_or<int>(*run, "threads", 0, "run");
    if (n < 0) throw Error(ErrorCode::config, "[run] threads must be non-negative");
    if (n > 0) return static_cast<unsigned>(n);
  }
  return default_worker_count();
}

void apply_common_overrides(PipelineConfig& cfg, const CliOverrides& overrides) {
  if (overrides.out) cfg.output_dir = *overrides.out;
  if (overrides.lengths) cfg.lengths_input = *overrides.lengths;
  if (overrides.align) cfg.alignment = parse_alignment_mode(*overrides.align);
  if (overrides.backend) {
    const auto kind = parse_backend_kind(*overrides.backend);
    for (auto& p : cfg.pose_backends) p.backend.kind = kind;
    for (auto& d : cfg.depth_sources) d.backend.kind = kind;
  }
  if (cfg.lengths_input.empty()) cfg.lengths_input = cfg.output_dir / "lengths.csv";
}

}  // namespace

PipelineConfig load_config(const fs::path& path, const CliOverrides& overrides) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorCode::config, fmt::format("cannot read config '{}': {}", path.string(), e.what()));
  }
  const auto section = [&](const std::string& name) -> const pt::ptree* {
    const auto child = tree.get_child_optional(pt::ptree::path_type(name, '\0'));
    return child ? &child.get() : nullptr;
  };
  static const pt::ptree empty;
  const auto& dataset = section("dataset") ? *section("dataset") : empty;
  const auto& camera = section("camera") ? *section("camera") : empty;

  PipelineConfig cfg;
  const fs::path config_dir = fs::absolute(path).parent_path();
  const fs::path root = resolve(config_dir, get_or<std::string>(dataset, "root", ".", "dataset"));
  cfg.labels_dir = resolve(root, get_or<std::string>(dataset, "labels", "labels", "dataset"));
  cfg.images_dir = resolve(root, get_or<std::string>(dataset, "images", "images", "dataset"));
  cfg.ground_truth = resolve(root, get_or<std::string>(dataset, "ground_truth", "ground_truth.csv", "dataset"));
  if (const auto split = get_string(dataset, "split")) cfg.split_manifest = resolve(root, *split);
  cfg.subset = get_or<std::string>(dataset, "subset", cfg.subset, "dataset");

  try {
    cfg.intrinsics = intrinsics_from_fov(get_or<int>(camera, "width", 1280, "camera"),
                                         get_or<int>(camera, "height", 720, "camera"),
                                         get_or<double>(camera, "hfov", 69.4, "camera"),
                                         get_or<double>(camera, "vfov", 42.5, "camera"));
    cfg.intrinsics.fx = get_or<double>(camera, "fx", cfg.intrinsics.fx, "camera");
    cfg.intrinsics.fy = get_or<double>(camera, "fy", cfg.intrinsics.fy, "camera");
    cfg.intrinsics.cx = get_or<double>(camera, "cx", cfg.intrinsics.cx, "camera");
    cfg.intrinsics.cy = get_or<double>(camera, "cy", cfg.intrinsics.cy, "camera");
    cfg.intrinsics.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config) throw;
    throw Error(ErrorCode::config, fmt::format("[camera] {}", e.what()));
  }

  if (const auto* filter = section("filter")) {
    cfg.filter.min_m = get_or<double>(*filter, "min_m", cfg.filter.min_m, "filter");
    cfg.filter.max_m = get_or<double>(*filter, "max_m", cfg.filter.max_m, "filter");
  }
  try {
    cfg.filter.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::config, fmt::format("[filter] {}", e.what()));
  }

  if (const auto* align = section("align")) {
    cfg.alignment = parse_alignment_mode(get_or<std::string>(*align, "mode", "reference", "align"));
    cfg.sample_stride = get_or<int>(*align, "stride", cfg.sample_stride, "align");
    if (const auto ref = get_string(*align, "reference")) {
      try {
        cfg.reference_source = parse_depth_source(*ref);
      } catch (const Error& e) {
        throw Error(ErrorCode::config, fmt::format("[align] {}", e.what()));
      }
    }
  }
  if (cfg.sample_stride < 1) throw Error(ErrorCode::config, "[align] stride must be at least 1");

  for (const auto& [name, body] : tree) {
    if (name.starts_with("pose.")) {
      cfg.pose_backends.push_back(
          {name.substr(5), read_backend(body, root, name, DepthConvention::relative_inverse_depth)});
    } else if (name.starts_with("depth.")) {
      DepthSource source;
      try {
        source = parse_depth_source(name.substr(6));
      } catch (const Error& e) {
        throw Error(ErrorCode::config, fmt::format("[{}] {}", name, e.what()));
      }
      const auto default_convention =
          source == DepthSource::realsense ? DepthConvention::metric_meters : DepthConvention::relative_inverse_depth;
      cfg.depth_sources.push_back({source, read_backend(body, root, name, default_convention)});
    }
  }

  if (const auto* measure = section("measure")) cfg.measure_pose = get_or<std::string>(*measure, "pose", "", "measure");
  if (cfg.measure_pose.empty() && !cfg.pose_backends.empty()) cfg.measure_pose = cfg.pose_backends.front().name;
  if (!cfg.measure_pose.empty() && !cfg.pose_backend(cfg.measure_pose)) {
    throw Error(ErrorCode::config, fmt::format("[measure] pose '{}' has no [pose.{}] section", cfg.measure_pose,
                                               cfg.measure_pose));
  }
  if (const auto* rec = section("reconstruct")) {
    if (const auto d = get_string(*rec, "depth")) {
      try {
        cfg.reconstruct_depth = parse_depth_source(*d);
      } catch (const Error& e) {
        throw Error(ErrorCode::config, fmt::format("[reconstruct] {}", e.what()));
      }
    }
  }

  if (const auto* output = section("output")) {
    cfg.output_dir = resolve(config_dir, get_or<std::string>(*output, "dir", "out", "output"));
  } else {
    cfg.output_dir = config_dir / "out";
  }
  cfg.threads = thread_count(section("run"), overrides);
  apply_common_overrides(cfg, overrides);
  return cfg;
}

PipelineConfig report_only_config(const CliOverrides& overrides) {
  PipelineConfig cfg;
  cfg.threads = thread_count(nullptr, overrides);
  apply_common_overrides(cfg, overrides);
  return cfg;
}

}  // namespace fruitlet::app
