#include <algorithm>
#include <map>
#include <mutex>
#include <optional>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "app/worker_pool.hpp"
#include "fruitlet/app.hpp"
#include "fruitlet/depth_io.hpp"
#include "fruitlet/error.hpp"
#include "fruitlet/evaluation.hpp"
#include "fruitlet/image_io.hpp"
#include "fruitlet/measurement.hpp"
#include "fruitlet/ply.hpp"
#include "fruitlet/pose_io.hpp"
#include "fruitlet/report.hpp"
#include "fruitlet/tables.hpp"
#include "text_util.hpp"

namespace fruitlet::app {

namespace fs = std::filesystem;

std::vector<std::string> dataset_image_ids(const PipelineConfig& cfg) {
  std::vector<std::string> ids;
  if (!cfg.split_manifest.empty()) {
    const auto manifest = load_split_manifest(cfg.split_manifest);
    if (cfg.subset == "all") {
      for (const auto* part : {&manifest.train, &manifest.val, &manifest.test}) {
        ids.insert(ids.end(), part->begin(), part->end());
      }
    } else {
      ids = manifest.subset(cfg.subset);
    }
  } else if (fs::is_directory(cfg.labels_dir)) {
    for (const auto& entry : fs::directory_iterator(cfg.labels_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") ids.push_back(entry.path().stem().string());
    }
  } else {
    throw Error(ErrorCode::config, fmt::format("no split manifest and no annotation directory '{}'",
                                               cfg.labels_dir.string()));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

namespace {

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
}

std::optional<fs::path> find_image(const fs::path& dir, const std::string& id) {
  for (const char* ext : {".png", ".jpg", ".jpeg", ".bmp"}) {
    auto p = dir / (id + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

/// Pixels for `id`; empty when no image exists and nothing needs them.
RgbImage load_frame(const PipelineConfig& cfg, const std::string& id, bool required) {
  const auto path = find_image(cfg.images_dir, id);
  if (!path) {
    if (required) {
      throw Error(ErrorCode::backend, fmt::format("image '{}' not found under '{}'", id, cfg.images_dir.string()));
    }
    return {};
  }
  return load_rgb(*path);
}

std::size_t count_valid(const DepthMap& d) {
  return static_cast<std::size_t>(std::count_if(d.values.begin(), d.values.end(), DepthMap::valid));
}

struct AlignedDepth {
  DepthMap metric;
  ScaleAlignment alignment;
};

/// Depth backends of one worker plus a per-image memo of raw rasters.
class DepthSources {
 public:
  DepthSources(const PipelineConfig& cfg, const std::vector<DepthSource>& wanted) : cfg_(cfg) {
    for (auto s : wanted) {
      const auto* source = cfg.depth_source(s);
      if (!source) throw Error(ErrorCode::config, fmt::format("no [depth.{}] section", to_string(s)));
      backends_.emplace(s, make_depth_backend(source->backend));
    }
  }

  void begin_image(const std::string& id, const RgbImage* image) {
    id_ = id;
    image_ = image;
    raw_.clear();
  }

  const DepthMap& raw(DepthSource s) {
    if (auto it = raw_.find(s); it != raw_.end()) return it->second;
    auto backend = backends_.find(s);
    if (backend == backends_.end()) throw Error(ErrorCode::config, fmt::format("no [depth.{}] section", to_string(s)));
    static const RgbImage none;
    auto depth = backend->second->estimate_depth(id_, image_ ? *image_ : none);
    if (depth.width != cfg_.intrinsics.width || depth.height != cfg_.intrinsics.height) {
      throw Error(ErrorCode::dimension,
                  fmt::format("image '{}': {} depth is {}x{}, camera is {}x{}", id_, to_string(s), depth.width,
                              depth.height, cfg_.intrinsics.width, cfg_.intrinsics.height));
    }
    return raw_.emplace(s, std::move(depth)).first->second;
  }

  AlignedDepth metric(DepthSource s) {
    const DepthMap& relative = raw(s);
    ScaleAlignment alignment;
    if (relative.convention == DepthConvention::metric_meters) {
      alignment = ScaleAlignment::identity(count_valid(relative));
    } else if (cfg_.alignment.kind == AlignmentMode::Kind::fixed_distance) {
      alignment = fit_fixed_distance(relative, cfg_.alignment.distance_m);
    } else {
      const DepthMap& reference = raw(cfg_.reference_source);
      if (reference.convention != DepthConvention::metric_meters) {
        throw Error(ErrorCode::convention,
                    fmt::format("reference source {} is not metric", to_string(cfg_.reference_source)));
      }
      alignment = fit_scale(relative, reference, cfg_.sample_stride);
    }
    return {to_metric(relative, alignment), alignment};
  }

 private:
  const PipelineConfig& cfg_;
  std::map<DepthSource, std::unique_ptr<DepthBackend>> backends_;
  std::map<DepthSource, DepthMap> raw_;
  std::string id_;
  const RgbImage* image_ = nullptr;
};

std::vector<DepthSource> with_reference(const PipelineConfig& cfg, std::vector<DepthSource> sources) {
  if (cfg.alignment.kind == AlignmentMode::Kind::reference_fit && cfg.depth_source(cfg.reference_source) &&
      std::find(sources.begin(), sources.end(), cfg.reference_source) == sources.end()) {
    sources.push_back(cfg.reference_source);
  }
  return sources;
}

bool any_onnx(const std::vector<const BackendConfig*>& backends) {
  return std::any_of(backends.begin(), backends.end(),
                     [](const BackendConfig* b) { return b->kind == BackendKind::onnx; });
}

/// Runs `fn` per image on the pool; returns how many images failed.
template <typename Fn>
std::size_t for_each_image(const PipelineConfig& cfg, const std::vector<std::string>& ids, std::string_view command,
                           Fn&& fn) {
  std::vector<std::optional<std::string>> failures(ids.size());
  parallel_for(ids.size(), cfg.threads, [&](std::size_t i, unsigned worker) {
    try {
      fn(i, worker);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::config) throw;
      failures[i] = e.what();
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  std::size_t failed = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (failures[i]) {
      ++failed;
      spdlog::warn("{}: skipped '{}': {}", command, ids[i], *failures[i]);
    }
  }
  return failed;
}

ExitCode finish(std::string_view command, std::size_t total, std::size_t failed) {
  if (total > 0 && failed == total) {
    spdlog::error("{}: all {} images failed", command, total);
    return ExitCode::total_failure;
  }
  spdlog::info("{}: {} images processed, {} skipped", command, total - failed, failed);
  return ExitCode::ok;
}

template <typename Fn>
ExitCode guarded(std::string_view command, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    spdlog::error("{}: {}", command, e.what());
    if (e.code() == ErrorCode::empty_input) return ExitCode::empty_input;
    if (e.code() == ErrorCode::config || e.code() == ErrorCode::invalid_argument) return ExitCode::config_error;
    return ExitCode::total_failure;
  }
}

/// Caliper rows of one image, with centres taken from the annotation file in
/// row order where the CSV gives none.
std::vector<GroundTruthLength> truth_for_image(const PipelineConfig& cfg,
                                               const std::vector<GroundTruthLength>& all_truth, const std::string& id) {
  std::vector<GroundTruthLength> rows;
  std::copy_if(all_truth.begin(), all_truth.end(), std::back_inserter(rows),
               [&](const GroundTruthLength& t) { return t.image_id == id; });
  const bool need_centres =
      std::any_of(rows.begin(), rows.end(), [](const GroundTruthLength& t) { return !t.center; });
  if (!need_centres) return rows;
  const auto label_path = cfg.labels_dir / (id + ".txt");
  if (!fs::exists(label_path)) return rows;
  const auto annotations = load_pose_file(label_path);
  if (annotations.size() != rows.size()) {
    spdlog::warn("measure: '{}' has {} caliper rows but {} annotations; pairing by row order where possible", id,
                 rows.size(), annotations.size());
  }
  for (std::size_t j = 0; j < rows.size() && j < annotations.size(); ++j) {
    if (!rows[j].center) {
      rows[j].center = PixelCoord{annotations[j].bbox.cx * cfg.intrinsics.width,
                                  annotations[j].bbox.cy * cfg.intrinsics.height};
    }
  }
  return rows;
}

}  // namespace

ExitCode run_reconstruct(const PipelineConfig& cfg) {
  return guarded("reconstruct", [&] {
    if (cfg.depth_sources.empty()) throw Error(ErrorCode::config, "no [depth.*] sections configured");
    DepthSource source = cfg.depth_sources.front().source;
    if (cfg.reconstruct_depth) {
      source = *cfg.reconstruct_depth;
    } else {
      for (const auto& d : cfg.depth_sources) {
        if (d.source != cfg.reference_source) {
          source = d.source;
          break;
        }
      }
    }
    if (!cfg.depth_source(source)) throw Error(ErrorCode::config, fmt::format("no [depth.{}] section", to_string(source)));
    const auto wanted = with_reference(cfg, {source});

    const auto ids = dataset_image_ids(cfg);
    if (ids.empty()) throw Error(ErrorCode::empty_input, "dataset lists no images");
    const auto clouds_dir = cfg.output_dir / "clouds";
    ensure_output_dir(clouds_dir);

    std::vector<const BackendConfig*> configs;
    for (auto s : wanted) configs.push_back(&cfg.depth_source(s)->backend);
    const bool need_pixels = any_onnx(configs);

    std::vector<std::unique_ptr<DepthSources>> workers;
    for (unsigned w = 0; w < std::max(1U, cfg.threads); ++w) workers.push_back(std::make_unique<DepthSources>(cfg, wanted));

    std::vector<std::optional<ScaleAlignment>> alignments(ids.size());
    const auto failed = for_each_image(cfg, ids, "reconstruct", [&](std::size_t i, unsigned worker) {
      const auto& id = ids[i];
      const RgbImage image = load_frame(cfg, id, need_pixels);
      auto& depth = *workers[worker];
      depth.begin_image(id, image.empty() ? nullptr : &image);
      const auto aligned = depth.metric(source);
      const RgbImage* colors = (!image.empty() && image.width == cfg.intrinsics.width &&
                                image.height == cfg.intrinsics.height)
                                   ? &image
                                   : nullptr;
      const auto cloud = depth_to_cloud(aligned.metric, cfg.intrinsics, cfg.filter, colors);
      write_ply(cloud, clouds_dir / (id + ".ply"), PlyFormat::binary_little_endian);
      alignments[i] = aligned.alignment;
    });

    std::string log = "image_id,method,scale,shift,space,residual_rmse_m,inlier_count\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!alignments[i]) continue;
      const auto& a = *alignments[i];
      const auto line = fmt::format("{},{},{},{},{},{},{}", ids[i], to_string(source),
                                    detail::format_shortest(a.scale), detail::format_shortest(a.shift),
                                    to_string(a.space), detail::format_shortest(a.residual_rmse), a.inlier_count);
      spdlog::info("reconstruct: {}", line);
      log += line + '\n';
    }
    detail::write_text_file(cfg.output_dir / "alignment.csv", log);
    return finish("reconstruct", ids.size(), failed);
  });
}

ExitCode run_measure(const PipelineConfig& cfg) {
  return guarded("measure", [&] {
    const auto* pose = cfg.pose_backend(cfg.measure_pose);
    if (!pose) throw Error(ErrorCode::config, "no pose backend configured for measurement");
    if (cfg.depth_sources.empty()) throw Error(ErrorCode::config, "no [depth.*] sections configured");
    std::vector<DepthSource> measured_sources;
    for (auto s : all_depth_sources) {
      if (cfg.depth_source(s)) measured_sources.push_back(s);
    }
    const auto wanted = with_reference(cfg, measured_sources);
    const auto truth = load_ground_truth(cfg.ground_truth);

    const auto ids = dataset_image_ids(cfg);
    if (ids.empty()) throw Error(ErrorCode::empty_input, "dataset lists no images");
    ensure_output_dir(cfg.output_dir);

    std::vector<const BackendConfig*> configs{&pose->backend};
    for (auto s : wanted) configs.push_back(&cfg.depth_source(s)->backend);
    const bool need_pixels = any_onnx(configs);

    struct Worker {
      std::unique_ptr<PoseBackend> pose;
      std::unique_ptr<DepthSources> depth;
    };
    std::vector<Worker> workers;
    for (unsigned w = 0; w < std::max(1U, cfg.threads); ++w) {
      workers.push_back({make_pose_backend(pose->backend), std::make_unique<DepthSources>(cfg, wanted)});
    }

    std::vector<std::vector<LengthRow>> per_image(ids.size());
    const auto failed = for_each_image(cfg, ids, "measure", [&](std::size_t i, unsigned worker) {
      const auto& id = ids[i];
      const RgbImage image = load_frame(cfg, id, need_pixels);
      auto& w = workers[worker];
      const auto detections = w.pose->detect_pose(id, image).detections;
      const auto image_truth = truth_for_image(cfg, truth, id);
      w.depth->begin_image(id, image.empty() ? nullptr : &image);

      for (auto source : measured_sources) {
        AlignedDepth aligned;
        try {
          aligned = w.depth->metric(source);
        } catch (const Error& e) {
          spdlog::warn("measure: '{}' {}: {}", id, to_string(source), e.what());
          continue;
        }
        std::vector<MeasuredPose> measured;
        for (const auto& det : detections) {
          try {
            measured.push_back(measure_length(det, aligned.metric, cfg.intrinsics));
          } catch (const Error& e) {
            spdlog::debug("measure: '{}' {}: detection skipped: {}", id, to_string(source), e.what());
          }
        }
        const auto match = match_to_ground_truth(measured, image_truth, id, cfg.intrinsics.width,
                                                 cfg.intrinsics.height, source);
        for (std::size_t k = 0; k < match.pairs.size(); ++k) {
          const auto& m = measured[match.pair_measured[k]];
          per_image[i].push_back({match.pairs[k], m.calyx_depth_quality, m.peduncle_depth_quality, m.occluded()});
        }
      }
    });

    std::vector<LengthRow> rows;
    for (auto& r : per_image) rows.insert(rows.end(), r.begin(), r.end());
    std::sort(rows.begin(), rows.end(), [](const LengthRow& a, const LengthRow& b) {
      return std::tie(a.record.image_id, a.record.fruit_id, a.record.method) <
             std::tie(b.record.image_id, b.record.fruit_id, b.record.method);
    });
    detail::write_text_file(cfg.output_dir / "lengths.csv", format_lengths_csv(rows));

    std::vector<LengthRecord> records;
    for (const auto& r : rows) records.push_back(r.record);
    for (const auto& s : length_stats_by_method(records)) {
      spdlog::info("measure: {:<18} n={:<4} RMSE={} mm MAE={} mm", to_string(s.method), s.stats.n,
                   format_metric(s.stats.rmse_mm), format_metric(s.stats.mae_mm));
    }
    return finish("measure", ids.size(), failed);
  });
}

ExitCode run_eval(const PipelineConfig& cfg) {
  return guarded("eval", [&] {
    if (cfg.pose_backends.empty()) throw Error(ErrorCode::config, "no [pose.*] sections configured");
    const auto ids = dataset_image_ids(cfg);
    if (ids.empty()) throw Error(ErrorCode::empty_input, "dataset lists no images");
    ensure_output_dir(cfg.output_dir);

    std::vector<MethodMetrics> rows;
    std::size_t worst_failed = 0;
    for (const auto& method : cfg.pose_backends) {
      std::vector<std::unique_ptr<PoseBackend>> workers;
      for (unsigned w = 0; w < std::max(1U, cfg.threads); ++w) workers.push_back(make_pose_backend(method.backend));
      const bool need_pixels = method.backend.kind == BackendKind::onnx;

      std::vector<std::optional<ImageDetections>> images(ids.size());
      std::vector<std::optional<PhaseTiming>> timings(ids.size());
      const auto failed = for_each_image(cfg, ids, "eval", [&](std::size_t i, unsigned worker) {
        const auto& id = ids[i];
        const RgbImage image = load_frame(cfg, id, need_pixels);
        ImageDetections entry;
        entry.truths = load_pose_file(cfg.labels_dir / (id + ".txt"));
        auto result = workers[worker]->detect_pose(id, image);
        entry.predictions = std::move(result.detections);
        images[i] = std::move(entry);
        timings[i] = result.timing;
      });
      worst_failed = std::max(worst_failed, failed);

      std::vector<ImageDetections> ok_images;
      std::vector<PhaseTiming> ok_timings;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!images[i]) continue;
        ok_images.push_back(std::move(*images[i]));
        ok_timings.push_back(*timings[i]);
      }
      if (ok_images.empty()) {
        spdlog::error("eval: {}: no image could be evaluated", method.name);
        continue;
      }
      rows.push_back({method.name, evaluate_detections(ok_images), mean_phase_timing(ok_timings)});
    }
    if (rows.empty()) return ExitCode::total_failure;

    detail::write_text_file(cfg.output_dir / "metrics.csv", format_metrics_csv(rows));
    const auto summary = metrics_summary(rows);
    detail::write_text_file(cfg.output_dir / "summary.txt", summary);
    fmt::print("{}", summary);
    return finish("eval", ids.size(), worst_failed);
  });
}

ExitCode run_report(const PipelineConfig& cfg) {
  return guarded("report", [&] {
    if (!fs::exists(cfg.lengths_input)) {
      throw Error(ErrorCode::empty_input, fmt::format("no lengths table at '{}'", cfg.lengths_input.string()));
    }
    const auto records = load_lengths_csv(cfg.lengths_input);
    if (records.empty()) throw Error(ErrorCode::empty_input, "lengths table has no rows");
    ensure_output_dir(cfg.output_dir);

    std::vector<std::string> notes;
    const auto series = length_box_series(records, &notes);
    detail::write_text_file(cfg.output_dir / "boxplot.svg", render_boxplot_svg(series, notes));

    const auto stats = length_stats_by_method(records);
    std::string metrics_csv;
    if (const auto p = cfg.output_dir / "metrics.csv"; fs::exists(p)) metrics_csv = detail::read_text_file(p);
    detail::write_text_file(cfg.output_dir / "report.md", render_report_markdown(stats, metrics_csv, notes));
    for (const auto& s : stats) {
      fmt::print("{:<18} n={:<4} RMSE={} mm MAE={} mm\n", to_string(s.method), s.stats.n,
                 format_metric(s.stats.rmse_mm), format_metric(s.stats.mae_mm));
    }
    return ExitCode::ok;
  });
}

}  // namespace fruitlet::app
