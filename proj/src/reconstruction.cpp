#include "fruitlet/reconstruction.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fruitlet/error.hpp"

namespace fruitlet {

std::string_view to_string(FitSpace s) noexcept { return s == FitSpace::depth ? "depth" : "inverse-depth"; }

FitSpace fit_space_for(DepthConvention c) noexcept {
  return c == DepthConvention::relative_inverse_depth ? FitSpace::inverse_depth : FitSpace::depth;
}

void RangeFilter::validate() const {
  if (!(min_m > 0.0 && min_m < max_m && max_m <= kMaxDepthM)) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("range filter [{}, {}] m must satisfy 0 < min < max <= {}", min_m, max_m, kMaxDepthM));
  }
}

namespace {

double map_value(double r, double scale, double shift, FitSpace space) {
  const double a = scale * r + shift;
  if (space == FitSpace::depth) return a;
  return a > 0.0 ? 1.0 / a : 0.0;
}

bool in_metric_range(double d) { return d > 0.0 && d <= kMaxDepthM; }

}  // namespace

ScaleAlignment fit_scale(const DepthMap& relative, const DepthMap& metric_reference, int sample_stride) {
  if (relative.width != metric_reference.width || relative.height != metric_reference.height) {
    throw Error(ErrorCode::dimension, fmt::format("relative map is {}x{} but reference is {}x{}", relative.width,
                                                  relative.height, metric_reference.width, metric_reference.height));
  }
  if (metric_reference.convention != DepthConvention::metric_meters) {
    throw Error(ErrorCode::convention, "scale reference must be metric");
  }
  if (sample_stride < 1) throw Error(ErrorCode::invalid_argument, "sample stride must be at least 1");

  const FitSpace space = fit_space_for(relative.convention);
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> metric;
  for (int y = 0; y < relative.height; y += sample_stride) {
    for (int x = 0; x < relative.width; x += sample_stride) {
      const float r = relative.at(x, y);
      const float m = metric_reference.at(x, y);
      if (!DepthMap::valid(r) || !DepthMap::valid(m)) continue;
      xs.push_back(r);
      ys.push_back(space == FitSpace::depth ? m : 1.0 / m);
      metric.push_back(m);
    }
  }
  const std::size_t n = xs.size();
  if (n < 2) throw Error(ErrorCode::insufficient_data, fmt::format("only {} valid sample pairs", n));

  // Centred normal equations.
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mean_x;
    sxx += dx * dx;
    sxy += dx * (ys[i] - mean_y);
  }
  if (!(sxx > 0.0) || sxx <= 1e-24 * std::max(1.0, mean_x * mean_x) * static_cast<double>(n)) {
    throw Error(ErrorCode::rank_deficient, "relative samples are constant; scale and shift are not identifiable");
  }

  ScaleAlignment a;
  a.space = space;
  a.scale = sxy / sxx;
  a.shift = mean_y - a.scale * mean_x;
  if (!(a.scale > 0.0)) {
    throw Error(ErrorCode::rank_deficient, fmt::format("fitted scale {} is not positive", a.scale));
  }
  a.inlier_count = n;

  double fit_sq = 0.0;
  double metric_sq = 0.0;
  std::size_t metric_n = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = a.scale * xs[i] + a.shift - ys[i];
    fit_sq += e * e;
    const double d = map_value(xs[i], a.scale, a.shift, space);
    if (d > 0.0) {
      metric_sq += (d - metric[i]) * (d - metric[i]);
      ++metric_n;
    }
  }
  a.residual_rmse = metric_n > 0 ? std::sqrt(metric_sq / static_cast<double>(metric_n)) : 0.0;
  if (n > 2) {
    const double sigma2 = fit_sq / static_cast<double>(n - 2);
    a.scale_stderr = std::sqrt(sigma2 / sxx);
    a.shift_stderr = std::sqrt(sigma2 * (1.0 / static_cast<double>(n) + mean_x * mean_x / sxx));
  }
  return a;
}

ScaleAlignment fit_fixed_distance(const DepthMap& relative, double distance_m) {
  if (!(distance_m > 0.0 && distance_m <= kMaxDepthM)) {
    throw Error(ErrorCode::invalid_argument, fmt::format("fixed distance {} m out of range", distance_m));
  }
  std::vector<float> valid;
  for (float r : relative.values) {
    if (DepthMap::valid(r)) valid.push_back(r);
  }
  if (valid.empty()) throw Error(ErrorCode::insufficient_data, "relative map holds no data");
  const auto mid = valid.begin() + static_cast<std::ptrdiff_t>(valid.size() / 2);
  std::nth_element(valid.begin(), mid, valid.end());
  double median = *mid;
  if (valid.size() % 2 == 0) median = (median + *std::max_element(valid.begin(), mid)) / 2.0;

  ScaleAlignment a;
  a.space = fit_space_for(relative.convention);
  a.scale = a.space == FitSpace::depth ? distance_m / median : (1.0 / distance_m) / median;
  a.shift = 0.0;
  a.inlier_count = valid.size();
  double sq = 0.0;
  for (float r : valid) {
    const double d = map_value(r, a.scale, a.shift, a.space);
    sq += (d - distance_m) * (d - distance_m);
  }
  a.residual_rmse = std::sqrt(sq / static_cast<double>(valid.size()));
  return a;
}

DepthMap to_metric(const DepthMap& relative, const ScaleAlignment& alignment) {
  if (fit_space_for(relative.convention) != alignment.space) {
    throw Error(ErrorCode::convention, fmt::format("{} raster cannot take a {}-space alignment",
                                                   to_string(relative.convention), to_string(alignment.space)));
  }
  DepthMap out(relative.width, relative.height, DepthConvention::metric_meters);
  for (std::size_t i = 0; i < relative.values.size(); ++i) {
    const float r = relative.values[i];
    if (!DepthMap::valid(r)) continue;
    const double d = map_value(r, alignment.scale, alignment.shift, alignment.space);
    if (in_metric_range(d)) out.values[i] = static_cast<float>(d);
  }
  return out;
}

PointCloud depth_to_cloud(const DepthMap& depth, const CameraIntrinsics& k, const RangeFilter& filter,
                          const RgbImage* rgb) {
  if (depth.convention != DepthConvention::metric_meters) {
    throw Error(ErrorCode::convention,
                fmt::format("point clouds need metric depth, got {}", to_string(depth.convention)));
  }
  if (depth.width != k.width || depth.height != k.height) {
    throw Error(ErrorCode::dimension, fmt::format("depth is {}x{} but intrinsics are {}x{}", depth.width,
                                                  depth.height, k.width, k.height));
  }
  if (rgb && !rgb->empty() && (rgb->width != depth.width || rgb->height != depth.height)) {
    throw Error(ErrorCode::dimension, fmt::format("colour image is {}x{} but depth is {}x{}", rgb->width,
                                                  rgb->height, depth.width, depth.height));
  }
  filter.validate();
  const bool colored = rgb && !rgb->empty();

  PointCloud cloud;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const float d = depth.at(x, y);
      if (!DepthMap::valid(d) || !filter.contains(d)) continue;
      cloud.points.push_back(backproject(x, y, d, k));
      if (colored) cloud.colors.push_back(rgb->at(x, y));
    }
  }
  return cloud;
}

}  // namespace fruitlet
