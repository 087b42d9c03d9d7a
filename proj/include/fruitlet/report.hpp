#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fruitlet/evaluation.hpp"
#include "fruitlet/inference.hpp"
#include "fruitlet/types.hpp"

namespace fruitlet {

/// Linear-interpolation quantile (Hyndman-Fan type 7) of ascending `sorted`.
double quantile_type7(std::span<const double> sorted, double p);

/// Tukey box: quartiles by type-7, whiskers at the most extreme points within
/// 1.5 IQR of the box, everything beyond reported as an outlier.
struct BoxStats {
  std::size_t n = 0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;  // ascending
};

BoxStats box_stats(std::span<const double> values);

struct BoxSeries {
  std::string label;
  std::vector<double> values;
};

/// SVG box plot, one box per series in order; `notes` are printed under the
/// legend (used for methods without data).
std::string render_boxplot_svg(std::span<const BoxSeries> series, std::span<const std::string> notes,
                               std::string_view y_label = "Length (mm)");

/// Boxes for ground truth plus each depth source present in `records`;
/// absent sources are named in `missing`.
std::vector<BoxSeries> length_box_series(std::span<const LengthRecord> records,
                                         std::vector<std::string>* missing = nullptr);

/// Metric value rounded to four decimals, trailing zeros dropped ("0.91").
std::string format_metric(double value);

struct MethodMetrics {
  std::string method;
  DetectionMetrics metrics;
  PhaseTiming timing;
};

/// Timing columns end in `_ms` and vary between runs; every other column is
/// a deterministic function of the inputs.
std::string format_metrics_csv(std::span<const MethodMetrics> rows);

/// Names the best method per metric column (highest score, lowest time).
std::string metrics_summary(std::span<const MethodMetrics> rows);

struct MethodLengthStats {
  DepthSource method = DepthSource::realsense;
  LengthErrorStats stats;
};

/// RMSE/MAE per depth source present in `records`, in canonical source order.
std::vector<MethodLengthStats> length_stats_by_method(std::span<const LengthRecord> records);

/// Markdown report: length accuracy table plus, when `metrics_csv` is not
/// empty, the detection metrics as a table.
std::string render_report_markdown(std::span<const MethodLengthStats> lengths, std::string_view metrics_csv,
                                   std::span<const std::string> notes);

}  // namespace fruitlet
