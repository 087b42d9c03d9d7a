#include "fruitlet/report.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "fruitlet/error.hpp"
#include "text_util.hpp"

namespace fruitlet {

double quantile_type7(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::empty_input, "quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::invalid_argument, fmt::format("quantile level {}", p));
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::empty_input, "box plot of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.n = v.size();
  b.q1 = quantile_type7(v, 0.25);
  b.median = quantile_type7(v, 0.5);
  b.q3 = quantile_type7(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      b.outliers.push_back(x);
    } else {
      b.whisker_low = std::min(b.whisker_low, x);
      b.whisker_high = std::max(b.whisker_high, x);
    }
  }
  return b;
}

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 90.0;

std::string px(double v) { return fmt::format("{:.2f}", v); }

}  // namespace

std::string render_boxplot_svg(std::span<const BoxSeries> series, std::span<const std::string> notes,
                               std::string_view y_label) {
  std::vector<BoxStats> boxes;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    boxes.push_back(box_stats(s.values));
    for (double x : s.values) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (series.empty()) {
    lo = 0.0;
    hi = 1.0;
  }
  // Pad the value range; a zero-height range still gets a visible axis.
  const double pad = hi > lo ? 0.08 * (hi - lo) : 1.0;
  lo -= pad;
  hi += pad;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto y_of = [&](double value) { return kTop + (hi - value) / (hi - lo) * plot_h; };

  std::string svg;
  svg += fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">)",
                     kWidth, kHeight, kWidth, kHeight);
  svg += "\n<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", px(kLeft), px(kTop),
                     px(kLeft), px(kTop + plot_h));
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double value = lo + (hi - lo) * i / kTicks;
    const double y = y_of(value);
    svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#ccc\"/>\n", px(kLeft), px(y),
                       px(kLeft + plot_w), px(y));
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{:.1f}</text>\n",
                       px(kLeft - 6), px(y + 4), value);
  }
  svg += fmt::format(
      "<text x=\"16\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">{}</text>\n",
      px(kTop + plot_h / 2), px(kTop + plot_h / 2), y_label);

  const double slot = series.empty() ? plot_w : plot_w / static_cast<double>(series.size());
  const double box_w = std::min(60.0, slot * 0.5);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& b = boxes[i];
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double x0 = cx - box_w / 2;
    svg += fmt::format("<g class=\"box\" data-label=\"{}\">\n", series[i].label);
    svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", px(cx),
                       px(y_of(b.whisker_high)), px(cx), px(y_of(b.q3)));
    svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", px(cx),
                       px(y_of(b.q1)), px(cx), px(y_of(b.whisker_low)));
    for (double w : {b.whisker_low, b.whisker_high}) {
      svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", px(cx - box_w / 4),
                         px(y_of(w)), px(cx + box_w / 4), px(y_of(w)));
    }
    svg += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#9ecae1\" stroke=\"black\"/>\n", px(x0),
        px(y_of(b.q3)), px(box_w), px(y_of(b.q1) - y_of(b.q3)));
    svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#d62728\" stroke-width=\"2\"/>\n",
                       px(x0), px(y_of(b.median)), px(x0 + box_w), px(y_of(b.median)));
    for (double o : b.outliers) {
      svg += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"none\" stroke=\"black\"/>\n", px(cx),
                         px(y_of(o)));
    }
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{} (n={})</text>\n", px(cx),
                       px(kTop + plot_h + 18), series[i].label, b.n);
    svg += "</g>\n";
  }
  double note_y = kTop + plot_h + 42;
  for (const auto& note : notes) {
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#555\">{}</text>\n", px(kLeft), px(note_y),
                       note);
    note_y += 14;
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<BoxSeries> length_box_series(std::span<const LengthRecord> records, std::vector<std::string>* missing) {
  std::vector<BoxSeries> out;
  if (records.empty()) return out;
  // Caliper values once per fruit, whichever method row they came from.
  std::vector<std::pair<std::string, std::string>> seen;
  BoxSeries truth{"ground-truth", {}};
  for (const auto& r : records) {
    const auto key = std::make_pair(r.image_id, r.fruit_id);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    truth.values.push_back(r.actual_mm);
  }
  out.push_back(std::move(truth));
  for (auto source : all_depth_sources) {
    BoxSeries s{std::string(to_string(source)), {}};
    for (const auto& r : records) {
      if (r.method == source) s.values.push_back(r.predicted_mm);
    }
    if (s.values.empty()) {
      if (missing) missing->push_back(fmt::format("{}: no data", to_string(source)));
      continue;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_metric(double value) {
  if (!std::isfinite(value)) return "";
  auto text = fmt::format("{:.4f}", value);
  while (text.size() > 1 && text.back() == '0') text.pop_back();
  if (text.back() == '.') text.pop_back();
  if (text == "-0") text = "0";
  return text;
}

namespace {

std::string optional_metric(const std::optional<double>& v) { return v ? format_metric(*v) : std::string(); }

struct Column {
  std::string_view name;
  std::function<std::optional<double>(const MethodMetrics&)> value;
  bool lower_is_better;
};

std::vector<Column> metric_columns() {
  return {
      {"box_precision", [](const MethodMetrics& m) -> std::optional<double> { return m.metrics.box.precision; }, false},
      {"box_recall", [](const MethodMetrics& m) -> std::optional<double> { return m.metrics.box.recall; }, false},
      {"box_map50", [](const MethodMetrics& m) { return m.metrics.box_map50; }, false},
      {"pose_precision", [](const MethodMetrics& m) -> std::optional<double> { return m.metrics.pose.precision; }, false},
      {"pose_recall", [](const MethodMetrics& m) -> std::optional<double> { return m.metrics.pose.recall; }, false},
      {"pose_map50", [](const MethodMetrics& m) { return m.metrics.pose_map50; }, false},
      {"preprocess_ms", [](const MethodMetrics& m) -> std::optional<double> { return m.timing.preprocess_ms; }, true},
      {"inference_ms", [](const MethodMetrics& m) -> std::optional<double> { return m.timing.inference_ms; }, true},
      {"postprocess_ms", [](const MethodMetrics& m) -> std::optional<double> { return m.timing.postprocess_ms; }, true},
  };
}

}  // namespace

std::string format_metrics_csv(std::span<const MethodMetrics> rows) {
  std::string out = "method,images,box_tp,box_fp,box_fn";
  const auto columns = metric_columns();
  for (const auto& c : columns) {
    out += ',';
    out += c.name;
  }
  out += '\n';
  for (const auto& row : rows) {
    const auto& m = row.metrics;
    out += fmt::format("{},{},{},{},{}", row.method, m.images, m.box_counts.tp, m.box_counts.fp, m.box_counts.fn);
    for (const auto& c : columns) {
      out += ',';
      out += optional_metric(c.value(row));
    }
    out += '\n';
  }
  return out;
}

std::string metrics_summary(std::span<const MethodMetrics> rows) {
  std::string out;
  for (const auto& c : metric_columns()) {
    const MethodMetrics* best = nullptr;
    double best_value = 0.0;
    for (const auto& row : rows) {
      const auto v = c.value(row);
      if (!v) continue;
      if (!best || (c.lower_is_better ? *v < best_value : *v > best_value)) {
        best = &row;
        best_value = *v;
      }
    }
    if (best) out += fmt::format("best {:<15} {} ({})\n", c.name, best->method, format_metric(best_value));
  }
  return out;
}

std::vector<MethodLengthStats> length_stats_by_method(std::span<const LengthRecord> records) {
  std::vector<MethodLengthStats> out;
  for (auto source : all_depth_sources) {
    std::vector<LengthRecord> subset;
    std::copy_if(records.begin(), records.end(), std::back_inserter(subset),
                 [source](const LengthRecord& r) { return r.method == source; });
    if (!subset.empty()) out.push_back({source, length_error_stats(subset)});
  }
  return out;
}

std::string render_report_markdown(std::span<const MethodLengthStats> lengths, std::string_view metrics_csv,
                                   std::span<const std::string> notes) {
  std::string md = "# Fruitlet length and detection report\n\n## Length accuracy\n\n";
  if (lengths.empty()) {
    md += "No length records.\n";
  } else {
    md += "| Method | n | RMSE (mm) | MAE (mm) |\n|---|---|---|---|\n";
    for (const auto& l : lengths) {
      md += fmt::format("| {} | {} | {} | {} |\n", to_string(l.method), l.stats.n, format_metric(l.stats.rmse_mm),
                        format_metric(l.stats.mae_mm));
    }
  }
  for (const auto& note : notes) md += fmt::format("\n> {}\n", note);
  md += "\n![Length distributions](boxplot.svg)\n";

  const auto lines = detail::split_lines(metrics_csv);
  if (!lines.empty()) {
    md += "\n## Detection and pose metrics\n\n";
    const auto header = detail::split_char(lines.front(), ',');
    md += "|";
    for (auto h : header) md += fmt::format(" {} |", h);
    md += "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) md += "---|";
    md += '\n';
    for (std::size_t i = 1; i < lines.size(); ++i) {
      md += "|";
      for (auto f : detail::split_char(lines[i], ',')) md += fmt::format(" {} |", f);
      md += '\n';
    }
    md += "\nTiming columns (`*_ms`) are per-image means and vary between runs.\n";
  }
  return md;
}

}  // namespace fruitlet
