#include "passnet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "passnet/errors.hpp"

namespace passnet {

namespace {

std::string fmt(double x, int decimals = 2) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
  return buf;
}

std::string fmt_sig(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

class SvgBuilder {
 public:
  SvgBuilder(double width, double height) {
    body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width, 0)
          << "\" height=\"" << fmt(height, 0) << "\">\n";
    rect(0, 0, width, height, "white", "none");
  }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double stroke_width = 1.0) {
    body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
          << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
          << fmt(stroke_width, 1) << "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke) {
    body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
          << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\" stroke=\"" << stroke
          << "\"/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy) << "\" r=\"" << fmt(r)
          << "\" fill=\"" << fill << "\"/>\n";
  }

  void text(double x, double y, const std::string& content, double size = 12.0,
            const std::string& anchor = "start", const std::string& fill = "black") {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << fmt(size, 0)
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\" fill=\"" << fill
          << "\">" << content << "</text>\n";
  }

  std::string finish() {
    body_ << "</svg>\n";
    return body_.str();
  }

 private:
  std::ostringstream body_;
};

}  // namespace

std::string render_boxplot_svg(const std::string& title,
                               const std::vector<ReportEntry>& entries) {
  constexpr double kRowHeight = 44.0;
  constexpr double kLabelWidth = 180.0;
  constexpr double kPlotWidth = 640.0;
  constexpr double kTop = 56.0;
  constexpr double kBottom = 56.0;
  const double height = kTop + kRowHeight * static_cast<double>(entries.size()) + kBottom;
  const double width = kLabelWidth + kPlotWidth + 60.0;

  double value_max = 0.0;
  for (const ReportEntry& e : entries) {
    value_max = std::max(value_max, e.summary.max);
    if (e.summary.bound_available) value_max = std::max(value_max, e.summary.bound_ratio);
  }
  if (value_max <= 0.0) value_max = 1.0;
  value_max *= 1.08;

  SvgBuilder svg(width, height);
  svg.text(16, 28, title, 16);

  auto x_of = [&](double v) { return kLabelWidth + kPlotWidth * (v / value_max); };
  const double axis_y = height - kBottom + 8.0;
  svg.line(kLabelWidth, axis_y, kLabelWidth + kPlotWidth, axis_y, "black");
  for (int tick = 0; tick <= 5; ++tick) {
    const double v = value_max * tick / 5.0;
    svg.line(x_of(v), axis_y, x_of(v), axis_y + 5, "black");
    svg.text(x_of(v), axis_y + 20, fmt_sig(v), 11, "middle");
  }
  svg.text(kLabelWidth + kPlotWidth / 2.0, axis_y + 40,
           "deviation ratio (output / input, squared L2)", 12, "middle");

  bool any_violation = false;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ReportEntry& e = entries[i];
    const EvaluationSummary& s = e.summary;
    const double yc = kTop + kRowHeight * (static_cast<double>(i) + 0.5);
    svg.text(12, yc + 4, e.label, 12);
    if (s.count == 0) {
      svg.text(kLabelWidth + 8, yc + 4, "(no points)", 11, "start", "gray");
      continue;
    }
    const double box_h = kRowHeight * 0.5;
    // whiskers
    svg.line(x_of(s.min), yc, x_of(s.q1), yc, "black");
    svg.line(x_of(s.q3), yc, x_of(s.max), yc, "black");
    svg.line(x_of(s.min), yc - box_h / 2.0, x_of(s.min), yc + box_h / 2.0, "black");
    svg.line(x_of(s.max), yc - box_h / 2.0, x_of(s.max), yc + box_h / 2.0, "black");
    // box with median line
    svg.rect(x_of(s.q1), yc - box_h / 2.0, std::max(1.0, x_of(s.q3) - x_of(s.q1)), box_h,
             "#cfe2f3", "black");
    svg.line(x_of(s.median), yc - box_h / 2.0, x_of(s.median), yc + box_h / 2.0, "black", 2.0);
    if (s.bound_available) {
      svg.circle(x_of(s.bound_ratio), yc, 5.0, "red");
      if (s.violation_count > 0 || s.bound_ratio < s.max) {
        any_violation = true;
        svg.text(x_of(s.max) + 10, yc + 4, "BOUND VIOLATED", 12, "start", "red");
      }
    } else {
      svg.text(kLabelWidth + kPlotWidth + 6, yc + 4, "uncertified", 11, "start", "gray");
    }
  }
  if (any_violation) {
    svg.text(16, 46, "WARNING: at least one combination violates its certified bound", 13,
             "start", "red");
  }
  return svg.finish();
}

std::string render_histogram_svg(const std::string& title, const std::vector<double>& values) {
  constexpr double kWidth = 720.0;
  constexpr double kHeight = 360.0;
  constexpr double kLeft = 64.0;
  constexpr double kRight = 24.0;
  constexpr double kTop = 56.0;
  constexpr double kBottom = 64.0;

  SvgBuilder svg(kWidth, kHeight);
  svg.text(16, 28, title, 16);
  if (values.empty()) {
    svg.text(kWidth / 2.0, kHeight / 2.0, "(no values)", 14, "middle", "gray");
    return svg.finish();
  }

  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  const bool degenerate = !(hi > lo);
  const std::size_t n_bins = degenerate ? 1 : std::min<std::size_t>(20, values.size());
  std::vector<std::size_t> counts(n_bins, 0);
  for (double v : values) {
    std::size_t bin = 0;
    if (!degenerate) {
      bin = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(n_bins));
      if (bin >= n_bins) bin = n_bins - 1;
    }
    counts[bin] += 1;
  }
  const std::size_t count_max = *std::max_element(counts.begin(), counts.end());

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double bar_w = plot_w / static_cast<double>(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double h = plot_h * static_cast<double>(counts[b]) / static_cast<double>(count_max);
    svg.rect(kLeft + bar_w * static_cast<double>(b), kTop + plot_h - h,
             std::max(1.0, bar_w - 2.0), h, "#6fa8dc", "black");
  }
  svg.line(kLeft, kTop + plot_h, kLeft + plot_w, kTop + plot_h, "black");
  svg.line(kLeft, kTop, kLeft, kTop + plot_h, "black");
  const double label_lo = lo;
  const double label_hi = degenerate ? lo : hi;
  svg.text(kLeft, kTop + plot_h + 20, fmt_sig(label_lo), 11, "middle");
  svg.text(kLeft + plot_w, kTop + plot_h + 20, fmt_sig(label_hi), 11, "middle");
  svg.text(kLeft - 8, kTop + 4, std::to_string(count_max), 11, "end");
  svg.text(kLeft - 8, kTop + plot_h + 4, "0", 11, "end");
  svg.text(kLeft + plot_w / 2.0, kTop + plot_h + 44, "extracted nu per layer", 12, "middle");
  return svg.finish();
}

void write_summary_csv(const std::string& path, const std::vector<ReportEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_summary_csv: cannot open " + path);
  out << "label,count,min,q1,median,q3,max,bound_ratio,violations\n";
  char buf[256];
  for (const ReportEntry& e : entries) {
    const EvaluationSummary& s = e.summary;
    std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,", e.label.c_str(),
                  s.count, s.min, s.q1, s.median, s.q3, s.max);
    out << buf;
    if (s.bound_available) {
      std::snprintf(buf, sizeof(buf), "%.17g,%zu\n", s.bound_ratio, s.violation_count);
      out << buf;
    } else {
      out << ",\n";
    }
  }
}

std::size_t write_report(const std::vector<std::string>& evaluation_csvs,
                         const std::vector<std::string>& certificate_jsons,
                         const std::string& out_dir) {
  if (evaluation_csvs.empty()) {
    throw ConfigError("report: need at least one evaluation CSV");
  }
  std::filesystem::create_directories(out_dir);

  std::vector<ReportEntry> entries;
  std::size_t violations = 0;
  for (const std::string& path : evaluation_csvs) {
    const EvaluationTable table = read_evaluation_csv(path);
    ReportEntry entry;
    entry.label = std::filesystem::path(path).stem().string();
    entry.summary = table.summary;
    violations += table.summary.violation_count;
    entries.push_back(std::move(entry));
  }

  std::vector<double> nus;
  for (const std::string& path : certificate_jsons) {
    const CascadeCertificate cert = load_certificate(path);
    for (const LayerCertificate& lc : cert.per_layer) nus.push_back(lc.nu_extracted);
  }

  write_summary_csv((std::filesystem::path(out_dir) / "summary.csv").string(), entries);
  {
    std::ofstream out(std::filesystem::path(out_dir) / "ratios_boxplot.svg");
    out << render_boxplot_svg("Attack deviation ratios vs certified bounds", entries);
  }
  {
    std::ofstream out(std::filesystem::path(out_dir) / "nu_histogram.svg");
    out << render_histogram_svg("Distribution of extracted nu", nus);
  }
  return violations;
}

}  // namespace passnet
