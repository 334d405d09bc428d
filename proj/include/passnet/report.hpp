#pragma once

#include <string>
#include <vector>

#include "passnet/attack.hpp"
#include "passnet/passivity.hpp"

namespace passnet {

// One dataset x depth combination feeding the report.
struct ReportEntry {
  std::string label;
  EvaluationSummary summary;
};

// Horizontal box-and-whisker per entry with the certified bound as a marker.
// Entries whose bound lies below the observed maximum are flagged in red.
std::string render_boxplot_svg(const std::string& title, const std::vector<ReportEntry>& entries);

// Histogram of extracted per-layer nu values across all certificates.
std::string render_histogram_svg(const std::string& title, const std::vector<double>& values);

// summary CSV: label,count,min,q1,median,q3,max,bound_ratio,violations
void write_summary_csv(const std::string& path, const std::vector<ReportEntry>& entries);

// Reads evaluation CSVs and certificate JSONs, emits summary.csv,
// ratios_boxplot.svg and nu_histogram.svg into out_dir. Labels are taken from
// the evaluation file names. Returns the total violation count.
std::size_t write_report(const std::vector<std::string>& evaluation_csvs,
                         const std::vector<std::string>& certificate_jsons,
                         const std::string& out_dir);

}  // namespace passnet
