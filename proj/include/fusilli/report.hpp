#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "fusilli/metrics.hpp"

namespace fusilli::report {

struct PairEntry {
  std::string pair_id;
  std::filesystem::path infrared;
  std::filesystem::path visible;
};

/// Pair list read from a CSV with header `pair_id,infrared,visible`.
/// Relative image paths resolve against the manifest's directory.
struct RunManifest {
  std::filesystem::path corpus_dir;
  std::vector<PairEntry> pairs;
};

RunManifest read_manifest(const std::filesystem::path& path);

/// Published averages for the comparison methods and the original pipeline
/// (FMI_dct, FMI_w, SSIM_a, N_abf over 21 pairs), shipped as report context.
struct PublishedRow {
  const char* method;
  double fmi_dct;
  double fmi_w;
  double ssim_a;
  double nabf;
};
const std::vector<PublishedRow>& published_averages();

inline constexpr const char* kReportHeader = "pair_id,fmi_dct,fmi_w,ssim_a,nabf";
inline constexpr const char* kSummaryHeader = "source,pairs,fmi_dct,fmi_w,ssim_a,nabf";
inline constexpr const char* kSeriesHeader = "pair_id,nabf";

/// Fixed-point rendering used by every CSV column.
std::string format_value(double value);

void write_report_row(std::ostream& out, const metrics::PairMetrics& row);

/// report.csv: header plus one row per pair, in the given order.
void write_report(const std::vector<metrics::PairMetrics>& rows, const std::filesystem::path& path);

/// summary.csv: the run's column means (source "run") followed by the
/// published reference rows (source "published:<method>").
void write_summary(const metrics::MetricReport& report, const std::filesystem::path& path);

/// nabf_series.csv: pair_id against N_abf.
void write_nabf_series(const std::vector<metrics::PairMetrics>& rows, const std::filesystem::path& path);

}  // namespace fusilli::report
