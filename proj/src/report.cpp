#include "fusilli/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fusilli::report {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  return out;
}

}  // namespace

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open manifest " + path.string());
  }
  RunManifest manifest;
  manifest.corpus_dir = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split_csv(line);
    if (!header_seen) {
      if (cells != std::vector<std::string>{"pair_id", "infrared", "visible"}) {
        throw FormatError(path.string() + ": header must be 'pair_id,infrared,visible'");
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 3 || cells[0].empty() || cells[1].empty() || cells[2].empty()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected three non-empty fields");
    }
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path candidate(p);
      return candidate.is_absolute() ? candidate : manifest.corpus_dir / candidate;
    };
    manifest.pairs.push_back({cells[0], resolve(cells[1]), resolve(cells[2])});
  }
  if (!header_seen) {
    throw FormatError(path.string() + ": missing header 'pair_id,infrared,visible'");
  }
  return manifest;
}

const std::vector<PublishedRow>& published_averages() {
  static const std::vector<PublishedRow> rows{
      {"CBF", 0.26309, 0.32350, 0.59957, 0.31727},
      {"WLS", 0.33103, 0.37662, 0.72360, 0.21257},
      {"JSR", 0.14236, 0.18506, 0.54073, 0.34712},
      {"JSRSD", 0.14253, 0.18498, 0.54127, 0.34657},
      {"ConvSR", 0.34640, 0.34640, 0.75335, 0.0196},
      {"Proposed", 0.40463, 0.41684, 0.77799, 0.00120},
  };
  return rows;
}

std::string format_value(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.8f", value);
  return buffer;
}

void write_report_row(std::ostream& out, const metrics::PairMetrics& row) {
  out << row.pair_id << ',' << format_value(row.fmi_dct) << ',' << format_value(row.fmi_w) << ','
      << format_value(row.ssim_a) << ',' << format_value(row.nabf) << '\n';
}

void write_report(const std::vector<metrics::PairMetrics>& rows, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << kReportHeader << '\n';
  for (const auto& row : rows) write_report_row(out, row);
}

void write_summary(const metrics::MetricReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << kSummaryHeader << '\n';
  const metrics::PairMetrics mean = report.mean();
  out << "run," << report.pairs.size() << ',' << format_value(mean.fmi_dct) << ','
      << format_value(mean.fmi_w) << ',' << format_value(mean.ssim_a) << ',' << format_value(mean.nabf)
      << '\n';
  for (const PublishedRow& row : published_averages()) {
    out << "published:" << row.method << ",21," << format_value(row.fmi_dct) << ','
        << format_value(row.fmi_w) << ',' << format_value(row.ssim_a) << ',' << format_value(row.nabf)
        << '\n';
  }
}

void write_nabf_series(const std::vector<metrics::PairMetrics>& rows, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << kSeriesHeader << '\n';
  for (const auto& row : rows) out << row.pair_id << ',' << format_value(row.nabf) << '\n';
}

}  // namespace fusilli::report
