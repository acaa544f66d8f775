#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cyscale/harness.hpp"
#include "cyscale/metrics.hpp"

namespace cyscale {

enum class ReportFormat { Csv, Markdown, PlotData };

std::optional<ReportFormat> report_format_from_string(std::string_view name);

/// One (dataset, model, complexity) row: baseline, both strategies at the
/// scaled budget, their reductions and spreads. Missing strategies leave
/// the matching fields empty.
struct ReportRow {
  std::string dataset;
  std::string model;
  std::string complexity;
  int budget = 0;
  std::optional<double> q1;
  std::optional<double> is_at_n;
  std::optional<double> ras_at_n;
  std::optional<double> delta_is;
  std::optional<double> delta_ras;
  std::optional<double> sigma_is;
  std::optional<double> sigma_ras;
  bool unreliable = false;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

using RowKey = std::tuple<std::string, std::string, std::string>;

struct ReportOptions {
  /// Scaled budget n; defaults to the largest budget in the stats.
  std::optional<int> budget;
  /// (dataset, model, complexity) rows to flag as unreliable.
  std::set<RowKey> unreliable;
};

std::vector<ReportRow> build_report_rows(const std::vector<QerStats>& stats, const ReportOptions& options = {});

std::string render_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_csv(const std::string& text);

/// Per-dataset table with reductions, or a per-complexity table with
/// spreads when any row carries a complexity tier.
std::string render_markdown(const std::vector<ReportRow>& rows);

/// Writes one whitespace-separated series file per (group, strategy) into
/// `dir` and returns the file paths.
std::vector<std::filesystem::path> write_plotdata(const std::vector<QerStats>& stats,
                                                  const std::filesystem::path& dir);

/// Throws std::invalid_argument on empty stats, std::runtime_error when the
/// output cannot be written.
void emit_report(const std::vector<QerStats>& stats, ReportFormat format, const std::filesystem::path& out,
                 const ReportOptions& options = {});

/// Rows whose abort fraction, aborts / (aborts + runs), exceeds `threshold`.
std::set<RowKey> unreliable_rows(const std::vector<RunRecord>& log, const std::vector<AbortEntry>& aborts,
                                 const Grouping& grouping, double threshold);

}  // namespace cyscale
