#include "cyscale/report.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace cyscale {

namespace fs = std::filesystem;

std::optional<ReportFormat> report_format_from_string(std::string_view name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "markdown") return ReportFormat::Markdown;
  if (name == "plotdata") return ReportFormat::PlotData;
  return std::nullopt;
}

std::vector<ReportRow> build_report_rows(const std::vector<QerStats>& stats, const ReportOptions& options) {
  if (stats.empty()) throw std::invalid_argument("report: no statistics to emit");

  int budget = 0;
  if (options.budget) {
    budget = *options.budget;
  } else {
    for (const auto& s : stats) {
      if (s.key.strategy) budget = std::max(budget, s.key.budget);
    }
  }

  std::map<RowKey, ReportRow> rows;
  auto row_for = [&](const GroupKey& key) -> ReportRow& {
    auto& row = rows[RowKey{key.dataset, key.model, key.complexity}];
    row.dataset = key.dataset;
    row.model = key.model;
    row.complexity = key.complexity;
    row.budget = budget;
    row.unreliable = options.unreliable.count(RowKey{key.dataset, key.model, key.complexity}) > 0;
    return row;
  };
  for (const auto& s : stats) {
    if (!s.key.strategy) {
      row_for(s.key).q1 = s.mean;
    } else if (s.key.budget == budget) {
      auto& row = row_for(s.key);
      if (*s.key.strategy == Strategy::IS) {
        row.is_at_n = s.mean;
        row.sigma_is = s.std_dev;
      } else {
        row.ras_at_n = s.mean;
        row.sigma_ras = s.std_dev;
      }
    }
  }

  std::vector<ReportRow> out;
  for (auto& [_, row] : rows) {
    if (row.q1 && row.is_at_n) row.delta_is = *row.q1 - *row.is_at_n;
    if (row.q1 && row.ras_at_n) row.delta_ras = *row.q1 - *row.ras_at_n;
    out.push_back(std::move(row));
  }
  auto tier = [](const std::string& complexity) {
    const auto it = std::find(kComplexityTiers.begin(), kComplexityTiers.end(), complexity);
    return std::pair{it - kComplexityTiers.begin(), complexity};
  };
  std::stable_sort(out.begin(), out.end(), [&](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.dataset, a.model) < std::tie(b.dataset, b.model) ||
           (std::tie(a.dataset, a.model) == std::tie(b.dataset, b.model) && tier(a.complexity) < tier(b.complexity));
  });
  return out;
}

namespace {

const char* const kCsvHeader =
    "dataset,model,complexity,budget,q1,is_at_n,ras_at_n,delta_is,delta_ras,sigma_is,sigma_ras,unreliable";

std::string shortest(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, end);
}

std::string cell(const std::optional<double>& value) { return value ? shortest(*value) : std::string(); }

std::string fixed2(const std::optional<double>& value) {
  if (!value) return "n/a";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.2f", *value);
  return buffer;
}

std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

std::optional<double> parse_cell(const std::string& text, std::size_t line) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("report csv line " + std::to_string(line) + ": bad number '" + text + "'");
  }
  return value;
}

std::string display(const std::string& name) { return name == "*" ? "all" : name; }

}  // namespace

std::string render_csv(const std::vector<ReportRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += quote_csv(r.dataset) + "," + quote_csv(r.model) + "," + quote_csv(r.complexity) + "," +
           std::to_string(r.budget) + "," + cell(r.q1) + "," + cell(r.is_at_n) + "," + cell(r.ras_at_n) + "," +
           cell(r.delta_is) + "," + cell(r.delta_ras) + "," + cell(r.sigma_is) + "," + cell(r.sigma_ras) + "," +
           (r.unreliable ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<ReportRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::invalid_argument("report csv: unexpected header");
  }
  std::vector<ReportRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 12) {
      throw std::invalid_argument("report csv line " + std::to_string(number) + ": expected 12 fields");
    }
    ReportRow r;
    r.dataset = f[0];
    r.model = f[1];
    r.complexity = f[2];
    r.budget = static_cast<int>(parse_cell(f[3], number).value_or(0));
    r.q1 = parse_cell(f[4], number);
    r.is_at_n = parse_cell(f[5], number);
    r.ras_at_n = parse_cell(f[6], number);
    r.delta_is = parse_cell(f[7], number);
    r.delta_ras = parse_cell(f[8], number);
    r.sigma_is = parse_cell(f[9], number);
    r.sigma_ras = parse_cell(f[10], number);
    r.unreliable = f[11] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_markdown(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("report: no rows to render");
  const bool by_complexity =
      std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.complexity != "*"; });
  const auto n = std::to_string(rows.front().budget);
  bool any_unreliable = false;

  std::string out;
  if (by_complexity) {
    out += "| Dataset | Model | Complexity | Q@1 | IS@" + n + " | RAS@" + n + " | σIS | σRAS |\n";
    out += "|---|---|---|---:|---:|---:|---:|---:|\n";
  } else {
    out += "| Dataset | Model | Q@1 | IS@" + n + " | RAS@" + n + " | ΔIS | ΔRAS |\n";
    out += "|---|---|---:|---:|---:|---:|---:|\n";
  }
  for (const auto& r : rows) {
    const std::string mark = r.unreliable ? " †" : "";
    any_unreliable = any_unreliable || r.unreliable;
    if (by_complexity) {
      out += "| " + display(r.dataset) + " | " + display(r.model) + " | " + display(r.complexity) + mark + " | " +
             fixed2(r.q1) + " | " + fixed2(r.is_at_n) + " | " + fixed2(r.ras_at_n) + " | " + fixed2(r.sigma_is) +
             " | " + fixed2(r.sigma_ras) + " |\n";
    } else {
      out += "| " + display(r.dataset) + " | " + display(r.model) + mark + " | " + fixed2(r.q1) + " | " +
             fixed2(r.is_at_n) + " | " + fixed2(r.ras_at_n) + " | " + fixed2(r.delta_is) + " | " +
             fixed2(r.delta_ras) + " |\n";
    }
  }
  out += "\nQ@1 is the mean of IS@1 and RAS@1. σ is the sample standard deviation of per-run QEE "
         "(n - 1 denominator).\n";
  if (any_unreliable) out += "† abort rate above threshold; treat as unreliable.\n";
  return out;
}

std::vector<fs::path> write_plotdata(const std::vector<QerStats>& stats, const fs::path& dir) {
  if (stats.empty()) throw std::invalid_argument("report: no statistics to emit");
  std::map<std::string, std::vector<const QerStats*>> series;
  for (const auto& s : stats) {
    if (!s.key.strategy) continue;
    auto name = display(s.key.dataset) + "__" + display(s.key.model) + "__" + display(s.key.complexity) + "__" +
                std::string(to_string(*s.key.strategy));
    for (auto& c : name) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) c = '_';
    }
    series[name].push_back(&s);
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::vector<fs::path> written;
  for (const auto& [name, points] : series) {
    const auto path = dir / (name + ".dat");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto& key = points.front()->key;
    out << "# dataset=" << key.dataset << " model=" << key.model << " complexity=" << key.complexity
        << " strategy=" << to_string(*key.strategy) << "\n# budget qer std_dev n_runs\n";
    for (const auto* p : points) {
      out << p->key.budget << ' ' << shortest(p->mean) << ' ' << shortest(p->std_dev) << ' ' << p->n_runs << '\n';
    }
    written.push_back(path);
  }
  return written;
}

void emit_report(const std::vector<QerStats>& stats, ReportFormat format, const fs::path& out,
                 const ReportOptions& options) {
  if (format == ReportFormat::PlotData) {
    write_plotdata(stats, out);
    return;
  }
  const auto rows = build_report_rows(stats, options);
  const auto text = format == ReportFormat::Csv ? render_csv(rows) : render_markdown(rows);
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write " + out.string());
  file << text;
  if (!file) throw std::runtime_error("cannot write " + out.string());
}

std::set<RowKey> unreliable_rows(const std::vector<RunRecord>& log, const std::vector<AbortEntry>& aborts,
                                 const Grouping& grouping, double threshold) {
  std::map<RowKey, std::pair<std::size_t, std::size_t>> counts;
  auto key_of = [&](const std::string& dataset, const std::string& model, const std::string& complexity) {
    return RowKey{grouping.dataset ? dataset : "*", grouping.model ? model : "*",
                  grouping.complexity ? complexity : "*"};
  };
  for (const auto& r : log) ++counts[key_of(r.dataset, r.model, r.complexity)].first;
  for (const auto& a : aborts) ++counts[key_of(a.dataset, a.cell.generator, a.complexity)].second;
  std::set<RowKey> out;
  for (const auto& [key, c] : counts) {
    const auto total = c.first + c.second;
    if (total > 0 && static_cast<double>(c.second) / static_cast<double>(total) > threshold) out.insert(key);
  }
  return out;
}

}  // namespace cyscale
