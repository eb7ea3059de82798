#include "reasonprobe/report.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "reasonprobe/format.hpp"

namespace reasonprobe {

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  out += "\r\n";
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    row_started = true;
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      row_started = false;
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw std::runtime_error("parse_csv: unterminated quoted field");
  if (row_started) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string accuracy_line(const AccuracySummary& acc) {
  if (acc.n_total == 0) return "empty run: no traces were evaluated";
  return fmt::format("{} correct of {} ({})", acc.n_correct, acc.n_total,
                     format_percent(acc.n_correct, acc.n_total));
}

RenderedTable render_failure_table(const FailureDistribution& dist) {
  std::vector<FailureCategory> order(kAllCategories.begin(), kAllCategories.end());
  std::stable_sort(order.begin(), order.end(), [&](FailureCategory x, FailureCategory y) {
    if (dist.count(x) != dist.count(y)) return dist.count(x) > dist.count(y);
    return to_string(x) < to_string(y);
  });

  RenderedTable out;
  out.text = "| Error Category | Count | Percentage |\n|---|---:|---:|\n";
  out.csv = csv_row({"category", "count", "percentage"});
  for (auto c : order) {
    const auto name = std::string(to_string(c));
    out.csv += csv_row({name, std::to_string(dist.count(c)), dist.percent(c)});
    if (dist.count(c) == 0) continue;
    out.text += fmt::format("| {} | {} | {} |\n", name, dist.count(c), dist.percent(c));
  }
  const std::string total_pct = format_percent(dist.total, dist.total);
  out.text += fmt::format("| **Total Failures Analyzed** | **{}** | **{}** |\n", dist.total, total_pct);
  out.csv += csv_row({"Total Failures Analyzed", std::to_string(dist.total), total_pct});
  return out;
}

namespace {

std::string rate_cell(const ClusterReport& r) {
  return format_percent(r.n_correct, r.n_total) + (r.significant ? "*" : "");
}

std::string mode_row(const ClusterReport& r) {
  return fmt::format("| {} | {} | {} | {} |\n", r.cluster_id, rate_cell(r), r.n_total, r.label);
}

}  // namespace

RenderedTable render_mode_table(const std::vector<ClusterReport>& reports, std::size_t top_k,
                                std::size_t bottom_k, std::string_view baseline_description) {
  std::vector<ClusterReport> sorted = reports;
  sort_by_rate(sorted);
  const std::size_t robust = std::min(top_k, sorted.size());
  const std::size_t brittle = std::min(bottom_k, sorted.size() - robust);

  RenderedTable out;
  out.text = "| Cluster ID | Correctness | Sentence Count | Auto-Label (Reasoning Mode) |\n"
             "|---:|---:|---:|---|\n";
  out.text += "| *Robust Reasoning Modes* | | | |\n";
  for (std::size_t i = 0; i < robust; ++i) out.text += mode_row(sorted[i]);
  out.text += "| *Brittle Reasoning Modes* | | | |\n";
  for (std::size_t i = sorted.size() - brittle; i < sorted.size(); ++i) out.text += mode_row(sorted[i]);
  out.text += fmt::format(
      "\n\\* p < 0.05, two-sided Fisher's exact test against {}; no multiple-comparison correction.\n",
      baseline_description);

  out.csv = csv_row({"cluster_id", "label", "n_total", "n_correct", "correctness", "p_value", "significant"});
  for (const auto& r : sorted)
    out.csv += csv_row({std::to_string(r.cluster_id), r.label, std::to_string(r.n_total),
                        std::to_string(r.n_correct), format_percent(r.n_correct, r.n_total),
                        fmt::format("{:.6g}", r.p_value), r.significant ? "true" : "false"});
  return out;
}

std::string render_run_summary(const RunReport& report) {
  std::string out = "## Run summary\n\n";
  out += "- Accuracy: " + accuracy_line(report.accuracy) + "\n";
  out += fmt::format("- Malformed responses (counted as incorrect): {}\n", report.accuracy.n_malformed);
  out += fmt::format("- Noise sentences (in no reasoning mode): {} of {}\n", report.modes.noise_total,
                     report.modes.clustered_sentences);
  out += fmt::format("- Reasoning modes found: {}\n", report.modes.reports.size());
  out += "\n### Metadata\n\n";
  for (const auto& [key, value] : report.metadata) out += fmt::format("- {}: {}\n", key, value);
  return out;
}

std::string render_report_markdown(const RunReport& report, std::size_t top_k, std::size_t bottom_k) {
  std::string out = "# Reasoning diagnostics report\n\n";
  out += render_run_summary(report);
  out += "\n## Distribution of failure types at the first erroneous step\n\n";
  out += render_failure_table(report.failures).text;
  out += "\n## Correctness of reasoning modes\n\n";
  out += render_mode_table(report.modes.reports, top_k, bottom_k, report.baseline_description).text;
  return out;
}

json summary_json(const RunReport& report) {
  json failures = json::object();
  for (auto c : kAllCategories) failures[std::string(to_string(c))] = report.failures.count(c);
  json meta = json::object();
  for (const auto& [key, value] : report.metadata) meta[key] = value;
  const auto& acc = report.accuracy;
  return json{{"accuracy",
               json{{"n_total", acc.n_total},
                    {"n_correct", acc.n_correct},
                    {"n_malformed", acc.n_malformed},
                    {"percentage", acc.n_total == 0 ? json(nullptr)
                                                    : json(format_percent(acc.n_correct, acc.n_total))},
                    {"line", accuracy_line(acc)}}},
              {"failures", json{{"total", report.failures.total}, {"counts", failures}}},
              {"modes", json{{"clusters", report.modes.reports.size()},
                             {"noise_sentences", report.modes.noise_total},
                             {"clustered_sentences", report.modes.clustered_sentences}}},
              {"metadata", meta}};
}

}  // namespace reasonprobe
