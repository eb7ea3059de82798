#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reasonprobe/diagnosis.hpp"
#include "reasonprobe/modes.hpp"

namespace reasonprobe {

/// RFC 4180 style: comma separator, double-quote escaping, header row.
std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

struct RenderedTable {
  std::string text;  // Markdown
  std::string csv;
};

struct AccuracySummary {
  std::int64_t n_total = 0;
  std::int64_t n_correct = 0;
  std::int64_t n_malformed = 0;
};

/// "849 correct of 1000 (84.9%)", or an explicit empty-run line.
std::string accuracy_line(const AccuracySummary& acc);

struct RunReport {
  AccuracySummary accuracy;
  FailureDistribution failures;
  ModeTable modes;
  std::string baseline_description;
  std::vector<std::pair<std::string, std::string>> metadata;  // rendered in order
};

RenderedTable render_failure_table(const FailureDistribution& dist);

/// Top-k ("Robust") and bottom-k ("Brittle") sections by correctness rate;
/// a cluster appears at most once. The CSV carries every cluster.
RenderedTable render_mode_table(const std::vector<ClusterReport>& reports, std::size_t top_k,
                                std::size_t bottom_k, std::string_view baseline_description);

std::string render_run_summary(const RunReport& report);

/// Summary, failure table and mode table as one Markdown document.
std::string render_report_markdown(const RunReport& report, std::size_t top_k, std::size_t bottom_k);

json summary_json(const RunReport& report);

}  // namespace reasonprobe
