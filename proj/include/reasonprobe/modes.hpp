#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "reasonprobe/hdbscan.hpp"
#include "reasonprobe/stats.hpp"
#include "reasonprobe/trace.hpp"

namespace reasonprobe {

inline constexpr std::size_t kLabelSampleSize = 15;

struct ClusterReport {
  int cluster_id = 0;
  std::string label;
  std::int64_t n_total = 0;
  std::int64_t n_correct = 0;
  double correctness_rate = 0.0;
  double p_value = 1.0;
  bool significant = false;
  std::vector<std::string> sample_sentence_ids;
};

struct RateCounts {
  std::int64_t n_correct = 0;
  std::int64_t n_total = 0;
  double rate = 0.0;
};

/// Throws std::invalid_argument on an empty member set.
RateCounts correctness_rate(std::span<const SentenceRecord* const> members);
RateCounts correctness_rate(std::span<const SentenceRecord> members);

/// Indices into `members` of min(15, size) sentences drawn without
/// replacement from a PCG32 stream seeded by (run_seed, cluster_id).
std::vector<std::size_t> select_label_sample(std::size_t member_count, std::uint64_t run_seed,
                                             int cluster_id);

/// Produces the label text for one cluster from its sampled sentences.
using ClusterLabeler = std::function<std::string(const std::vector<std::string>& sample, int cluster_id)>;

struct ModeAnalysisOptions {
  stats::BaselineMode baseline = stats::BaselineMode::Complement;
  double fixed_rate = 0.849;
  std::uint64_t run_seed = 42;
  std::size_t max_in_flight = 8;
};

struct ModeTable {
  std::vector<ClusterReport> reports;  // sorted by correctness rate, descending
  std::int64_t clustered_sentences = 0;
  std::int64_t clustered_correct = 0;
  std::int64_t noise_total = 0;
  std::int64_t noise_correct = 0;
};

/// `sentences` are aligned with `assignment.labels`.
ModeTable build_mode_table(const hdbscan::ClusterAssignment& assignment,
                           std::span<const SentenceRecord> sentences, const ClusterLabeler& labeler,
                           const ModeAnalysisOptions& options);

/// Rate ordering used in reports: rate desc, then size desc, then id asc.
void sort_by_rate(std::vector<ClusterReport>& reports);

json mode_table_to_json(const ModeTable& table, const ModeAnalysisOptions& options);
ModeTable mode_table_from_json(const json& doc);

}  // namespace reasonprobe
