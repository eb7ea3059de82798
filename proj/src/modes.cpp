#include "reasonprobe/modes.hpp"

#include <algorithm>
#include <stdexcept>

#include "reasonprobe/parallel.hpp"
#include "reasonprobe/pcg.hpp"

namespace reasonprobe {

namespace {

RateCounts make_rate(std::int64_t correct, std::int64_t total) {
  if (total == 0) throw std::invalid_argument("correctness_rate: empty cluster");
  return {correct, total, static_cast<double>(correct) / static_cast<double>(total)};
}

}  // namespace

RateCounts correctness_rate(std::span<const SentenceRecord* const> members) {
  std::int64_t correct = 0;
  for (const auto* s : members) correct += s->outcome_label == OutcomeLabel::CorrectTrace ? 1 : 0;
  return make_rate(correct, static_cast<std::int64_t>(members.size()));
}

RateCounts correctness_rate(std::span<const SentenceRecord> members) {
  std::int64_t correct = 0;
  for (const auto& s : members) correct += s.outcome_label == OutcomeLabel::CorrectTrace ? 1 : 0;
  return make_rate(correct, static_cast<std::int64_t>(members.size()));
}

std::vector<std::size_t> select_label_sample(std::size_t member_count, std::uint64_t run_seed,
                                             int cluster_id) {
  Pcg32 rng(run_seed, static_cast<std::uint64_t>(cluster_id));
  return partial_shuffle(member_count, std::min(kLabelSampleSize, member_count), rng);
}

void sort_by_rate(std::vector<ClusterReport>& reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const ClusterReport& x, const ClusterReport& y) {
    // exact comparison of n_correct/n_total
    const auto lhs = static_cast<__int128>(x.n_correct) * y.n_total;
    const auto rhs = static_cast<__int128>(y.n_correct) * x.n_total;
    if (lhs != rhs) return lhs > rhs;
    if (x.n_total != y.n_total) return x.n_total > y.n_total;
    return x.cluster_id < y.cluster_id;
  });
}

ModeTable build_mode_table(const hdbscan::ClusterAssignment& assignment,
                           std::span<const SentenceRecord> sentences, const ClusterLabeler& labeler,
                           const ModeAnalysisOptions& options) {
  if (assignment.labels.size() != sentences.size())
    throw std::invalid_argument("build_mode_table: labels and sentences are not aligned");
  const std::size_t k = assignment.cluster_count();
  std::vector<std::vector<const SentenceRecord*>> members(k);
  ModeTable table;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const bool correct = sentences[i].outcome_label == OutcomeLabel::CorrectTrace;
    ++table.clustered_sentences;
    table.clustered_correct += correct ? 1 : 0;
    const int label = assignment.labels[i];
    if (label < 0) {
      ++table.noise_total;
      table.noise_correct += correct ? 1 : 0;
    } else {
      if (static_cast<std::size_t>(label) >= k) throw std::invalid_argument("build_mode_table: label out of range");
      members[static_cast<std::size_t>(label)].push_back(&sentences[i]);
    }
  }

  table.reports.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& r = table.reports[c];
    const auto counts = correctness_rate(std::span<const SentenceRecord* const>(members[c]));
    r.cluster_id = static_cast<int>(c);
    r.n_total = counts.n_total;
    r.n_correct = counts.n_correct;
    r.correctness_rate = counts.rate;
    for (std::size_t idx : select_label_sample(members[c].size(), options.run_seed, r.cluster_id))
      r.sample_sentence_ids.push_back(members[c][idx]->sentence_id);

    const auto t = stats::build_table(r.n_correct, r.n_total, table.clustered_correct,
                                      table.clustered_sentences, options.baseline, options.fixed_rate);
    // An empty out-group leaves the 2x2 test undefined; treat it as no evidence.
    r.p_value = (t.c + t.d == 0) ? 1.0 : stats::fisher_exact_two_sided(t);
    r.significant = stats::is_significant(r.p_value);
  }

  parallel_for(k, options.max_in_flight, [&](std::size_t c) {
    std::vector<std::string> sample;
    const auto idx = select_label_sample(members[c].size(), options.run_seed, static_cast<int>(c));
    for (std::size_t i : idx) sample.push_back(members[c][i]->text);
    table.reports[c].label = labeler(sample, static_cast<int>(c));
  });

  sort_by_rate(table.reports);
  return table;
}

json mode_table_to_json(const ModeTable& table, const ModeAnalysisOptions& options) {
  json reports = json::array();
  for (const auto& r : table.reports)
    reports.push_back(json{{"cluster_id", r.cluster_id},
                           {"label", r.label},
                           {"n_total", r.n_total},
                           {"n_correct", r.n_correct},
                           {"correctness_rate", r.correctness_rate},
                           {"p_value", r.p_value},
                           {"significant", r.significant},
                           {"sample_sentence_ids", r.sample_sentence_ids}});
  return json{{"baseline", stats::to_string(options.baseline)},
              {"fixed_rate", options.fixed_rate},
              {"significance_level", stats::kSignificanceLevel},
              {"clustered_sentences", table.clustered_sentences},
              {"clustered_correct", table.clustered_correct},
              {"noise", json{{"n_total", table.noise_total}, {"n_correct", table.noise_correct}}},
              {"clusters", reports}};
}

ModeTable mode_table_from_json(const json& doc) {
  ModeTable t;
  t.clustered_sentences = doc.at("clustered_sentences").get<std::int64_t>();
  t.clustered_correct = doc.at("clustered_correct").get<std::int64_t>();
  t.noise_total = doc.at("noise").at("n_total").get<std::int64_t>();
  t.noise_correct = doc.at("noise").at("n_correct").get<std::int64_t>();
  for (const auto& r : doc.at("clusters")) {
    ClusterReport c;
    c.cluster_id = r.at("cluster_id").get<int>();
    c.label = r.at("label").get<std::string>();
    c.n_total = r.at("n_total").get<std::int64_t>();
    c.n_correct = r.at("n_correct").get<std::int64_t>();
    c.correctness_rate = r.at("correctness_rate").get<double>();
    c.p_value = r.at("p_value").get<double>();
    c.significant = r.at("significant").get<bool>();
    c.sample_sentence_ids = r.at("sample_sentence_ids").get<std::vector<std::string>>();
    t.reports.push_back(std::move(c));
  }
  return t;
}

}  // namespace reasonprobe
