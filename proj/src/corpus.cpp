#include "reasonprobe/corpus.hpp"

#include <unordered_set>

#include "reasonprobe/io.hpp"
#include "reasonprobe/pcg.hpp"

namespace reasonprobe {

Decimal extract_gold_answer(std::string_view answer_text) {
  constexpr std::string_view kMarker = "####";
  const auto pos = answer_text.rfind(kMarker);
  if (pos == std::string_view::npos) throw CorpusError("answer has no '####' marker");
  std::string token;
  for (char c : trim(answer_text.substr(pos + kMarker.size()))) {
    if (c == '$' || c == '%' || c == ',') continue;
    token.push_back(c);
  }
  token = std::string(trim(token));
  if (token.empty()) throw CorpusError("empty final answer after '####'");
  try {
    return Decimal::parse(token);
  } catch (const DecimalError& e) {
    throw CorpusError(std::string("final answer is not numeric: ") + e.what());
  }
}

std::vector<Problem> parse_corpus(std::string_view content) {
  std::vector<Problem> problems;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty()) return;
    const std::string where = "line " + std::to_string(line_no);
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error&) {
      throw CorpusError(where + ": malformed JSON record");
    }
    if (!row.is_object() || !row.contains("question") || !row.contains("answer") ||
        !row["question"].is_string() || !row["answer"].is_string())
      throw CorpusError(where + ": record needs string fields 'question' and 'answer'");
    Problem p;
    p.id = std::to_string(line_no - 1);
    p.question = row["question"].get<std::string>();
    p.gold_answer_raw = row["answer"].get<std::string>();
    try {
      p.gold_answer = extract_gold_answer(p.gold_answer_raw);
    } catch (const CorpusError& e) {
      throw CorpusError("problem " + p.id + ": " + e.what());
    }
    problems.push_back(std::move(p));
  });
  return problems;
}

std::vector<Problem> load_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw CorpusError("corpus file not found: " + path.string());
  return parse_corpus(read_file(path));
}

CorpusSample sample_corpus(const std::vector<Problem>& problems, std::size_t size,
                           std::uint64_t seed) {
  if (size == 0) throw CorpusError("sample size must be positive");
  if (size > problems.size())
    throw CorpusError("sample size " + std::to_string(size) + " exceeds corpus size " +
                      std::to_string(problems.size()));
  std::unordered_set<std::string> ids;
  for (const auto& p : problems)
    if (!ids.insert(p.id).second) throw CorpusError("duplicate problem id " + p.id);

  Pcg32 rng(seed);
  CorpusSample sample;
  sample.seed = seed;
  sample.size = size;
  sample.problems.reserve(size);
  for (std::size_t i : partial_shuffle(problems.size(), size, rng))
    sample.problems.push_back(problems[i]);
  return sample;
}

std::string serialize_sample(const CorpusSample& sample) {
  std::vector<json> rows;
  rows.reserve(sample.problems.size());
  for (const auto& p : sample.problems)
    rows.push_back(json{{"id", p.id},
                        {"question", p.question},
                        {"gold_answer", p.gold_answer.to_string()}});
  return to_jsonl(rows);
}

std::vector<Problem> read_sample(const std::filesystem::path& path) {
  std::vector<Problem> out;
  for (const auto& row : read_jsonl(path)) {
    Problem p;
    p.id = row.at("id").get<std::string>();
    p.question = row.at("question").get<std::string>();
    p.gold_answer = Decimal::parse(row.at("gold_answer").get<std::string>());
    p.gold_answer_raw = "#### " + p.gold_answer.to_string();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace reasonprobe
