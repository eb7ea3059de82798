#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "reasonprobe/decimal.hpp"

namespace reasonprobe {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Problem {
  std::string id;  // 0-based source line index
  std::string question;
  std::string gold_answer_raw;
  Decimal gold_answer;
};

struct CorpusSample {
  std::uint64_t seed = 0;
  std::size_t size = 0;
  std::vector<Problem> problems;
};

/// Parses the number after the last "####" marker. Only '$', '%' and ','
/// are stripped; any other residue is rejected.
Decimal extract_gold_answer(std::string_view answer_text);

/// One Problem per non-blank JSON line with string fields `question` and `answer`.
std::vector<Problem> load_corpus(const std::filesystem::path& path);
std::vector<Problem> parse_corpus(std::string_view content);

/// Uniform sample without replacement (PCG32 + partial Fisher-Yates), in
/// shuffle order.
CorpusSample sample_corpus(const std::vector<Problem>& problems, std::size_t size,
                           std::uint64_t seed);

/// sample.jsonl: one {id, question, gold_answer} object per line.
std::string serialize_sample(const CorpusSample& sample);
std::vector<Problem> read_sample(const std::filesystem::path& path);

}  // namespace reasonprobe
