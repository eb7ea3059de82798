#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reasonprobe/decimal.hpp"
#include "reasonprobe/io.hpp"

namespace reasonprobe {

enum class Outcome { Correct, Incorrect, Malformed };
enum class OutcomeLabel { CorrectTrace, FailedTrace };

std::string_view to_string(Outcome o);
Outcome outcome_from_string(std::string_view s);
std::string_view to_string(OutcomeLabel l);
OutcomeLabel outcome_label_from_string(std::string_view s);

struct ReasoningTrace {
  std::string problem_id;
  std::vector<std::string> steps;
  std::optional<Decimal> final_answer;
  std::string raw_response;
  Outcome outcome = Outcome::Malformed;
};

struct SentenceRecord {
  std::string sentence_id;  // "{problem_id}:{step_index}:{sentence_index}"
  std::string trace_ref;
  std::string text;
  OutcomeLabel outcome_label = OutcomeLabel::FailedTrace;
};

/// Splits each step on '.', '!' or '?' followed by whitespace or the end of
/// the step. A period between two digits never splits. Requires a
/// non-Malformed trace.
std::vector<SentenceRecord> segment_sentences(const ReasoningTrace& trace);

/// |predicted - gold| <= 1e-6 * max(1, |gold|), evaluated exactly.
bool answers_equal(const Decimal& predicted, const Decimal& gold);

/// Sets and returns the trace outcome. A trace without a final answer or
/// without steps is Malformed.
Outcome verify_trace(ReasoningTrace& trace, const Decimal& gold);

/// Result of validating a generator response.
struct ParsedSolution {
  std::vector<std::string> steps;
  Decimal final_answer;
};

/// Validates `{"reasoning_steps": [...], "final_answer": number}` taken from
/// the outermost object in `text`. On failure returns the validation message.
struct SolutionParse {
  std::optional<ParsedSolution> solution;
  std::string error;
};
SolutionParse parse_solution(std::string_view text);

/// Numeric JSON scalar or numeric string ("$1,260") to an exact decimal.
std::optional<Decimal> decimal_from_json(const json& value);

std::string serialize_traces(const std::vector<ReasoningTrace>& traces);
std::vector<ReasoningTrace> read_traces(const std::filesystem::path& path);

std::string serialize_sentences(const std::vector<SentenceRecord>& sentences);
std::vector<SentenceRecord> read_sentences(const std::filesystem::path& path);

}  // namespace reasonprobe
