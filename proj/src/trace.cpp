#include "reasonprobe/trace.hpp"

#include <cctype>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

#include "reasonprobe/json_extract.hpp"

namespace reasonprobe {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Correct: return "Correct";
    case Outcome::Incorrect: return "Incorrect";
    case Outcome::Malformed: return "Malformed";
  }
  return "Malformed";
}

Outcome outcome_from_string(std::string_view s) {
  if (s == "Correct") return Outcome::Correct;
  if (s == "Incorrect") return Outcome::Incorrect;
  if (s == "Malformed") return Outcome::Malformed;
  throw std::invalid_argument("unknown outcome '" + std::string(s) + "'");
}

std::string_view to_string(OutcomeLabel l) {
  return l == OutcomeLabel::CorrectTrace ? "CorrectTrace" : "FailedTrace";
}

OutcomeLabel outcome_label_from_string(std::string_view s) {
  if (s == "CorrectTrace") return OutcomeLabel::CorrectTrace;
  if (s == "FailedTrace") return OutcomeLabel::FailedTrace;
  throw std::invalid_argument("unknown outcome label '" + std::string(s) + "'");
}

namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_boundary(std::string_view s, std::size_t k) {
  const char c = s[k];
  if (c != '.' && c != '!' && c != '?') return false;
  const bool at_end = k + 1 == s.size();
  if (c == '.' && k > 0 && !at_end && is_digit(s[k - 1]) && is_digit(s[k + 1])) return false;
  return at_end || is_space(s[k + 1]);
}

}  // namespace

std::vector<SentenceRecord> segment_sentences(const ReasoningTrace& trace) {
  if (trace.outcome == Outcome::Malformed)
    throw std::invalid_argument("cannot segment malformed trace " + trace.problem_id);
  const OutcomeLabel label = trace.outcome == Outcome::Correct ? OutcomeLabel::CorrectTrace
                                                               : OutcomeLabel::FailedTrace;
  std::vector<SentenceRecord> out;
  for (std::size_t step = 0; step < trace.steps.size(); ++step) {
    const std::string_view text = trace.steps[step];
    std::size_t sentence = 0;
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
      const auto frag = trim(text.substr(start, end - start));
      start = end;
      if (frag.empty()) return;
      out.push_back(SentenceRecord{
          trace.problem_id + ":" + std::to_string(step) + ":" + std::to_string(sentence++),
          trace.problem_id, std::string(frag), label});
    };
    for (std::size_t k = 0; k < text.size(); ++k)
      if (is_boundary(text, k)) emit(k + 1);
    emit(text.size());
  }
  return out;
}

bool answers_equal(const Decimal& predicted, const Decimal& gold) {
  using boost::multiprecision::cpp_int;
  const int s = std::max(predicted.scale(), gold.scale());
  auto scaled = [s](const Decimal& d) {
    cpp_int v = d.mantissa();
    for (int i = d.scale(); i < s; ++i) v *= 10;
    return v;
  };
  cpp_int p10 = 1;
  for (int i = 0; i < s; ++i) p10 *= 10;
  const cpp_int diff = abs(scaled(predicted) - scaled(gold));
  const cpp_int gold_abs = abs(scaled(gold));
  // |diff| / 10^s <= 1e-6 * max(1, |gold|)
  return diff * 1000000 <= std::max(p10, gold_abs);
}

Outcome verify_trace(ReasoningTrace& trace, const Decimal& gold) {
  if (!trace.final_answer || trace.steps.empty()) {
    trace.outcome = Outcome::Malformed;
  } else {
    trace.outcome = answers_equal(*trace.final_answer, gold) ? Outcome::Correct : Outcome::Incorrect;
  }
  return trace.outcome;
}

std::optional<Decimal> decimal_from_json(const json& value) {
  try {
    if (value.is_number_integer()) {
      if (value.is_number_unsigned()) {
        const auto u = value.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
          return std::nullopt;
        return Decimal::from_int(static_cast<std::int64_t>(u));
      }
      return Decimal::from_int(value.get<std::int64_t>());
    }
    if (value.is_number_float()) return Decimal::from_double(value.get<double>());
    if (value.is_string()) {
      std::string token;
      for (char c : value.get<std::string>())
        if (c != '$' && c != '%' && c != ',') token.push_back(c);
      return Decimal::parse(trim(token));
    }
  } catch (const DecimalError&) {
  }
  return std::nullopt;
}

SolutionParse parse_solution(std::string_view text) {
  SolutionParse result;
  const auto region = outermost_object(text);
  if (!region) {
    result.error = "response contains no JSON object";
    return result;
  }
  json obj;
  try {
    obj = json::parse(*region);
  } catch (const json::parse_error&) {
    result.error = "response object is not valid JSON";
    return result;
  }
  if (!obj.contains("reasoning_steps") || !obj["reasoning_steps"].is_array()) {
    result.error = "field 'reasoning_steps' must be an array of strings";
    return result;
  }
  ParsedSolution sol;
  for (const auto& step : obj["reasoning_steps"]) {
    if (!step.is_string()) {
      result.error = "field 'reasoning_steps' must contain only strings";
      return result;
    }
    const auto t = trim(step.get_ref<const std::string&>());
    if (!t.empty()) sol.steps.emplace_back(t);
  }
  if (sol.steps.empty()) {
    result.error = "field 'reasoning_steps' must contain at least one non-empty step";
    return result;
  }
  if (!obj.contains("final_answer") || obj["final_answer"].is_null()) {
    result.error = "field 'final_answer' is missing";
    return result;
  }
  const auto answer = decimal_from_json(obj["final_answer"]);
  if (!answer) {
    result.error = "field 'final_answer' must be a single number";
    return result;
  }
  sol.final_answer = *answer;
  result.solution = std::move(sol);
  return result;
}

std::string serialize_traces(const std::vector<ReasoningTrace>& traces) {
  std::vector<json> rows;
  rows.reserve(traces.size());
  for (const auto& t : traces) {
    json row{{"problem_id", t.problem_id},
             {"steps", t.steps},
             {"final_answer", nullptr},
             {"outcome", to_string(t.outcome)},
             {"raw_response", t.raw_response}};
    if (t.final_answer) row["final_answer"] = t.final_answer->to_string();
    rows.push_back(std::move(row));
  }
  return to_jsonl(rows);
}

std::vector<ReasoningTrace> read_traces(const std::filesystem::path& path) {
  std::vector<ReasoningTrace> out;
  for (const auto& row : read_jsonl(path)) {
    ReasoningTrace t;
    t.problem_id = row.at("problem_id").get<std::string>();
    t.steps = row.at("steps").get<std::vector<std::string>>();
    if (!row.at("final_answer").is_null())
      t.final_answer = Decimal::parse(row["final_answer"].get<std::string>());
    t.outcome = outcome_from_string(row.at("outcome").get<std::string>());
    t.raw_response = row.at("raw_response").get<std::string>();
    out.push_back(std::move(t));
  }
  return out;
}

std::string serialize_sentences(const std::vector<SentenceRecord>& sentences) {
  std::vector<json> rows;
  rows.reserve(sentences.size());
  for (const auto& s : sentences)
    rows.push_back(json{{"sentence_id", s.sentence_id},
                        {"trace_ref", s.trace_ref},
                        {"text", s.text},
                        {"outcome_label", to_string(s.outcome_label)}});
  return to_jsonl(rows);
}

std::vector<SentenceRecord> read_sentences(const std::filesystem::path& path) {
  std::vector<SentenceRecord> out;
  for (const auto& row : read_jsonl(path))
    out.push_back(SentenceRecord{row.at("sentence_id").get<std::string>(),
                                 row.at("trace_ref").get<std::string>(),
                                 row.at("text").get<std::string>(),
                                 outcome_label_from_string(row.at("outcome_label").get<std::string>())});
  return out;
}

}  // namespace reasonprobe
