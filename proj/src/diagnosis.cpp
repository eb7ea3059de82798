#include "reasonprobe/diagnosis.hpp"

#include <cctype>
#include <stdexcept>

#include "reasonprobe/format.hpp"
#include "reasonprobe/json_extract.hpp"

namespace reasonprobe {

std::string_view to_string(FailureCategory c) {
  switch (c) {
    case FailureCategory::ReasoningError: return "Reasoning Error";
    case FailureCategory::CalculationError: return "Calculation Error";
    case FailureCategory::MisinterpretationError: return "Misinterpretation Error";
    case FailureCategory::FactualInvention: return "Factual Invention";
    case FailureCategory::UncategorizedByAnalyst: return "Uncategorized by Analyst";
  }
  return "Uncategorized by Analyst";
}

namespace {

std::string normalize_words(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

struct Extracted {
  std::optional<std::int64_t> step;
  std::optional<FailureCategory> category;
  std::string error;
};

Extracted extract(std::string_view text, std::size_t step_count) {
  Extracted e;
  const auto region = outermost_object(text);
  if (!region) {
    e.error = "response contains no JSON object";
    return e;
  }
  json obj;
  try {
    obj = json::parse(*region);
  } catch (const json::parse_error&) {
    e.error = "response object is not valid JSON";
    return e;
  }
  if (!obj.contains("category") || !obj["category"].is_string()) {
    e.error = "field 'category' must be a string";
    return e;
  }
  e.category = category_from_string(obj["category"].get<std::string>());
  if (!e.category) {
    e.error = "field 'category' must be one of: Reasoning Error, Calculation Error, "
              "Misinterpretation Error, Factual Invention";
    return e;
  }
  if (*e.category == FailureCategory::UncategorizedByAnalyst) return e;
  if (!obj.contains("first_error_step") || !obj["first_error_step"].is_number_integer()) {
    e.error = "field 'first_error_step' must be an integer";
    return e;
  }
  const auto step = obj["first_error_step"].get<std::int64_t>();
  if (step < 0 || static_cast<std::uint64_t>(step) >= step_count) {
    e.error = "field 'first_error_step' must be between 0 and " + std::to_string(step_count - 1);
    return e;
  }
  e.step = step;
  return e;
}

}  // namespace

std::optional<FailureCategory> category_from_string(std::string_view s) {
  const std::string key = normalize_words(s);
  for (auto c : kAllCategories)
    if (normalize_words(to_string(c)) == key) return c;
  return std::nullopt;
}

std::optional<std::string> validate_diagnosis(std::string_view analyst_text, std::size_t step_count) {
  auto e = extract(analyst_text, step_count);
  if (e.error.empty()) return std::nullopt;
  return e.error;
}

FailureDiagnosis parse_diagnosis(std::string_view analyst_text, const ReasoningTrace& trace) {
  FailureDiagnosis d;
  d.problem_id = trace.problem_id;
  auto e = extract(analyst_text, trace.steps.size());
  if (e.error.empty() && e.category && *e.category != FailureCategory::UncategorizedByAnalyst) {
    d.category = *e.category;
    d.first_error_step = static_cast<std::size_t>(*e.step);
  }
  return d;
}

std::string FailureDistribution::percent(FailureCategory c) const {
  return format_percent(count(c), total);
}

FailureDistribution failure_distribution(const std::vector<FailureDiagnosis>& diagnoses) {
  FailureDistribution dist;
  for (const auto& d : diagnoses) ++dist.counts[static_cast<std::size_t>(d.category)];
  dist.total = static_cast<std::int64_t>(diagnoses.size());
  return dist;
}

std::string serialize_diagnoses(const std::vector<FailureDiagnosis>& diagnoses) {
  std::vector<json> rows;
  rows.reserve(diagnoses.size());
  for (const auto& d : diagnoses) {
    json row{{"problem_id", d.problem_id},
             {"first_error_step", nullptr},
             {"category", to_string(d.category)}};
    if (d.first_error_step) row["first_error_step"] = *d.first_error_step;
    rows.push_back(std::move(row));
  }
  return to_jsonl(rows);
}

std::vector<FailureDiagnosis> read_diagnoses(const std::filesystem::path& path) {
  std::vector<FailureDiagnosis> out;
  for (const auto& row : read_jsonl(path)) {
    FailureDiagnosis d;
    d.problem_id = row.at("problem_id").get<std::string>();
    if (!row.at("first_error_step").is_null())
      d.first_error_step = row["first_error_step"].get<std::size_t>();
    const auto cat = category_from_string(row.at("category").get<std::string>());
    if (!cat) throw std::runtime_error(path.string() + ": unknown category for " + d.problem_id);
    d.category = *cat;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace reasonprobe
