#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reasonprobe/trace.hpp"

namespace reasonprobe {

enum class FailureCategory {
  ReasoningError,
  CalculationError,
  MisinterpretationError,
  FactualInvention,
  UncategorizedByAnalyst,
};

inline constexpr std::array<FailureCategory, 5> kAllCategories{
    FailureCategory::ReasoningError, FailureCategory::CalculationError,
    FailureCategory::MisinterpretationError, FailureCategory::FactualInvention,
    FailureCategory::UncategorizedByAnalyst};

/// Table label, e.g. "Calculation Error".
std::string_view to_string(FailureCategory c);

/// Case-insensitive, whitespace-normalized match against the closed set.
std::optional<FailureCategory> category_from_string(std::string_view s);

struct FailureDiagnosis {
  std::string problem_id;
  std::optional<std::size_t> first_error_step;  // absent when uncategorized
  FailureCategory category = FailureCategory::UncategorizedByAnalyst;
};

/// Validation message for an analyst reply, or nullopt when it is usable
/// against a trace with `step_count` steps.
std::optional<std::string> validate_diagnosis(std::string_view analyst_text, std::size_t step_count);

/// Total: anything invalid becomes UncategorizedByAnalyst with no step.
FailureDiagnosis parse_diagnosis(std::string_view analyst_text, const ReasoningTrace& trace);

struct FailureDistribution {
  std::array<std::int64_t, kAllCategories.size()> counts{};
  std::int64_t total = 0;

  std::int64_t count(FailureCategory c) const { return counts[static_cast<std::size_t>(c)]; }
  /// One-decimal percentage of the total, e.g. "49.7%".
  std::string percent(FailureCategory c) const;
};

FailureDistribution failure_distribution(const std::vector<FailureDiagnosis>& diagnoses);

std::string serialize_diagnoses(const std::vector<FailureDiagnosis>& diagnoses);
std::vector<FailureDiagnosis> read_diagnoses(const std::filesystem::path& path);

}  // namespace reasonprobe
