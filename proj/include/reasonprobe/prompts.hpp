#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace reasonprobe::prompts {

inline constexpr std::string_view kVersion = "v1";

struct Template {
  std::string_view system;
  std::string_view user;
};

Template generator();
Template diagnosis();
Template labeler();
std::string_view repair();

/// Replaces each "{name}" placeholder with its value.
std::string render(std::string_view tmpl, const std::vector<std::pair<std::string_view, std::string>>& vars);

/// SHA-256 over a template's system and user text; recorded in run metadata.
std::string template_hash(const Template& t);
std::string repair_hash();

}  // namespace reasonprobe::prompts
