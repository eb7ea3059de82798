#include "reasonprobe/prompts.hpp"

#include <algorithm>

#include "reasonprobe/digest.hpp"
#include "reasonprobe/prompts_data.hpp"

namespace reasonprobe::prompts {

Template generator() { return {data::k_generator_system, data::k_generator_user}; }
Template diagnosis() { return {data::k_diagnosis_system, data::k_diagnosis_user}; }
Template labeler() { return {data::k_label_system, data::k_label_user}; }
std::string_view repair() { return data::k_repair_user; }

std::string render(std::string_view tmpl, const std::vector<std::pair<std::string_view, std::string>>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find('}', open);
    if (close == std::string_view::npos) break;
    const auto name = tmpl.substr(open + 1, close - open - 1);
    const auto it = std::find_if(vars.begin(), vars.end(), [&](const auto& kv) { return kv.first == name; });
    out.append(tmpl.substr(pos, open - pos));
    if (it == vars.end()) {
      out.append(tmpl.substr(open, close - open + 1));
    } else {
      out.append(it->second);
    }
    pos = close + 1;
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::string template_hash(const Template& t) {
  return sha256_hex(std::string(kVersion) + "\n" + std::string(t.system) + "\n" + std::string(t.user));
}

std::string repair_hash() { return sha256_hex(std::string(kVersion) + "\n" + std::string(repair())); }

}  // namespace reasonprobe::prompts
