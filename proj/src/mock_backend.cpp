#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "reasonprobe/diagnosis.hpp"
#include "reasonprobe/digest.hpp"
#include "reasonprobe/gateway.hpp"
#include "reasonprobe/pcg.hpp"
#include "reasonprobe/prompts.hpp"

namespace reasonprobe {

namespace {

// Numbers shift a sentence's vector a little; words decide where it lands.
constexpr double kNumberWeight = 0.35;

const std::set<std::string, std::less<>> kStopwords{
    "about", "after", "also", "because", "been", "before", "being", "each", "from", "have",
    "into",  "more",  "much", "only",    "over", "same", "than",   "that", "their", "them",
    "then",  "there", "these", "they",   "this", "were", "what",   "when", "which", "will",
    "with",  "would", "your"};

std::vector<std::string> tokens_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (ch == '.' && !cur.empty() && std::isdigit(static_cast<unsigned char>(cur.back()))) {
      cur.push_back('.');
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  for (auto& t : out)
    while (t.size() > 1 && t.back() == '.') t.pop_back();
  return out;
}

bool is_number(std::string_view t) {
  return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  });
}

std::int64_t word_count(std::string_view s) {
  std::int64_t n = 0;
  bool in_word = false;
  for (char c : s) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::string synthesize_label(std::string_view user) {
  std::map<std::string, int> counts;
  for (const auto& t : tokens_of(user)) {
    if (t.size() < 4 || is_number(t) || kStopwords.count(t) != 0 || t == "sentences") continue;
    ++counts[t];
  }
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.empty()) return "Miscellaneous reasoning steps";
  std::string label = "Reasoning about " + ranked[0].first;
  if (ranked.size() > 2) return label + ", " + ranked[1].first + " and " + ranked[2].first;
  if (ranked.size() > 1) return label + " and " + ranked[1].first;
  return label;
}

}  // namespace

MockBackend::MockBackend(std::uint64_t seed, std::vector<MockRule> rules) : seed_(seed) {
  for (auto& r : rules) rules_by_task_[r.task].push_back(std::move(r));
}

std::vector<MockRule> MockBackend::load_script(const std::filesystem::path& path) {
  std::vector<MockRule> rules;
  for (const auto& row : read_jsonl(path)) {
    MockRule r;
    r.task = row.at("task").get<std::string>();
    if (r.task != "generate" && r.task != "diagnose" && r.task != "label")
      throw std::runtime_error(path.string() + ": unknown mock task '" + r.task + "'");
    r.match = row.value("match", "");
    r.response = row.at("response").get<std::string>();
    if (row.contains("repair_response")) r.repair_response = row["repair_response"].get<std::string>();
    rules.push_back(std::move(r));
  }
  return rules;
}

std::vector<double> MockBackend::embed_text(std::string_view text, std::size_t dim) const {
  std::vector<double> v(dim, 0.0);
  auto accumulate = [&](std::string_view token, double weight) {
    Pcg32 rng(mix64(seed_ ^ fnv1a64(token)), 7);
    for (auto& x : v) x += weight * (static_cast<double>(rng.next()) / 2147483648.0 - 1.0);
  };
  const auto tokens = tokens_of(text);
  for (const auto& t : tokens) accumulate(t, is_number(t) ? kNumberWeight : 1.0);
  if (tokens.empty()) accumulate(text, 1.0);
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (auto& x : v) x /= norm;
  return v;
}

std::string MockBackend::chat_reply(const json& messages) const {
  if (!messages.is_array() || messages.size() < 2)
    throw ApiError("mock backend: expected a system and a user message");
  const auto system = messages[0].at("content").get<std::string>();
  const auto user = messages[1].at("content").get<std::string>();
  const bool repair = messages.size() > 2;

  std::string task;
  if (system == prompts::generator().system) {
    task = "generate";
  } else if (system == prompts::diagnosis().system) {
    task = "diagnose";
  } else if (system == prompts::labeler().system) {
    task = "label";
  } else {
    throw ApiError("mock backend: unrecognized system prompt");
  }

  if (auto it = rules_by_task_.find(task); it != rules_by_task_.end()) {
    for (const auto& rule : it->second) {
      if (user.find(rule.match) == std::string::npos) continue;
      return repair && rule.repair_response ? *rule.repair_response : rule.response;
    }
  }

  const std::uint64_t h = mix64(seed_ ^ fnv1a64(task + "\n" + user));
  if (task == "generate") {
    return json{{"reasoning_steps",
                 {"Identify the quantities given in the problem.", "Combine the quantities to find the result."}},
                {"final_answer", h % 1000}}
        .dump();
  }
  if (task == "diagnose") {
    std::size_t steps = 0;
    for (std::size_t pos = 0; (pos = user.find("\n[", pos)) != std::string::npos; ++pos) ++steps;
    constexpr std::array<FailureCategory, 4> kChoices{
        FailureCategory::ReasoningError, FailureCategory::CalculationError,
        FailureCategory::MisinterpretationError, FailureCategory::FactualInvention};
    return json{{"first_error_step", (h >> 8U) % std::max<std::size_t>(1, steps)},
                {"category", to_string(kChoices[h % kChoices.size()])}}
        .dump();
  }
  return synthesize_label(user);
}

json MockBackend::post(std::string_view path, const json& body, const ModelEndpointConfig& config) {
  const std::string model = body.value("model", config.model_name);
  if (path == "/chat/completions") {
    const std::string content = chat_reply(body.at("messages"));
    std::int64_t prompt_tokens = 0;
    for (const auto& m : body["messages"]) prompt_tokens += word_count(m.at("content").get<std::string>());
    const std::int64_t completion_tokens = word_count(content);
    return json{{"id", fmt::format("mock-{:016x}", fnv1a64(body.dump()))},
                {"object", "chat.completion"},
                {"model", model},
                {"choices", json::array({json{{"index", 0},
                                              {"message", json{{"role", "assistant"}, {"content", content}}},
                                              {"finish_reason", "stop"}}})},
                {"usage", json{{"prompt_tokens", prompt_tokens},
                               {"completion_tokens", completion_tokens},
                               {"total_tokens", prompt_tokens + completion_tokens}}}};
  }
  if (path == "/embeddings") {
    const auto dim = body.value("dimensions", kDefaultDimension);
    json data = json::array();
    std::int64_t tokens = 0;
    const auto& input = body.at("input");
    for (std::size_t i = 0; i < input.size(); ++i) {
      const auto text = input[i].get<std::string>();
      tokens += word_count(text);
      data.push_back(json{{"object", "embedding"}, {"index", i}, {"embedding", embed_text(text, dim)}});
    }
    return json{{"object", "list"},
                {"data", data},
                {"model", model},
                {"usage", json{{"prompt_tokens", tokens}, {"total_tokens", tokens}}}};
  }
  throw ApiError("mock backend: unsupported path " + std::string(path));
}

}  // namespace reasonprobe
