#include "reasonprobe/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>

#include "reasonprobe/diagnosis.hpp"
#include "reasonprobe/digest.hpp"
#include "reasonprobe/prompts.hpp"

namespace reasonprobe {

json chat_request_body(const ModelEndpointConfig& config, const ChatRequest& request) {
  if (request.messages.empty()) throw std::invalid_argument("chat request has no messages");
  if (request.messages.front().role != "system")
    throw std::invalid_argument("chat request must start with a system message");
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back(json{{"role", m.role}, {"content", m.content}});
  json body{{"model", config.model_name}, {"messages", messages}, {"temperature", config.temperature}};
  if (request.json_response) body["response_format"] = json{{"type", "json_object"}};
  return body;
}

json embedding_request_body(const ModelEndpointConfig& config, const std::vector<std::string>& texts) {
  json body{{"model", config.model_name}, {"input", texts}};
  if (config.dimensions) body["dimensions"] = *config.dimensions;
  return body;
}

std::string cache_key(std::string_view model_name, const json& body) {
  return sha256_hex(std::string(model_name) + "\n" + body.dump());
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<json> ResponseCache::get(const std::string& key) const {
  const auto path = path_for(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    return json::parse(read_file(path));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, const json& response) {
  const auto stripe = static_cast<std::size_t>(fnv1a64(key) % stripes_.size());
  std::lock_guard lock(stripes_[stripe]);
  write_file_atomic(path_for(key), response.dump());
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double requests_per_minute, double burst, NowFn now, SleepFn sleep)
    : rate_per_second_(requests_per_minute / 60.0),
      burst_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      now_(std::move(now)),
      sleep_(std::move(sleep)) {
  if (!(requests_per_minute > 0.0)) throw std::invalid_argument("rate limit must be positive");
  last_ = now_();
}

void RateLimiter::acquire() {
  for (;;) {
    Clock::duration wait{};
    {
      std::lock_guard lock(mutex_);
      const auto now = now_();
      const double elapsed = std::chrono::duration<double>(now - last_).count();
      tokens_ = std::min(burst_, tokens_ + elapsed * rate_per_second_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration_cast<Clock::duration>(
          std::chrono::duration<double>((1.0 - tokens_) / rate_per_second_));
    }
    sleep_(wait);
  }
}

// ---------------------------------------------------------------------------

Gateway::Gateway(Options options) : options_(std::move(options)) {
  if (options_.cache_dir) cache_.emplace(*options_.cache_dir);
}

void Gateway::register_backend(const std::string& base_url, std::shared_ptr<Backend> backend) {
  std::lock_guard lock(backends_mutex_);
  backends_[base_url] = std::move(backend);
}

Backend& Gateway::backend_for(const std::string& base_url) {
  std::lock_guard lock(backends_mutex_);
  auto it = backends_.find(base_url);
  if (it != backends_.end()) return *it->second;
  std::shared_ptr<Backend> backend;
  if (base_url == kMockBaseUrl) {
    backend = std::make_shared<MockBackend>(options_.mock_seed, options_.mock_rules);
  } else if (base_url.starts_with("http://") || base_url.starts_with("https://")) {
    const char* key = std::getenv(std::string(kApiKeyEnv).c_str());
    if (key == nullptr || *key == '\0')
      throw FatalApiError(fmt::format("{} is not set; required for {}", kApiKeyEnv, base_url));
    backend = std::make_shared<HttpBackend>(base_url, key);
  } else {
    throw ApiError("unsupported base_url '" + base_url + "' (expected http(s)://... or mock:)");
  }
  return *backends_.emplace(base_url, std::move(backend)).first->second;
}

RateLimiter& Gateway::limiter_for(const ModelEndpointConfig& config) {
  std::lock_guard lock(backends_mutex_);
  auto& slot = limiters_[config.base_url + "|" + config.model_name];
  if (!slot) {
    // Ten seconds' worth of requests may go out back to back.
    slot = std::make_unique<RateLimiter>(config.rate_limit_rpm, config.rate_limit_rpm / 6.0);
  }
  return *slot;
}

json Gateway::send(const ModelEndpointConfig& config, std::string_view path, const json& body) {
  if (config.max_retries < 1) throw std::invalid_argument("max_retries must be at least 1");
  Backend& backend = backend_for(config.base_url);
  for (int attempt = 1;; ++attempt) {
    if (backend.is_remote()) limiter_for(config).acquire();
    ++backend_calls_;
    if (backend.is_remote()) ++network_requests_;
    try {
      return backend.post(path, body, config);
    } catch (const TransportError& e) {
      if (attempt >= config.max_retries)
        throw TransportError(fmt::format("{}{} failed after {} attempt(s): {}", config.base_url, path,
                                         attempt, e.what()));
      std::this_thread::sleep_for(options_.backoff_base * (1 << std::min(attempt - 1, 6)));
    }
  }
}

ChatResponse Gateway::chat(const ModelEndpointConfig& config, const ChatRequest& request) {
  const json body = chat_request_body(config, request);
  const std::string key = cache_key(config.model_name, body);

  auto parse = [](const json& resp) {
    ChatResponse out;
    try {
      const auto& choice = resp.at("choices").at(0);
      const auto& content = choice.at("message").at("content");
      out.content = content.is_null() ? "" : content.get<std::string>();
      out.finish_reason = choice.value("finish_reason", "");
      if (resp.contains("usage") && resp["usage"].is_object()) {
        const auto& u = resp["usage"];
        out.usage = {u.value("prompt_tokens", std::int64_t{0}), u.value("completion_tokens", std::int64_t{0}),
                     u.value("total_tokens", std::int64_t{0})};
      }
    } catch (const json::exception& e) {
      throw ApiError(std::string("malformed chat completion payload: ") + e.what());
    }
    return out;
  };

  if (cache_) {
    if (auto hit = cache_->get(key)) {
      ++cache_hits_;
      return parse(*hit);
    }
  }
  const json resp = send(config, "/chat/completions", body);
  ChatResponse out = parse(resp);
  if (cache_) cache_->put(key, resp);
  return out;
}

std::vector<std::vector<double>> Gateway::embed(const ModelEndpointConfig& config,
                                                const std::vector<std::string>& texts) {
  if (config.batch_size == 0) throw std::invalid_argument("embedding batch size must be positive");
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  std::optional<std::size_t> dim;
  for (std::size_t start = 0; start < texts.size(); start += config.batch_size) {
    const std::size_t end = std::min(texts.size(), start + config.batch_size);
    const std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                         texts.begin() + static_cast<std::ptrdiff_t>(end));
    const json body = embedding_request_body(config, batch);
    const std::string key = cache_key(config.model_name, body);

    auto parse = [&](const json& resp) {
      std::vector<std::vector<double>> vectors(batch.size());
      std::vector<bool> seen(batch.size(), false);
      try {
        for (const auto& item : resp.at("data")) {
          const auto idx = item.at("index").get<std::size_t>();
          if (idx >= batch.size() || seen[idx]) throw ApiError("embedding response has a bad index");
          seen[idx] = true;
          vectors[idx] = item.at("embedding").get<std::vector<double>>();
        }
      } catch (const json::exception& e) {
        throw ApiError(std::string("malformed embedding payload: ") + e.what());
      }
      if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ApiError("embedding response is missing vectors");
      return vectors;
    };

    std::vector<std::vector<double>> vectors;
    bool from_cache = false;
    if (cache_) {
      if (auto hit = cache_->get(key)) {
        vectors = parse(*hit);
        from_cache = true;
        ++cache_hits_;
      }
    }
    if (!from_cache) {
      const json resp = send(config, "/embeddings", body);
      vectors = parse(resp);
      if (cache_) cache_->put(key, resp);
    }
    for (auto& v : vectors) {
      if (!dim) dim = v.size();
      if (v.size() != *dim)
        throw FatalApiError(fmt::format("embedding dimension changed within the run ({} vs {})", v.size(), *dim));
      out.push_back(std::move(v));
    }
  }
  return out;
}

GatewayStats Gateway::stats() const {
  return {backend_calls_.load(), network_requests_.load(), cache_hits_.load()};
}

// ---------------------------------------------------------------------------

StructuredReply chat_structured(Gateway& gateway, const ModelEndpointConfig& config,
                                std::vector<ChatMessage> messages, const ReplyValidator& validate) {
  ChatResponse first = gateway.chat(config, ChatRequest{messages, true});
  auto error = validate(first.content);
  if (!error) return {first.content, true, {}};

  messages.push_back({"assistant", first.content});
  messages.push_back({"user", prompts::render(prompts::repair(), {{"error", *error}})});
  ChatResponse second = gateway.chat(config, ChatRequest{messages, true});
  error = validate(second.content);
  return {second.content, !error.has_value(), error.value_or("")};
}

ReasoningTrace generate_trace(Gateway& gateway, const Problem& problem, const ModelEndpointConfig& config) {
  const auto tmpl = prompts::generator();
  std::vector<ChatMessage> messages{
      {"system", std::string(tmpl.system)},
      {"user", prompts::render(tmpl.user, {{"question", problem.question}})}};
  const auto reply = chat_structured(gateway, config, std::move(messages),
                                     [](std::string_view text) -> std::optional<std::string> {
                                       auto parsed = parse_solution(text);
                                       if (parsed.solution) return std::nullopt;
                                       return parsed.error;
                                     });
  ReasoningTrace trace;
  trace.problem_id = problem.id;
  trace.raw_response = reply.text;
  if (reply.valid) {
    auto parsed = parse_solution(reply.text);
    trace.steps = std::move(parsed.solution->steps);
    trace.final_answer = parsed.solution->final_answer;
    verify_trace(trace, problem.gold_answer);
  } else {
    trace.outcome = Outcome::Malformed;
  }
  return trace;
}

std::string diagnose_failure(Gateway& gateway, const Problem& problem, const ReasoningTrace& trace,
                             const ModelEndpointConfig& config) {
  if (trace.outcome != Outcome::Incorrect)
    throw std::invalid_argument("diagnose_failure: trace " + trace.problem_id + " is not Incorrect");
  std::string steps;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) steps += fmt::format("[{}] {}\n", i, trace.steps[i]);
  if (!steps.empty()) steps.pop_back();
  const auto tmpl = prompts::diagnosis();
  std::vector<ChatMessage> messages{
      {"system", std::string(tmpl.system)},
      {"user", prompts::render(tmpl.user, {{"question", problem.question},
                                           {"gold_answer", problem.gold_answer.to_string()},
                                           {"steps", steps},
                                           {"final_answer", trace.final_answer ? trace.final_answer->to_string()
                                                                               : std::string("(none)")}})}};
  const std::size_t step_count = trace.steps.size();
  return chat_structured(gateway, config, std::move(messages),
                         [step_count](std::string_view text) { return validate_diagnosis(text, step_count); })
      .text;
}

std::vector<std::vector<double>> embed_sentences(Gateway& gateway, const std::vector<std::string>& texts,
                                                 const ModelEndpointConfig& config) {
  for (std::size_t i = 0; i < texts.size(); ++i)
    if (trim(texts[i]).empty()) throw std::invalid_argument(fmt::format("embed_sentences: text {} is empty", i));
  return gateway.embed(config, texts);
}

std::string clean_label(std::string_view reply, int cluster_id) {
  std::string_view line;
  std::size_t pos = 0;
  while (pos <= reply.size()) {
    auto end = reply.find('\n', pos);
    if (end == std::string_view::npos) end = reply.size();
    line = trim(reply.substr(pos, end - pos));
    if (!line.empty()) break;
    pos = end + 1;
  }
  auto strip = [](std::string_view s) {
    constexpr std::string_view junk = "\"'`*.,;:!? \t";
    const auto b = s.find_first_not_of(junk);
    if (b == std::string_view::npos) return std::string_view{};
    const auto e = s.find_last_not_of(junk);
    return s.substr(b, e - b + 1);
  };
  line = strip(line);
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) words.push_back(line.substr(start, i - start));
  }
  if (words.size() > kMaxLabelWords) words.resize(kMaxLabelWords);
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out.append(w);
  }
  out = std::string(strip(out));
  return out.empty() ? fmt::format("cluster-{}", cluster_id) : out;
}

std::string label_cluster(Gateway& gateway, const std::vector<std::string>& sample_sentences, int cluster_id,
                          const ModelEndpointConfig& config) {
  if (sample_sentences.empty() || sample_sentences.size() > 15)
    throw std::invalid_argument("label_cluster: sample must hold 1 to 15 sentences");
  std::string lines;
  for (const auto& s : sample_sentences) lines += "- " + s + "\n";
  if (!lines.empty()) lines.pop_back();
  const auto tmpl = prompts::labeler();
  ChatRequest request{{{"system", std::string(tmpl.system)},
                       {"user", prompts::render(tmpl.user, {{"sentences", lines}})}},
                      false};
  return clean_label(gateway.chat(config, request).content, cluster_id);
}

}  // namespace reasonprobe
