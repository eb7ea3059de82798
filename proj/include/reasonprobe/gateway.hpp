#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "reasonprobe/corpus.hpp"
#include "reasonprobe/io.hpp"
#include "reasonprobe/trace.hpp"

namespace reasonprobe {

inline constexpr std::string_view kMockBaseUrl = "mock:";
inline constexpr std::string_view kApiKeyEnv = "REASONPROBE_API_KEY";

/// Network-level failure worth retrying (timeouts, 5xx, rate limiting).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Authentication or quota failure; the whole run must stop.
class FatalApiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Request rejected or answered with an unusable payload; not retried.
class ApiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelEndpointConfig {
  std::string base_url{kMockBaseUrl};
  std::string model_name;
  double temperature = 0.0;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  double rate_limit_rpm = 60.0;
  std::size_t batch_size = 512;            // embeddings per request
  std::optional<std::size_t> dimensions;   // requested embedding width

  bool is_mock() const { return base_url == kMockBaseUrl; }
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  bool json_response = true;
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t total_tokens = 0;
};

struct ChatResponse {
  std::string content;
  std::string finish_reason;
  TokenUsage usage;
};

/// OpenAI-compatible request bodies.
json chat_request_body(const ModelEndpointConfig& config, const ChatRequest& request);
json embedding_request_body(const ModelEndpointConfig& config, const std::vector<std::string>& texts);

/// sha256(model_name + "\n" + body with sorted keys).
std::string cache_key(std::string_view model_name, const json& body);

/// Transport for one base URL. `path` is "/chat/completions" or "/embeddings".
class Backend {
 public:
  virtual ~Backend() = default;
  virtual json post(std::string_view path, const json& body, const ModelEndpointConfig& config) = 0;
  /// Whether calls leave the process (and so count as network requests).
  virtual bool is_remote() const = 0;
};

class HttpBackend : public Backend {
 public:
  HttpBackend(std::string base_url, std::string api_key);
  json post(std::string_view path, const json& body, const ModelEndpointConfig& config) override;
  bool is_remote() const override { return true; }

 private:
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::string api_key_;
};

struct MockRule {
  std::string task;   // "generate", "diagnose" or "label"
  std::string match;  // substring of the user message
  std::string response;
  std::optional<std::string> repair_response;
};

/// Offline backend: a pure function of (seed, request body). Scripted rules
/// are consulted first; unmatched requests get deterministic synthetic replies.
class MockBackend : public Backend {
 public:
  static constexpr std::size_t kDefaultDimension = 64;

  explicit MockBackend(std::uint64_t seed, std::vector<MockRule> rules = {});
  json post(std::string_view path, const json& body, const ModelEndpointConfig& config) override;
  bool is_remote() const override { return false; }

  /// Hash-derived unit vector for one text.
  std::vector<double> embed_text(std::string_view text, std::size_t dim) const;

  static std::vector<MockRule> load_script(const std::filesystem::path& path);

 private:
  std::string chat_reply(const json& messages) const;

  std::uint64_t seed_;
  std::map<std::string, std::vector<MockRule>> rules_by_task_;
};

/// Content-addressed response store: <dir>/<key[0:2]>/<key>.json.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);
  std::optional<json> get(const std::string& key) const;
  void put(const std::string& key, const json& response);

 private:
  std::filesystem::path path_for(const std::string& key) const;

  std::filesystem::path dir_;
  mutable std::array<std::mutex, 64> stripes_;
};

/// Client-side token bucket shared by all callers of one endpoint.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;
  using NowFn = std::function<Clock::time_point()>;
  using SleepFn = std::function<void(Clock::duration)>;

  RateLimiter(double requests_per_minute, double burst, NowFn now = Clock::now,
              SleepFn sleep = [](Clock::duration d) { std::this_thread::sleep_for(d); });

  void acquire();

 private:
  double rate_per_second_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
  NowFn now_;
  SleepFn sleep_;
  std::mutex mutex_;
};

struct GatewayStats {
  std::size_t backend_calls = 0;
  std::size_t network_requests = 0;
  std::size_t cache_hits = 0;
};

class Gateway {
 public:
  struct Options {
    std::optional<std::filesystem::path> cache_dir;
    std::uint64_t mock_seed = 0;
    std::vector<MockRule> mock_rules;
    std::chrono::milliseconds backoff_base{500};
  };

  explicit Gateway(Options options);

  /// Routes `base_url` to a specific backend (tests, local servers).
  void register_backend(const std::string& base_url, std::shared_ptr<Backend> backend);

  ChatResponse chat(const ModelEndpointConfig& config, const ChatRequest& request);

  /// One vector per text, in order, batched by config.batch_size.
  std::vector<std::vector<double>> embed(const ModelEndpointConfig& config,
                                         const std::vector<std::string>& texts);

  GatewayStats stats() const;

 private:
  json send(const ModelEndpointConfig& config, std::string_view path, const json& body);
  Backend& backend_for(const std::string& base_url);
  RateLimiter& limiter_for(const ModelEndpointConfig& config);

  Options options_;
  std::optional<ResponseCache> cache_;
  std::mutex backends_mutex_;
  std::map<std::string, std::shared_ptr<Backend>> backends_;
  std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> network_requests_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

/// Reply to a structured request after at most one repair round.
struct StructuredReply {
  std::string text;
  bool valid = false;
  std::string error;
};

using ReplyValidator = std::function<std::optional<std::string>(std::string_view reply)>;

StructuredReply chat_structured(Gateway& gateway, const ModelEndpointConfig& config,
                                std::vector<ChatMessage> messages, const ReplyValidator& validate);

/// Elicits a JSON solution and verifies it against the problem's gold answer.
/// Two invalid replies yield a Malformed trace carrying the last raw reply.
ReasoningTrace generate_trace(Gateway& gateway, const Problem& problem, const ModelEndpointConfig& config);

/// Raw analyst reply for an Incorrect trace.
std::string diagnose_failure(Gateway& gateway, const Problem& problem, const ReasoningTrace& trace,
                             const ModelEndpointConfig& config);

std::vector<std::vector<double>> embed_sentences(Gateway& gateway, const std::vector<std::string>& texts,
                                                 const ModelEndpointConfig& config);

inline constexpr std::size_t kMaxLabelWords = 8;

/// Label of at most 8 words, trailing punctuation stripped; "cluster-{id}"
/// when nothing usable comes back.
std::string label_cluster(Gateway& gateway, const std::vector<std::string>& sample_sentences,
                          int cluster_id, const ModelEndpointConfig& config);

/// Post-processing applied to labeler replies.
std::string clean_label(std::string_view reply, int cluster_id);

}  // namespace reasonprobe
