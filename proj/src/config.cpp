#include <set>

#include <fmt/format.h>

#include "reasonprobe/pipeline.hpp"

namespace reasonprobe {

namespace {

/// Reads known keys from one JSON object and remembers which were consumed,
/// so that leftovers can be reported as unknown fields.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string prefix, std::vector<std::string>& errors)
      : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {
    if (!obj_.is_object()) error("", "must be a JSON object");
  }

  ~ObjectReader() {
    if (!obj_.is_object()) return;
    for (const auto& [key, _] : obj_.items())
      if (seen_.count(key) == 0) error(key, "unknown field");
  }

  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  const json* find(const std::string& key) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return nullptr;
    return &obj_[key];
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (v->is_string()) out = v->get<std::string>();
      else error(key, "must be a string");
    }
  }

  void path(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    if (const json* v = find(key)) {
      if (!v->is_string()) return error(key, "must be a string path");
      s = v->get<std::string>();
      out = std::filesystem::path(s).is_absolute() ? std::filesystem::path(s) : base / s;
    }
  }

  void optional_path(const std::string& key, std::optional<std::filesystem::path>& out,
                     const std::filesystem::path& base) {
    if (const json* v = find(key); v != nullptr && !v->is_null()) {
      std::filesystem::path p;
      seen_.erase(key);
      path(key, p, base);
      seen_.insert(key);
      out = p;
    }
  }

  template <typename T>
  void unsigned_int(const std::string& key, T& out, std::uint64_t min_value = 0) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0))
        return error(key, "must be a non-negative integer");
      const auto u = v->get<std::uint64_t>();
      if (u < min_value) return error(key, fmt::format("must be at least {}", min_value));
      out = static_cast<T>(u);
    }
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (v->is_number()) out = v->get<double>();
      else error(key, "must be a number");
    }
  }

  void error(const std::string& key, const std::string& message) {
    const std::string field = key.empty() ? prefix_ : (prefix_.empty() ? key : prefix_ + "." + key);
    errors_.push_back(fmt::format("{}: {}", field.empty() ? "<root>" : field, message));
  }

  std::string child_prefix(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void read_endpoint(ObjectReader& parent, const std::string& key, ModelEndpointConfig& ep, bool embedding,
                   std::vector<std::string>& errors) {
  const json* v = parent.find(key);
  if (v == nullptr) return;
  ObjectReader r(*v, parent.child_prefix(key), errors);
  r.string("base_url", ep.base_url);
  r.string("model", ep.model_name);
  r.number("temperature", ep.temperature);
  r.number("timeout_seconds", ep.timeout_seconds);
  int retries = ep.max_retries;
  r.unsigned_int("max_retries", retries);
  ep.max_retries = retries;
  r.number("rate_limit_rpm", ep.rate_limit_rpm);
  if (embedding) {
    r.unsigned_int("batch_size", ep.batch_size);
    if (const json* d = r.find("dimensions"); d != nullptr && !d->is_null()) {
      if (d->is_number_unsigned() && d->get<std::uint64_t>() > 0) ep.dimensions = d->get<std::size_t>();
      else r.error("dimensions", "must be a positive integer or null");
    }
  }
}

void check_endpoint(const ModelEndpointConfig& ep, const std::string& name, std::vector<std::string>& errors) {
  if (ep.temperature != 0.0)
    errors.push_back(fmt::format("{}.temperature: must be 0.0; pipeline runs require deterministic outputs (got {})",
                                 name, ep.temperature));
  if (ep.max_retries < 1) errors.push_back(name + ".max_retries: must be at least 1");
  if (!(ep.timeout_seconds > 0.0)) errors.push_back(name + ".timeout_seconds: must be positive");
  if (!(ep.rate_limit_rpm > 0.0)) errors.push_back(name + ".rate_limit_rpm: must be positive");
  if (ep.model_name.empty()) errors.push_back(name + ".model: must not be empty");
  if (ep.base_url != kMockBaseUrl && !ep.base_url.starts_with("http://") && !ep.base_url.starts_with("https://"))
    errors.push_back(name + ".base_url: must be http(s)://... or \"mock:\"");
  if (ep.batch_size == 0) errors.push_back(name + ".batch_size: must be positive");
}

void collect_invariant_errors(const RunConfig& c, std::vector<std::string>& errors) {
  check_endpoint(c.generator, "generator", errors);
  check_endpoint(c.analyst, "analyst", errors);
  check_endpoint(c.embedding, "embedding", errors);
  if (c.sample_size == 0) errors.emplace_back("sample_size: must be positive");
  if (c.min_cluster_size < 2) errors.emplace_back("hdbscan.min_cluster_size: must be at least 2");
  if (c.min_samples && *c.min_samples < 1) errors.emplace_back("hdbscan.min_samples: must be at least 1");
  if (c.fixed_rate && !(*c.fixed_rate >= 0.0 && *c.fixed_rate <= 1.0))
    errors.emplace_back("fixed_rate: must lie in [0, 1]");
  if (c.max_in_flight == 0) errors.emplace_back("max_in_flight: must be positive");
}

[[noreturn]] void throw_errors(const std::vector<std::string>& errors) {
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ConfigError(msg);
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.generator.base_url = "https://api.openai.com/v1";
  c.generator.model_name = "gpt-3.5-turbo-1106";
  c.analyst.base_url = "https://api.openai.com/v1";
  c.analyst.model_name = "gpt-4o-mini";
  c.embedding.base_url = "https://api.openai.com/v1";
  c.embedding.model_name = "text-embedding-3-large";
  return c;
}

RunConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  RunConfig c = default_config();
  std::vector<std::string> errors;
  {
    ObjectReader r(doc, "", errors);
    r.path("corpus", c.corpus, base_dir);
    r.unsigned_int("sample_size", c.sample_size);
    r.unsigned_int("seed", c.seed);
    r.unsigned_int("run_seed", c.run_seed);
    read_endpoint(r, "generator", c.generator, false, errors);
    read_endpoint(r, "analyst", c.analyst, false, errors);
    read_endpoint(r, "embedding", c.embedding, true, errors);
    r.unsigned_int("mock_seed", c.mock_seed);
    r.optional_path("mock_script", c.mock_script, base_dir);
    if (const json* h = r.find("hdbscan")) {
      ObjectReader hr(*h, "hdbscan", errors);
      hr.unsigned_int("min_cluster_size", c.min_cluster_size);
      if (const json* ms = hr.find("min_samples"); ms != nullptr && !ms->is_null()) {
        std::size_t v = 0;
        if (ms->is_number_unsigned()) {
          v = ms->get<std::size_t>();
          c.min_samples = v;
        } else {
          hr.error("min_samples", "must be a positive integer");
        }
      }
    }
    std::string baseline(stats::to_string(c.baseline));
    r.string("baseline", baseline);
    try {
      c.baseline = stats::baseline_from_string(baseline);
    } catch (const std::invalid_argument& e) {
      r.error("baseline", e.what());
    }
    if (const json* fr = r.find("fixed_rate"); fr != nullptr && !fr->is_null()) {
      if (fr->is_number()) c.fixed_rate = fr->get<double>();
      else r.error("fixed_rate", "must be a number or null");
    }
    r.optional_path("cache_dir", c.cache_dir, base_dir);
    r.path("out_dir", c.out_dir, base_dir);
    r.unsigned_int("max_in_flight", c.max_in_flight);
    if (const json* rep = r.find("report")) {
      ObjectReader rr(*rep, "report", errors);
      rr.unsigned_int("top_k", c.top_k);
      rr.unsigned_int("bottom_k", c.bottom_k);
    }
  }
  collect_invariant_errors(c, errors);
  if (!errors.empty()) throw_errors(errors);
  return c;
}

RunConfig validate_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": not valid JSON (" + e.what() + ")");
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(doc, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

void check_config(const RunConfig& config) {
  std::vector<std::string> errors;
  collect_invariant_errors(config, errors);
  if (!errors.empty()) throw_errors(errors);
}

void force_offline(RunConfig& config) {
  for (auto* ep : {&config.generator, &config.analyst, &config.embedding}) ep->base_url = kMockBaseUrl;
}

json config_to_json(const RunConfig& c) {
  auto endpoint = [](const ModelEndpointConfig& ep, bool embedding) {
    json j{{"base_url", ep.base_url},
           {"model", ep.model_name},
           {"temperature", ep.temperature},
           {"timeout_seconds", ep.timeout_seconds},
           {"max_retries", ep.max_retries},
           {"rate_limit_rpm", ep.rate_limit_rpm}};
    if (embedding) {
      j["batch_size"] = ep.batch_size;
      j["dimensions"] = ep.dimensions ? json(*ep.dimensions) : json(nullptr);
    }
    return j;
  };
  const auto params = c.hdbscan_params();
  return json{{"corpus", c.corpus.string()},
              {"sample_size", c.sample_size},
              {"seed", c.seed},
              {"run_seed", c.run_seed},
              {"generator", endpoint(c.generator, false)},
              {"analyst", endpoint(c.analyst, false)},
              {"embedding", endpoint(c.embedding, true)},
              {"mock_seed", c.mock_seed},
              {"mock_script", c.mock_script ? json(c.mock_script->string()) : json(nullptr)},
              {"hdbscan", json{{"min_cluster_size", params.min_cluster_size}, {"min_samples", params.min_samples}}},
              {"baseline", stats::to_string(c.baseline)},
              {"fixed_rate", c.fixed_rate ? json(*c.fixed_rate) : json(nullptr)},
              {"cache_dir", c.effective_cache_dir().string()},
              {"out_dir", c.out_dir.string()},
              {"max_in_flight", c.max_in_flight},
              {"report", json{{"top_k", c.top_k}, {"bottom_k", c.bottom_k}}}};
}

}  // namespace reasonprobe
