#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "reasonprobe/gateway.hpp"
#include "reasonprobe/hdbscan.hpp"
#include "reasonprobe/stats.hpp"

namespace reasonprobe {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure inside one stage; the message is prefixed with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error("[" + stage + "] " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct RunConfig {
  std::filesystem::path corpus;
  std::size_t sample_size = 1000;
  std::uint64_t seed = 42;
  std::uint64_t run_seed = 42;
  ModelEndpointConfig generator;
  ModelEndpointConfig analyst;
  ModelEndpointConfig embedding;
  std::uint64_t mock_seed = 0;
  std::optional<std::filesystem::path> mock_script;
  std::size_t min_cluster_size = 10;
  std::optional<std::size_t> min_samples;  // defaults to min_cluster_size
  stats::BaselineMode baseline = stats::BaselineMode::Complement;
  std::optional<double> fixed_rate;  // defaults to the run's measured accuracy
  std::optional<std::filesystem::path> cache_dir;  // defaults to <out_dir>/cache
  std::filesystem::path out_dir = "reason-probe-out";
  std::size_t max_in_flight = 8;
  std::size_t top_k = 5;
  std::size_t bottom_k = 5;

  hdbscan::Params hdbscan_params() const { return {min_cluster_size, min_samples.value_or(min_cluster_size)}; }
  std::filesystem::path effective_cache_dir() const { return cache_dir.value_or(out_dir / "cache"); }
};

/// Default endpoints: OpenAI models at api.openai.com.
RunConfig default_config();

/// Applies a JSON document over the defaults. Relative paths resolve against
/// `base_dir`. Unknown fields and invariant violations are collected and
/// reported together, each with its field path.
RunConfig config_from_json(const json& doc, const std::filesystem::path& base_dir);
RunConfig validate_config(const std::filesystem::path& path);

/// Re-checks invariants after command-line overrides.
void check_config(const RunConfig& config);

json config_to_json(const RunConfig& config);

/// Forces every endpoint onto the mock backend.
void force_offline(RunConfig& config);

enum class Stage { Sample, Generate, Diagnose, Embed, Cluster, Analyze, Report };

inline constexpr Stage kAllStages[] = {Stage::Sample, Stage::Generate, Stage::Diagnose, Stage::Embed,
                                       Stage::Cluster, Stage::Analyze, Stage::Report};

std::string_view to_string(Stage s);
std::optional<Stage> stage_from_string(std::string_view s);

namespace artifacts {
inline constexpr std::string_view kSample = "sample.jsonl";
inline constexpr std::string_view kTraces = "traces.jsonl";
inline constexpr std::string_view kDiagnoses = "diagnoses.jsonl";
inline constexpr std::string_view kSentences = "sentences.jsonl";
inline constexpr std::string_view kEmbeddings = "embeddings.bin";
inline constexpr std::string_view kClusters = "clusters.json";
inline constexpr std::string_view kModes = "modes.json";
inline constexpr std::string_view kReport = "report.md";
inline constexpr std::string_view kFailuresCsv = "failures.csv";
inline constexpr std::string_view kModesCsv = "modes.csv";
inline constexpr std::string_view kSummary = "summary.json";
inline constexpr std::string_view kManifest = "manifest.json";
inline constexpr std::string_view kEffectiveConfig = "config.json";
}  // namespace artifacts

struct PipelineOptions {
  bool force = false;
  std::function<void(std::string_view)> log;
};

/// Staged, resumable run. Each stage records a digest of its inputs and
/// outputs in manifest.json; a stage is skipped when its outputs are intact
/// and its input digest is unchanged, and re-executed when missing or when an
/// upstream stage ran in the same invocation.
class Pipeline {
 public:
  Pipeline(RunConfig config, PipelineOptions options, std::shared_ptr<Gateway> gateway = nullptr);

  /// Returns true when the stage executed, false when it was cached.
  bool run_stage(Stage stage);

  /// Chains every stage; returns the stages that executed.
  std::vector<Stage> run_all();

  Gateway& gateway() { return *gateway_; }
  const RunConfig& config() const { return config_; }

 private:
  bool run_stage_impl(Stage stage, bool upstream_executed);
  void execute(Stage stage);
  std::string input_digest(Stage stage) const;
  void log(std::string_view message) const;
  std::filesystem::path path(std::string_view artifact) const;

  void do_sample();
  void do_generate();
  void do_diagnose();
  void do_embed();
  void do_cluster();
  void do_analyze();
  void do_report();

  RunConfig config_;
  PipelineOptions options_;
  std::shared_ptr<Gateway> gateway_;
};

}  // namespace reasonprobe
