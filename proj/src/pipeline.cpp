#include "reasonprobe/pipeline.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <unordered_map>

#include <fmt/format.h>

#include "reasonprobe/corpus.hpp"
#include "reasonprobe/diagnosis.hpp"
#include "reasonprobe/digest.hpp"
#include "reasonprobe/embedding.hpp"
#include "reasonprobe/modes.hpp"
#include "reasonprobe/parallel.hpp"
#include "reasonprobe/prompts.hpp"
#include "reasonprobe/report.hpp"

namespace reasonprobe {

namespace fs = std::filesystem;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Sample: return "sample";
    case Stage::Generate: return "generate";
    case Stage::Diagnose: return "diagnose";
    case Stage::Embed: return "embed";
    case Stage::Cluster: return "cluster";
    case Stage::Analyze: return "analyze";
    case Stage::Report: return "report";
  }
  return "?";
}

std::optional<Stage> stage_from_string(std::string_view s) {
  for (Stage st : kAllStages)
    if (to_string(st) == s) return st;
  return std::nullopt;
}

namespace {

struct StageSpec {
  std::vector<Stage> upstream;
  std::vector<std::string_view> inputs;  // artifacts read
  std::vector<std::string_view> outputs;
};

const StageSpec& spec_of(Stage s) {
  using namespace artifacts;
  static const std::map<Stage, StageSpec> specs{
      {Stage::Sample, {{}, {}, {kSample}}},
      {Stage::Generate, {{Stage::Sample}, {kSample}, {kTraces}}},
      {Stage::Diagnose, {{Stage::Sample, Stage::Generate}, {kSample, kTraces}, {kDiagnoses}}},
      {Stage::Embed, {{Stage::Generate}, {kTraces}, {kSentences, kEmbeddings}}},
      {Stage::Cluster, {{Stage::Embed}, {kEmbeddings}, {kClusters}}},
      {Stage::Analyze, {{Stage::Generate, Stage::Embed, Stage::Cluster}, {kTraces, kSentences, kClusters}, {kModes}}},
      {Stage::Report,
       {{Stage::Generate, Stage::Diagnose, Stage::Cluster, Stage::Analyze},
        {kTraces, kDiagnoses, kClusters, kModes},
        {kReport, kFailuresCsv, kModesCsv, kSummary}}},
  };
  return specs.at(s);
}

/// Stage that produces an artifact, for actionable "run X first" messages.
Stage producer_of(std::string_view artifact) {
  for (Stage s : kAllStages)
    for (auto out : spec_of(s).outputs)
      if (out == artifact) return s;
  throw std::logic_error("no producer for artifact");
}

json endpoint_identity(const ModelEndpointConfig& ep) {
  json j{{"base_url", ep.base_url}, {"model", ep.model_name}, {"temperature", ep.temperature}};
  if (ep.dimensions) j["dimensions"] = *ep.dimensions;
  return j;
}

std::shared_ptr<Gateway> make_gateway(const RunConfig& config) {
  Gateway::Options opts;
  opts.cache_dir = config.effective_cache_dir();
  opts.mock_seed = config.mock_seed;
  if (config.mock_script) opts.mock_rules = MockBackend::load_script(*config.mock_script);
  return std::make_shared<Gateway>(std::move(opts));
}

std::string baseline_description(stats::BaselineMode mode, double fixed_rate) {
  if (mode == stats::BaselineMode::Complement) return "all sentences outside the cluster";
  return fmt::format("a fixed baseline correctness rate of {:.1f}%", fixed_rate * 100.0);
}

}  // namespace

Pipeline::Pipeline(RunConfig config, PipelineOptions options, std::shared_ptr<Gateway> gateway)
    : config_(std::move(config)), options_(std::move(options)), gateway_(std::move(gateway)) {
  check_config(config_);
  fs::create_directories(config_.out_dir);
  if (!gateway_) gateway_ = make_gateway(config_);
  write_file_atomic(path(artifacts::kEffectiveConfig), config_to_json(config_).dump(2) + "\n");
}

void Pipeline::log(std::string_view message) const {
  if (options_.log) options_.log(message);
}

fs::path Pipeline::path(std::string_view artifact) const { return config_.out_dir / artifact; }

std::string Pipeline::input_digest(Stage stage) const {
  json parts = json::object();
  for (auto artifact : spec_of(stage).inputs) {
    const fs::path p = path(artifact);
    if (!fs::exists(p))
      throw StageError(std::string(to_string(stage)),
                       fmt::format("missing input {}; run `reason-probe {}` first", artifact,
                                   to_string(producer_of(artifact))));
    parts["artifacts"][std::string(artifact)] = sha256_file(p);
  }
  const std::string mock_script =
      config_.mock_script ? sha256_file(*config_.mock_script) : std::string();
  auto mock = [&] { return json{{"seed", config_.mock_seed}, {"script", mock_script}}; };
  switch (stage) {
    case Stage::Sample:
      parts["corpus"] = sha256_file(config_.corpus);
      parts["sample_size"] = config_.sample_size;
      parts["seed"] = config_.seed;
      break;
    case Stage::Generate:
      parts["generator"] = endpoint_identity(config_.generator);
      parts["template"] = prompts::template_hash(prompts::generator());
      parts["repair"] = prompts::repair_hash();
      parts["mock"] = mock();
      break;
    case Stage::Diagnose:
      parts["analyst"] = endpoint_identity(config_.analyst);
      parts["template"] = prompts::template_hash(prompts::diagnosis());
      parts["repair"] = prompts::repair_hash();
      parts["mock"] = mock();
      break;
    case Stage::Embed:
      parts["embedding"] = endpoint_identity(config_.embedding);
      parts["mock"] = mock();
      break;
    case Stage::Cluster: {
      const auto p = config_.hdbscan_params();
      parts["min_cluster_size"] = p.min_cluster_size;
      parts["min_samples"] = p.min_samples;
      break;
    }
    case Stage::Analyze:
      parts["analyst"] = endpoint_identity(config_.analyst);
      parts["template"] = prompts::template_hash(prompts::labeler());
      parts["baseline"] = stats::to_string(config_.baseline);
      parts["fixed_rate"] = config_.fixed_rate ? json(*config_.fixed_rate) : json(nullptr);
      parts["run_seed"] = config_.run_seed;
      parts["mock"] = mock();
      break;
    case Stage::Report:
      parts["top_k"] = config_.top_k;
      parts["bottom_k"] = config_.bottom_k;
      parts["config"] = config_to_json(config_);
      parts["config"].erase("out_dir");
      parts["config"].erase("cache_dir");
      parts["config"].erase("corpus");
      parts["config"].erase("mock_script");
      break;
  }
  return sha256_hex(parts.dump());
}

namespace {

json load_manifest(const fs::path& p) {
  if (!fs::exists(p)) return json{{"stages", json::object()}};
  try {
    json doc = json::parse(read_file(p));
    if (doc.is_object() && doc.contains("stages") && doc["stages"].is_object()) return doc;
  } catch (const json::exception&) {
  }
  return json{{"stages", json::object()}};
}

}  // namespace

bool Pipeline::run_stage(Stage stage) { return run_stage_impl(stage, false); }

bool Pipeline::run_stage_impl(Stage stage, bool upstream_executed) {
  const std::string name(to_string(stage));
  const std::string digest = input_digest(stage);
  const fs::path manifest_path = path(artifacts::kManifest);
  json manifest = load_manifest(manifest_path);
  const json* entry = manifest["stages"].contains(name) ? &manifest["stages"][name] : nullptr;

  bool outputs_intact = entry != nullptr;
  if (entry != nullptr) {
    for (auto artifact : spec_of(stage).outputs) {
      const fs::path p = path(artifact);
      const std::string key(artifact);
      if (!fs::exists(p) || !(*entry)["outputs"].contains(key) ||
          (*entry)["outputs"][key] != sha256_file(p)) {
        outputs_intact = false;
        break;
      }
    }
  }

  std::string reason;
  if (upstream_executed) {
    reason = "upstream stage re-executed";
  } else if (!outputs_intact) {
    reason = entry == nullptr ? "no prior run" : "outputs missing or modified";
  } else if ((*entry)["input_digest"] != digest) {
    if (!options_.force)
      throw StageError(name,
                       "configuration or input artifacts differ from the recorded run; "
                       "re-run with --force to overwrite");
    reason = "inputs changed (--force)";
  } else {
    log(fmt::format("[{}] cached", name));
    return false;
  }

  log(fmt::format("[{}] running ({})", name, reason));
  try {
    execute(stage);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }

  json outputs = json::object();
  for (auto artifact : spec_of(stage).outputs) outputs[std::string(artifact)] = sha256_file(path(artifact));
  manifest = load_manifest(manifest_path);
  manifest["stages"][name] = json{{"input_digest", digest}, {"outputs", outputs}};
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
  return true;
}

std::vector<Stage> Pipeline::run_all() {
  std::vector<Stage> executed;
  for (Stage stage : kAllStages) {
    const auto& ups = spec_of(stage).upstream;
    const bool upstream = std::any_of(ups.begin(), ups.end(), [&](Stage u) {
      return std::find(executed.begin(), executed.end(), u) != executed.end();
    });
    if (run_stage_impl(stage, upstream)) executed.push_back(stage);
  }
  return executed;
}

void Pipeline::execute(Stage stage) {
  switch (stage) {
    case Stage::Sample: return do_sample();
    case Stage::Generate: return do_generate();
    case Stage::Diagnose: return do_diagnose();
    case Stage::Embed: return do_embed();
    case Stage::Cluster: return do_cluster();
    case Stage::Analyze: return do_analyze();
    case Stage::Report: return do_report();
  }
}

void Pipeline::do_sample() {
  const auto problems = load_corpus(config_.corpus);
  const auto sample = sample_corpus(problems, config_.sample_size, config_.seed);
  write_file_atomic(path(artifacts::kSample), serialize_sample(sample));
  log(fmt::format("[sample] {} of {} problems (seed {})", sample.problems.size(), problems.size(), config_.seed));
}

void Pipeline::do_generate() {
  const auto problems = read_sample(path(artifacts::kSample));
  std::vector<ReasoningTrace> traces(problems.size());
  parallel_for(problems.size(), config_.max_in_flight, [&](std::size_t i) {
    try {
      traces[i] = generate_trace(*gateway_, problems[i], config_.generator);
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("problem {}: {}", problems[i].id, e.what()));
    }
  });
  write_file_atomic(path(artifacts::kTraces), serialize_traces(traces));
  std::size_t correct = 0, malformed = 0;
  for (const auto& t : traces) {
    correct += t.outcome == Outcome::Correct;
    malformed += t.outcome == Outcome::Malformed;
  }
  log(fmt::format("[generate] {} traces: {} correct, {} malformed", traces.size(), correct, malformed));
}

void Pipeline::do_diagnose() {
  const auto problems = read_sample(path(artifacts::kSample));
  const auto traces = read_traces(path(artifacts::kTraces));
  std::unordered_map<std::string, const Problem*> by_id;
  for (const auto& p : problems) by_id.emplace(p.id, &p);

  std::vector<const ReasoningTrace*> failed;
  for (const auto& t : traces)
    if (t.outcome == Outcome::Incorrect) failed.push_back(&t);

  std::vector<FailureDiagnosis> diagnoses(failed.size());
  parallel_for(failed.size(), config_.max_in_flight, [&](std::size_t i) {
    const ReasoningTrace& trace = *failed[i];
    const auto it = by_id.find(trace.problem_id);
    if (it == by_id.end()) throw std::runtime_error("trace for unknown problem " + trace.problem_id);
    try {
      const std::string reply = diagnose_failure(*gateway_, *it->second, trace, config_.analyst);
      diagnoses[i] = parse_diagnosis(reply, trace);
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("problem {}: {}", trace.problem_id, e.what()));
    }
  });
  write_file_atomic(path(artifacts::kDiagnoses), serialize_diagnoses(diagnoses));
  log(fmt::format("[diagnose] {} incorrect traces diagnosed", diagnoses.size()));
}

void Pipeline::do_embed() {
  const auto traces = read_traces(path(artifacts::kTraces));
  std::vector<SentenceRecord> sentences;
  for (const auto& t : traces) {
    if (t.outcome == Outcome::Malformed) continue;
    auto s = segment_sentences(t);
    sentences.insert(sentences.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  std::vector<std::string> texts, ids;
  texts.reserve(sentences.size());
  ids.reserve(sentences.size());
  for (const auto& s : sentences) {
    texts.push_back(s.text);
    ids.push_back(s.sentence_id);
  }
  const auto vectors = texts.empty() ? std::vector<std::vector<double>>{}
                                     : embed_sentences(*gateway_, texts, config_.embedding);
  EmbeddingMatrix matrix = EmbeddingMatrix::from_rows(vectors, std::move(ids));
  if (matrix.n == 0 && config_.embedding.dimensions) matrix.dim = *config_.embedding.dimensions;
  matrix = l2_normalize(std::move(matrix));
  write_file_atomic(path(artifacts::kSentences), serialize_sentences(sentences));
  write_embeddings(path(artifacts::kEmbeddings), matrix);
  log(fmt::format("[embed] {} sentences at dimension {}", matrix.n, matrix.dim));
}

void Pipeline::do_cluster() {
  // Stored as float32; renormalize in double before measuring distances.
  EmbeddingMatrix matrix = l2_normalize(read_embeddings(path(artifacts::kEmbeddings), config_.embedding.dimensions));
  const auto compact = drop_zero_rows(matrix);
  const auto params = config_.hdbscan_params();
  const auto assignment = hdbscan::run_hdbscan(view_of(compact.matrix), params);

  std::vector<int> labels(matrix.n, -1);
  for (std::size_t i = 0; i < compact.original_index.size(); ++i) labels[compact.original_index[i]] = assignment.labels[i];
  std::vector<std::string> excluded;
  for (std::size_t i = 0; i < matrix.n; ++i)
    if (matrix.zero_rows[i]) excluded.push_back(matrix.sentence_ids[i]);

  std::size_t noise = 0;
  for (int l : labels) noise += l < 0;
  const json doc{{"params", json{{"min_cluster_size", params.min_cluster_size}, {"min_samples", params.min_samples}}},
                 {"cluster_count", assignment.cluster_count()},
                 {"noise_count", noise},
                 {"stabilities", assignment.stabilities},
                 {"excluded_ids", excluded},
                 {"sentence_ids", matrix.sentence_ids},
                 {"labels", labels}};
  write_file_atomic(path(artifacts::kClusters), doc.dump() + "\n");
  log(fmt::format("[cluster] {} clusters, {} noise of {} sentences", assignment.cluster_count(), noise, matrix.n));
}

namespace {

double measured_accuracy(const std::vector<ReasoningTrace>& traces) {
  if (traces.empty()) return 0.0;
  const auto correct = std::count_if(traces.begin(), traces.end(),
                                     [](const ReasoningTrace& t) { return t.outcome == Outcome::Correct; });
  return static_cast<double>(correct) / static_cast<double>(traces.size());
}

}  // namespace

void Pipeline::do_analyze() {
  const json clusters = json::parse(read_file(path(artifacts::kClusters)));
  const auto sentences = read_sentences(path(artifacts::kSentences));
  const auto ids = clusters.at("sentence_ids").get<std::vector<std::string>>();
  const auto labels = clusters.at("labels").get<std::vector<int>>();
  if (ids.size() != labels.size() || ids.size() != sentences.size())
    throw std::runtime_error("clusters.json does not match sentences.jsonl; re-run `reason-probe cluster`");
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] != sentences[i].sentence_id)
      throw std::runtime_error("sentence order mismatch at " + ids[i] + "; re-run `reason-probe embed`");

  hdbscan::ClusterAssignment assignment;
  assignment.labels = labels;
  assignment.stabilities = clusters.at("stabilities").get<std::vector<double>>();

  ModeAnalysisOptions opts;
  opts.baseline = config_.baseline;
  opts.run_seed = config_.run_seed;
  opts.max_in_flight = config_.max_in_flight;
  opts.fixed_rate = config_.fixed_rate ? *config_.fixed_rate : measured_accuracy(read_traces(path(artifacts::kTraces)));

  const ClusterLabeler labeler = [&](const std::vector<std::string>& sample, int cluster_id) {
    return label_cluster(*gateway_, sample, cluster_id, config_.analyst);
  };
  const ModeTable table = build_mode_table(assignment, sentences, labeler, opts);
  write_file_atomic(path(artifacts::kModes), mode_table_to_json(table, opts).dump(2) + "\n");
  std::size_t significant = 0;
  for (const auto& r : table.reports) significant += r.significant;
  log(fmt::format("[analyze] {} clusters, {} significant", table.reports.size(), significant));
}

void Pipeline::do_report() {
  const auto traces = read_traces(path(artifacts::kTraces));
  const auto diagnoses = read_diagnoses(path(artifacts::kDiagnoses));
  const json modes_doc = json::parse(read_file(path(artifacts::kModes)));
  const json clusters = json::parse(read_file(path(artifacts::kClusters)));

  RunReport report;
  report.accuracy.n_total = static_cast<std::int64_t>(traces.size());
  for (const auto& t : traces) {
    report.accuracy.n_correct += t.outcome == Outcome::Correct;
    report.accuracy.n_malformed += t.outcome == Outcome::Malformed;
  }
  report.failures = failure_distribution(diagnoses);
  report.modes = mode_table_from_json(modes_doc);
  const auto baseline = stats::baseline_from_string(modes_doc.at("baseline").get<std::string>());
  report.baseline_description = baseline_description(baseline, modes_doc.at("fixed_rate").get<double>());

  const auto params = config_.hdbscan_params();
  auto& m = report.metadata;
  m.emplace_back("sample", fmt::format("{} problems, seed {}", config_.sample_size, config_.seed));
  m.emplace_back("run seed", std::to_string(config_.run_seed));
  m.emplace_back("generator", config_.generator.model_name);
  m.emplace_back("analyst", config_.analyst.model_name);
  m.emplace_back("embedding", config_.embedding.model_name);
  const bool offline = config_.generator.is_mock() && config_.analyst.is_mock() && config_.embedding.is_mock();
  m.emplace_back("backend", offline ? fmt::format("mock (seed {})", config_.mock_seed) : std::string("remote"));
  m.emplace_back("hdbscan", fmt::format("min_cluster_size={}, min_samples={}", params.min_cluster_size, params.min_samples));
  m.emplace_back("clusters", fmt::format("{} clusters, {} noise sentences", clusters.at("cluster_count").get<std::size_t>(),
                                         clusters.at("noise_count").get<std::size_t>()));
  m.emplace_back("baseline", std::string(stats::to_string(baseline)));
  m.emplace_back("prompt templates", fmt::format("{} (generator {}, analyst {}, labeler {}, repair {})", prompts::kVersion,
                                                 prompts::template_hash(prompts::generator()).substr(0, 12),
                                                 prompts::template_hash(prompts::diagnosis()).substr(0, 12),
                                                 prompts::template_hash(prompts::labeler()).substr(0, 12),
                                                 prompts::repair_hash().substr(0, 12)));

  write_file_atomic(path(artifacts::kReport), render_report_markdown(report, config_.top_k, config_.bottom_k));
  write_file_atomic(path(artifacts::kFailuresCsv), render_failure_table(report.failures).csv);
  write_file_atomic(path(artifacts::kModesCsv),
                    render_mode_table(report.modes.reports, config_.top_k, config_.bottom_k, report.baseline_description).csv);
  write_file_atomic(path(artifacts::kSummary), summary_json(report).dump(2) + "\n");
  log("[report] " + accuracy_line(report.accuracy));
}

}  // namespace reasonprobe
