// reason-probe: staged reasoning-diagnostics pipeline.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "reasonprobe/pipeline.hpp"

namespace rp = reasonprobe;

namespace {

struct Overrides {
  std::string config_path;
  bool offline = false;
  std::string cache_dir;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> min_cluster_size;
  std::optional<std::size_t> min_samples;
  std::string baseline;
  bool force = false;
};

rp::RunConfig build_config(const Overrides& o) {
  rp::RunConfig c = o.config_path.empty() ? rp::default_config() : rp::validate_config(o.config_path);
  if (o.offline) rp::force_offline(c);
  if (!o.cache_dir.empty()) c.cache_dir = o.cache_dir;
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (o.seed) c.seed = *o.seed;
  if (o.min_cluster_size) c.min_cluster_size = *o.min_cluster_size;
  if (o.min_samples) c.min_samples = *o.min_samples;
  if (!o.baseline.empty()) c.baseline = rp::stats::baseline_from_string(o.baseline);
  if (c.corpus.empty()) throw rp::ConfigError("corpus: no corpus path configured (set \"corpus\" in --config)");
  rp::check_config(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch reasoning diagnostics: generate, verify, diagnose, embed, cluster and report."};
  app.require_subcommand(1, 1);

  Overrides o;
  app.add_option("--config", o.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_flag("--offline", o.offline, "Use the deterministic mock backend for every model");
  app.add_option("--cache-dir", o.cache_dir, "Response cache directory");
  app.add_option("--out-dir", o.out_dir, "Output directory for artifacts");
  app.add_option("--seed", o.seed, "Sampling seed");
  app.add_option("--min-cluster-size", o.min_cluster_size, "HDBSCAN min_cluster_size");
  app.add_option("--min-samples", o.min_samples, "HDBSCAN min_samples (defaults to min_cluster_size)");
  app.add_option("--baseline", o.baseline, "Significance baseline")->check(CLI::IsMember({"complement", "fixed"}));
  app.add_flag("--force", o.force, "Re-run stages whose recorded inputs differ");

  std::optional<rp::Stage> stage;
  for (rp::Stage s : rp::kAllStages) {
    auto* sub = app.add_subcommand(std::string(rp::to_string(s)), fmt::format("Run the {} stage", rp::to_string(s)));
    sub->callback([&stage, s] { stage = s; });
  }
  app.add_subcommand("run-all", "Run every stage, skipping those that are up to date");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    rp::PipelineOptions options;
    options.force = o.force;
    options.log = [](std::string_view line) { std::cerr << line << '\n'; };
    rp::Pipeline pipeline(build_config(o), options);

    if (stage) {
      pipeline.run_stage(*stage);
    } else {
      const auto executed = pipeline.run_all();
      std::cerr << fmt::format("{} stage(s) executed\n", executed.size());
    }
    if (!stage || *stage == rp::Stage::Report) {
      const auto doc = rp::json::parse(rp::read_file(pipeline.config().out_dir / rp::artifacts::kSummary));
      std::cout << doc["accuracy"]["line"].get<std::string>() << '\n';
    }
    const auto st = pipeline.gateway().stats();
    std::cerr << fmt::format("requests: {} backend, {} network, {} cache hits\n", st.backend_calls,
                             st.network_requests, st.cache_hits);
    return 0;
  } catch (const rp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const rp::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
