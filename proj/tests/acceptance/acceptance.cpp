// Acceptance checks. Prints one PASS/FAIL line per criterion; `--only N`
// runs a single criterion. Exit status is nonzero when any selected
// criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "reasonprobe/embedding.hpp"
#include "reasonprobe/format.hpp"
#include "reasonprobe/gateway.hpp"
#include "reasonprobe/hdbscan.hpp"
#include "reasonprobe/io.hpp"
#include "reasonprobe/modes.hpp"
#include "reasonprobe/report.hpp"
#include "reasonprobe/stats.hpp"
#include "table_fixtures.hpp"

namespace fs = std::filesystem;
using namespace reasonprobe;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, std::string what) {
    if (!ok) {
      pass = false;
      notes.push_back(std::move(what));
    }
  }
  void info(std::string what) { notes.push_back(std::move(what)); }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct CommandResult {
  int status = -1;
  std::string output;
};

CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = ::popen((cmd + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) r.output += buf.data();
  r.status = ::pclose(pipe);
  return r;
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("rp_acceptance_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

/// Writes an offline config for the bundled fixture and returns its path.
fs::path fixture_config(const fs::path& dir) {
  const json cfg{{"corpus", RP_FIXTURE_DIR "/gsm8k_fixture.jsonl"},
                 {"mock_script", RP_FIXTURE_DIR "/mock_script.jsonl"},
                 {"sample_size", 1000},
                 {"out_dir", (dir / "out").string()}};
  write_file_atomic(dir / "config.json", cfg.dump(2));
  return dir / "config.json";
}

std::string cli(const fs::path& config, const std::string& args = "run-all") {
  return fmt::format("'{}' --config '{}' --offline {}", RP_CLI_PATH, config.string(), args);
}

std::size_t count_lines_with(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

// ---------------------------------------------------------------------------

Verdict criterion1() {
  Verdict o;
  const auto t0 = Clock::now();
  const auto table = render_failure_table(failure_distribution(fixture::failure_table()));
  const char* rows[] = {
      "| Reasoning Error | 75 | 49.7% |",       "| Calculation Error | 50 | 33.1% |",
      "| Misinterpretation Error | 17 | 11.3% |", "| Uncategorized by Analyst | 5 | 3.3% |",
      "| Factual Invention | 4 | 2.6% |",        "| **Total Failures Analyzed** | **151** | **100.0%** |",
  };
  std::size_t last = 0;
  for (const char* row : rows) {
    const auto pos = table.text.find(row);
    o.require(pos != std::string::npos && pos >= last, fmt::format("row missing or out of order: {}", row));
    if (pos != std::string::npos) last = pos;
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 1.0, fmt::format("took {:.3f}s", elapsed));
  o.info(fmt::format("{:.4f}s", elapsed));
  return o;
}

Verdict criterion2() {
  Verdict o;
  const auto t0 = Clock::now();
  const auto in = fixture::mode_input();
  ModeAnalysisOptions opts;
  opts.baseline = stats::BaselineMode::FixedRate;
  opts.fixed_rate = 0.849;
  auto table = build_mode_table(in.assignment, in.sentences, fixture::mode_labeler(), opts);
  for (auto& r : table.reports) r.cluster_id = fixture::mode_rows()[static_cast<std::size_t>(r.cluster_id)].published_id;
  const auto rendered = render_mode_table(table.reports, 3, 5, "a fixed baseline correctness rate of 84.9%");

  for (const auto& row : fixture::mode_rows()) {
    const auto it = std::find_if(table.reports.begin(), table.reports.end(),
                                 [&](const ClusterReport& r) { return r.cluster_id == row.published_id; });
    if (it == table.reports.end()) {
      o.require(false, fmt::format("cluster {} missing", row.published_id));
      continue;
    }
    const auto rate = format_percent(it->n_correct, it->n_total);
    o.require(rate == row.rate, fmt::format("cluster {} rate {} != {}", row.published_id, rate, row.rate));
    const std::string line = fmt::format("| {} | {}* | {} | {} |", row.published_id, row.rate, row.n_total, row.label);
    o.require(it->p_value < 0.05,
              fmt::format("({},{}) p = {:.4g} is not below 0.05 against out-group {}", row.n_total, row.n_correct,
                          it->p_value, fixture::kTotalSentences - row.n_total));
    o.require(rendered.text.find(line) != std::string::npos, fmt::format("rendered row missing: {}", line));
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 1.0, fmt::format("took {:.3f}s", elapsed));
  o.info(fmt::format("{:.4f}s", elapsed));
  return o;
}

Verdict criterion3() {
  Verdict o;
  const auto dir = scratch("c3");
  const auto cfg = fixture_config(dir);
  const auto t0 = Clock::now();
  const auto res = run_command(cli(cfg));
  const double elapsed = seconds_since(t0);
  o.require(res.status == 0, "run-all exited with status " + std::to_string(res.status));
  o.require(res.output.find("849 correct of 1000 (84.9%)\n") != std::string::npos,
            "accuracy line not printed");
  o.require(res.output.find(" 0 network") != std::string::npos, "network requests were made");
  o.require(elapsed < 60.0, fmt::format("took {:.1f}s", elapsed));
  o.info(fmt::format("{:.2f}s", elapsed));
  fs::remove_all(dir);
  return o;
}

Verdict criterion4() {
  Verdict o;
  const auto t0 = Clock::now();
  std::size_t tables = 0;
  double worst = 0;
  for (int a = 0; a <= 30; ++a)
    for (int b = 0; a + b <= 30; ++b)
      for (int c = 0; a + c <= 30; ++c)
        for (int d = 0; c + d <= 30 && b + d <= 30; ++d) {
          if (a + b == 0 || c + d == 0) continue;
          const double got = stats::fisher_exact_two_sided({a, b, c, d});
          const double want = oracle::fisher_two_sided_small(a, b, c, d);
          const double err = std::abs(got - want);
          worst = std::max(worst, err);
          if (err > 1e-9 && o.notes.size() < 5) o.require(false, fmt::format("({},{},{},{}): {} vs {}", a, b, c, d, got, want));
          if (err > 1e-9) o.pass = false;
          ++tables;
        }

  std::mt19937_64 rng(2024);
  double worst_sum = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::int64_t n = std::uniform_int_distribution<std::int64_t>(1, 200)(rng);
    const std::int64_t row1 = std::uniform_int_distribution<std::int64_t>(0, n)(rng);
    const std::int64_t col1 = std::uniform_int_distribution<std::int64_t>(0, n)(rng);
    double sum = 0;
    for (std::int64_t x = std::max<std::int64_t>(0, row1 + col1 - n); x <= std::min(row1, col1); ++x)
      sum += stats::hypergeom_pmf(x, row1, col1, n);
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  o.require(worst_sum <= 1e-12, fmt::format("pmf sum off by {:.3g}", worst_sum));
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 30.0, fmt::format("took {:.1f}s", elapsed));
  o.info(fmt::format("{} tables, max |diff| {:.2g}, max pmf-sum error {:.2g}, {:.2f}s", tables, worst, worst_sum, elapsed));
  return o;
}

std::vector<double> blob_points(std::mt19937_64& rng, std::size_t n, std::size_t dim, std::size_t centers) {
  std::uniform_real_distribution<double> box(-8, 8);
  std::normal_distribution<double> g(0, 1);
  std::vector<std::vector<double>> c(centers, std::vector<double>(dim));
  for (auto& v : c)
    for (auto& x : v) x = box(rng);
  std::vector<double> pts;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < dim; ++k) pts.push_back(c[i % centers][k] + g(rng));
  return pts;
}

void check_min_size(Verdict& o, const hdbscan::ClusterAssignment& res, std::size_t mcs, const std::string& where) {
  std::vector<std::size_t> size(res.cluster_count());
  for (int l : res.labels)
    if (l >= 0) ++size[static_cast<std::size_t>(l)];
  for (auto s : size) o.require(s >= mcs, fmt::format("{}: cluster of {} < {}", where, s, mcs));
}

Verdict criterion5() {
  Verdict o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);

  // (a) MST weight against Kruskal.
  std::size_t mst_mismatch = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t dim = 2 + rep % 5, ms = 1 + rep % 8;
    const auto pts = blob_points(rng, 40, dim, 1 + rep % 4);
    const PointView view{pts.data(), 40, dim};
    const auto cores = hdbscan::core_distances(view, ms);
    double got = 0;
    for (const auto& e : hdbscan::build_mst(view, cores)) got += e.weight;
    const auto ref = oracle::kruskal_weights(pts, dim, oracle::core_distances(pts, dim, ms));
    const double want = std::accumulate(ref.begin(), ref.end(), 0.0);
    if (std::abs(got - want) > 1e-9 * std::max(1.0, want)) ++mst_mismatch;
  }
  o.require(mst_mismatch == 0, fmt::format("(a) {} of 200 MST totals differ from Kruskal", mst_mismatch));

  // (b) Reference partitions.
  const auto cases = oracle::load_reference(RP_FIXTURE_DIR "/hdbscan_reference.json");
  std::size_t ref_ok = 0;
  for (const auto& c : cases) {
    const auto res = hdbscan::run_hdbscan({c.points.data(), c.n, c.dim}, {c.min_cluster_size, c.min_samples});
    const double ari = oracle::adjusted_rand_index(res.labels, c.labels);
    if (ari == 1.0 && oracle::same_partition(res.labels, c.labels)) ++ref_ok;
    else o.require(false, fmt::format("(b) {}: ARI {:.6f}", c.name, ari));
    check_min_size(o, res, c.min_cluster_size, c.name);
  }
  o.require(cases.size() == 20, fmt::format("(b) expected 20 reference datasets, found {}", cases.size()));

  // (c) Permutation equivariance.
  std::size_t perm_ok = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t dim = 2 + rep % 4, n = 60 + 10 * (rep % 7);
    const hdbscan::Params params{5 + static_cast<std::size_t>(rep % 3) * 3, 3 + static_cast<std::size_t>(rep % 5)};
    const auto pts = blob_points(rng, n, dim, 2 + rep % 4);
    const auto base = hdbscan::run_hdbscan({pts.data(), n, dim}, params);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> q(pts.size());
    for (std::size_t i = 0; i < n; ++i) std::copy_n(&pts[perm[i] * dim], dim, &q[i * dim]);
    const auto moved = hdbscan::run_hdbscan({q.data(), n, dim}, params);
    std::vector<int> expect(n);
    for (std::size_t i = 0; i < n; ++i) expect[i] = base.labels[perm[i]];
    if (oracle::same_partition(expect, moved.labels) && oracle::adjusted_rand_index(expect, moved.labels) == 1.0) ++perm_ok;
    check_min_size(o, base, params.min_cluster_size, fmt::format("permutation {}", rep));
  }
  o.require(perm_ok == 50, fmt::format("(c) {} of 50 permutations matched", perm_ok));

  const double elapsed = seconds_since(t0);
  o.require(elapsed < 120.0, fmt::format("took {:.1f}s", elapsed));
  o.info(fmt::format("Kruskal 200/200 checked, reference {}/{}, permutations {}/50, {:.2f}s", ref_ok, cases.size(),
                     perm_ok, elapsed));
  return o;
}

std::vector<std::string> mock_sentences(std::size_t n) {
  static const char* subjects[] = {"The total cost", "Her age", "The distance", "The discount", "The number of outfits",
                                   "The marbles left", "The profit", "The time taken"};
  static const char* verbs[] = {"is", "equals", "comes to", "works out to"};
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(fmt::format("{} {} {} * {} = {}.", subjects[i % 8], verbs[(i / 8) % 4], i % 97, (i / 7) % 13 + 2,
                              (i % 97) * ((i / 7) % 13 + 2)));
  return out;
}

Verdict criterion6() {
  Verdict o;
  const auto t0 = Clock::now();
  Gateway gw({std::nullopt, 0, {}});
  ModelEndpointConfig cfg;
  cfg.model_name = "mock-embedding";
  auto texts = mock_sentences(3000);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < texts.size(); ++i) ids.push_back(fmt::format("{}:0:0", i));
  const auto matrix = l2_normalize(EmbeddingMatrix::from_rows(embed_sentences(gw, texts, cfg), ids));

  const auto dir = scratch("c6");
  write_embeddings(dir / "embeddings.bin", matrix);
  const auto raw = read_embeddings(dir / "embeddings.bin", matrix.dim);
  const auto stored = l2_normalize(raw);
  auto row_norm = [](std::span<const double> r) {
    double s = 0;
    for (double v : r) s += v * v;
    return std::sqrt(s);
  };
  double worst = 0, worst_raw = 0, worst_idem = 0;
  for (std::size_t i = 0; i < stored.n; ++i) {
    if (stored.zero_rows[i]) continue;
    worst = std::max(worst, std::abs(row_norm(stored.row(i)) - 1.0));
    worst_raw = std::max(worst_raw, std::abs(row_norm(raw.row(i)) - 1.0));
  }
  const auto twice = l2_normalize(stored);
  for (std::size_t k = 0; k < stored.values.size(); ++k)
    worst_idem = std::max(worst_idem, std::abs(twice.values[k] - stored.values[k]));
  o.require(worst <= 1e-9, fmt::format("loaded row norm off by {:.3g}", worst));
  o.require(worst_idem <= 1e-9, fmt::format("normalization not idempotent ({:.3g})", worst_idem));

  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  std::size_t disagreements = 0, compared = 0;
  const std::size_t dim = 64;
  auto unit = [&] {
    std::vector<double> v(dim);
    for (auto& x : v) x = g(rng);
    const double n = row_norm(v);
    for (auto& x : v) x /= n;
    return v;
  };
  for (int t = 0; t < 10000; ++t) {
    const auto x = unit(), y = unit(), z = unit();
    double cxy = 0, cxz = 0;
    for (std::size_t k = 0; k < dim; ++k) {
      cxy += x[k] * y[k];
      cxz += x[k] * z[k];
    }
    const double dxy = euclidean_distance(x, y), dxz = euclidean_distance(x, z);
    if (std::abs(cxy - cxz) <= 1e-12) continue;  // order undefined within rounding
    ++compared;
    if ((dxy < dxz) != (cxy > cxz)) ++disagreements;
  }
  o.require(disagreements == 0, fmt::format("{} of {} triples disagree", disagreements, compared));
  o.info(fmt::format("{} rows, max norm error {:.2g} (float32 on disk {:.2g}), {} triples agree, {:.2f}s", stored.n, worst,
                     worst_raw, compared, seconds_since(t0)));
  fs::remove_all(dir);
  return o;
}

Verdict criterion7() {
  Verdict o;
  const auto d1 = scratch("c7a"), d2 = scratch("c7b");
  const auto c1 = fixture_config(d1), c2 = fixture_config(d2);
  const auto r1 = run_command(cli(c1));
  const auto r2 = run_command(cli(c2));
  o.require(r1.status == 0 && r2.status == 0, "run-all failed");
  for (const char* f : {"report.md", "modes.csv", "failures.csv"}) {
    const bool same = read_file(d1 / "out" / f) == read_file(d2 / "out" / f);
    o.require(same, fmt::format("{} differs between independent runs", f));
  }
  const auto before = read_file(d1 / "out" / "report.md");
  const auto again = run_command(cli(c1));
  o.require(count_lines_with(again.output, "running (") == 0, "second consecutive run re-executed stages");
  o.require(read_file(d1 / "out" / "report.md") == before, "report changed on consecutive run");

  fs::remove(d1 / "out" / "modes.json");
  const auto resumed = run_command(cli(c1));
  const auto ran = count_lines_with(resumed.output, "running (");
  o.require(ran == 2 && resumed.output.find("[analyze] running") != std::string::npos &&
                resumed.output.find("[report] running") != std::string::npos,
            fmt::format("deleting modes.json re-executed {} stage(s)", ran));
  o.require(read_file(d1 / "out" / "report.md") == before, "report changed after resume");
  o.info(fmt::format("resume re-executed {} stage(s)", ran));
  fs::remove_all(d1);
  fs::remove_all(d2);
  return o;
}

Verdict criterion8() {
  Verdict o;
  Gateway gw({std::nullopt, 0, {}});
  ModelEndpointConfig cfg;
  cfg.model_name = "mock-embedding";
  const auto texts = mock_sentences(10000);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < texts.size(); ++i) ids.push_back(std::to_string(i));
  const auto matrix = l2_normalize(EmbeddingMatrix::from_rows(embed_sentences(gw, texts, cfg), ids));
  o.require(matrix.dim == 64, fmt::format("dimension {}", matrix.dim));
  const auto t0 = Clock::now();
  const auto res = hdbscan::run_hdbscan(view_of(matrix), hdbscan::Params{});
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 60.0, fmt::format("took {:.1f}s", elapsed));
  o.info(fmt::format("{} points, {} clusters, {} noise, {:.2f}s on {} worker(s)", matrix.n, res.cluster_count(),
                     res.noise_count(), elapsed, std::thread::hardware_concurrency()));
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "failure table fixture", criterion1},
      {2, "reasoning-mode table fixture", criterion2},
      {3, "mock end-to-end accuracy line", criterion3},
      {4, "Fisher exact test oracle", criterion4},
      {5, "HDBSCAN oracles", criterion5},
      {6, "normalization suite", criterion6},
      {7, "determinism and resume", criterion7},
      {8, "clustering scale check", criterion8},
  };
  int only = 0;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--only" && i + 1 < argc) only = std::stoi(argv[++i]);

  bool all_pass = true;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    Verdict o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("exception: ") + e.what());
    }
    all_pass &= o.pass;
    std::string notes;
    for (const auto& n : o.notes) notes += (notes.empty() ? "" : "; ") + n;
    std::cout << fmt::format("criterion {}: {} - {}{}", c.id, o.pass ? "PASS" : "FAIL", c.title,
                             notes.empty() ? "" : " (" + notes + ")")
              << std::endl;
  }
  return all_pass ? 0 : 1;
}
