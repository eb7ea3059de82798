#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "reasonprobe/hdbscan.hpp"

using namespace reasonprobe;
using namespace reasonprobe::hdbscan;

namespace {

std::vector<double> random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> pts(n * dim);
  for (auto& v : pts) v = u(rng);
  return pts;
}

std::vector<double> blobs(std::mt19937_64& rng, const std::vector<std::vector<double>>& centers, std::size_t per,
                          double spread) {
  std::normal_distribution<double> g(0, spread);
  std::vector<double> pts;
  for (const auto& c : centers)
    for (std::size_t i = 0; i < per; ++i)
      for (double x : c) pts.push_back(x + g(rng));
  return pts;
}

PointView view(const std::vector<double>& pts, std::size_t dim) { return {pts.data(), pts.size() / dim, dim}; }

/// Per-point summation: each point contributes to every cluster on its path
/// from the root the lambda span it spent inside that cluster.
std::map<std::size_t, double> stability_oracle(const CondensedTree& tree) {
  std::map<std::size_t, double> birth{{tree.root(), 0.0}};
  std::map<std::size_t, std::size_t> parent_of;
  std::map<std::size_t, std::pair<std::size_t, double>> point_exit;
  for (const auto& node : tree.nodes) {
    if (node.child >= tree.n_points) {
      birth[node.child] = node.lambda;
      parent_of[node.child] = node.parent;
    } else {
      point_exit[node.child] = {node.parent, node.lambda};
    }
  }
  std::map<std::size_t, double> stab;
  for (const auto& [c, _] : birth) stab[c] = 0.0;
  for (const auto& [p, exit] : point_exit) {
    auto [cluster, leave] = exit;
    while (true) {
      stab[cluster] += leave - birth[cluster];
      if (cluster == tree.root()) break;
      leave = birth[cluster];
      cluster = parent_of[cluster];
    }
  }
  return stab;
}

}  // namespace

TEST_CASE("core distances") {
  const std::vector<double> line{0, 1, 3};
  CHECK(core_distances(view(line, 1), 1) == std::vector<double>{1, 1, 2});
  const std::vector<double> dup{0, 0, 0, 0, 5, 5};
  const auto cores = core_distances(view(dup, 2), 1);
  CHECK(cores[0] == 0.0);
  CHECK(cores[1] == 0.0);
  CHECK_THROWS(core_distances(view(line, 1), 3));

  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    const auto pts = random_points(rng, 50, 4);
    for (std::size_t ms : {1, 3, 7}) {
      const auto got = core_distances(view(pts, 4), ms);
      const auto want = oracle::core_distances(pts, 4, ms);
      for (std::size_t i = 0; i < 50; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("mutual reachability") {
  const std::vector<double> pts{0, 1};
  const std::vector<double> zero{0, 0}, big{5, 0};
  CHECK(mutual_reachability(0, 1, zero, view(pts, 1)) == 1.0);
  CHECK(mutual_reachability(0, 1, big, view(pts, 1)) == 5.0);
  CHECK(mutual_reachability(1, 0, big, view(pts, 1)) == 5.0);
}

TEST_CASE("minimum spanning tree") {
  // Pairwise distances 1, 2, 3 on a line: 0 -- 1 ---- 3.
  const std::vector<double> pts{0, 1, 3};
  const std::vector<double> zero(3, 0.0);
  auto mst = build_mst(view(pts, 1), zero);
  REQUIRE(mst.size() == 2);
  std::vector<double> w{mst[0].weight, mst[1].weight};
  std::sort(w.begin(), w.end());
  CHECK(w == std::vector<double>{1, 2});

  const std::vector<double> two{0, 4};
  mst = build_mst(view(two, 1), std::vector<double>{0, 0});
  REQUIRE(mst.size() == 1);
  CHECK(mst[0].a == 0);
  CHECK(mst[0].b == 1);

  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = random_points(rng, 40, 3);
    const auto cores = core_distances(view(p, 3), 4);
    auto got = build_mst(view(p, 3), cores);
    std::vector<double> gw;
    for (const auto& e : got) gw.push_back(e.weight);
    std::sort(gw.begin(), gw.end());
    const auto want = oracle::kruskal_weights(p, 3, oracle::core_distances(p, 3, 4));
    REQUIRE(gw.size() == want.size());
    for (std::size_t i = 0; i < gw.size(); ++i) CHECK(gw[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("single linkage") {
  const std::vector<Edge> chain{{1, 2, 2.0}, {0, 1, 1.0}};
  const auto merges = single_linkage(chain, 3);
  REQUIRE(merges.size() == 2);
  CHECK(merges[0].distance == 1.0);
  CHECK(merges[0].size == 2);
  CHECK(merges[1].distance == 2.0);
  CHECK(merges[1].size == 3);

  const std::vector<Edge> ties{{2, 3, 1.0}, {0, 1, 1.0}, {1, 2, 1.0}};
  const auto m = single_linkage(ties, 4);
  CHECK(std::min(m[0].left, m[0].right) == 0);
  CHECK(std::max(m[0].left, m[0].right) == 1);
  CHECK(single_linkage(ties, 4)[2].size == 4);

  std::mt19937_64 rng(9);
  const auto p = random_points(rng, 60, 2);
  const auto cores = core_distances(view(p, 2), 3);
  const auto dendro = single_linkage(build_mst(view(p, 2), cores), 60);
  for (std::size_t i = 1; i < dendro.size(); ++i) CHECK(dendro[i - 1].distance <= dendro[i].distance);
  CHECK(dendro.back().size == 60);
}

TEST_CASE("condensed tree structure") {
  std::mt19937_64 rng(21);
  const auto p = blobs(rng, {{0, 0}, {20, 20}}, 10, 0.5);
  const auto cores = core_distances(view(p, 2), 3);
  const auto dendro = single_linkage(build_mst(view(p, 2), cores), 20);
  const auto tree = condense_tree(dendro, 20, 5);
  std::size_t root_children = 0;
  for (const auto& nd : tree.nodes)
    if (nd.parent == tree.root() && nd.child >= 20) ++root_children;
  CHECK(root_children == 2);

  const auto big = condense_tree(dendro, 20, 25);
  CHECK(big.n_clusters == 1);
  CHECK(big.nodes.size() == 20);
  const auto labels = extract_clusters(big, compute_stability(big), 25).labels;
  CHECK(std::all_of(labels.begin(), labels.end(), [](int l) { return l == -1; }));
}

TEST_CASE("equal-distance merges split together") {
  // Point 4 reaches both pairs at the distance where the pairs meet.
  const std::vector<Merge> joined_first{{0, 1, 1.0, 2}, {2, 3, 1.0, 2}, {5, 4, 2.0, 3}, {7, 6, 2.0, 5}};
  const std::vector<Merge> joined_last{{0, 1, 1.0, 2}, {2, 3, 1.0, 2}, {5, 6, 2.0, 4}, {7, 4, 2.0, 5}};
  for (const auto* dendro : {&joined_first, &joined_last}) {
    const auto tree = condense_tree(*dendro, 5, 2);
    CHECK(tree.n_clusters == 3);
    const auto labels = extract_clusters(tree, compute_stability(tree), 2).labels;
    CHECK(labels[0] == labels[1]);
    CHECK(labels[2] == labels[3]);
    CHECK(labels[0] != labels[2]);
    CHECK(labels[4] == -1);
  }
}

TEST_CASE("condensed tree invariants on random inputs") {
  std::mt19937_64 rng(33);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 80;
    const auto p = random_points(rng, n, 3);
    const auto cores = core_distances(view(p, 3), 4);
    const auto tree = condense_tree(single_linkage(build_mst(view(p, 3), cores), n), n, 6);

    std::map<std::size_t, double> birth{{tree.root(), 0.0}};
    std::map<std::size_t, std::size_t> parent;
    for (const auto& nd : tree.nodes)
      if (nd.child >= n) {
        birth[nd.child] = nd.lambda;
        parent[nd.child] = nd.parent;
      }
    // Monotone lambda along every root-to-leaf path.
    for (const auto& nd : tree.nodes) CHECK(nd.lambda >= birth[nd.parent]);

    // Recount child sizes from the point records.
    std::map<std::size_t, std::size_t> recount;
    std::size_t points_seen = 0;
    for (const auto& nd : tree.nodes) {
      if (nd.child >= n) continue;
      CHECK(nd.child_size == 1);
      ++points_seen;
      for (std::size_t c = nd.parent;; c = parent[c]) {
        ++recount[c];
        if (c == tree.root()) break;
      }
    }
    CHECK(points_seen == n);
    CHECK(recount[tree.root()] == n);
    for (const auto& nd : tree.nodes)
      if (nd.child >= n) {
        CHECK(nd.child_size == recount[nd.child]);
        CHECK(nd.child_size >= 6);
      }

    // Stability against the per-point summation oracle.
    const auto stab = compute_stability(tree);
    const auto want = stability_oracle(tree);
    for (const auto& [c, s] : want) CHECK(stab[c - n] == doctest::Approx(s).epsilon(1e-9));
  }
}

TEST_CASE("stability from the definition") {
  CondensedTree t;
  t.n_points = 10;
  t.n_clusters = 3;
  for (std::size_t i = 0; i < 5; ++i) t.nodes.push_back({11, i, 2.0, 1});      // leave at birth
  for (std::size_t i = 5; i < 10; ++i) t.nodes.push_back({12, i, 3.0, 1});     // leave at birth + 1
  t.nodes.insert(t.nodes.begin(), {{10, 11, 2.0, 5}, {10, 12, 2.0, 5}});
  const auto s = compute_stability(t);
  CHECK(s[1] == 0.0);
  CHECK(s[2] == doctest::Approx(5.0));
}

TEST_CASE("end-to-end clustering cases") {
  std::mt19937_64 rng(4);
  const auto two = blobs(rng, {{0, 0, 0}, {30, 30, 30}}, 40, 1.0);
  auto res = run_hdbscan(view(two, 3), {10, 5});
  CHECK(res.cluster_count() == 2);
  CHECK(res.noise_count() == 0);

  const auto scatter = random_points(rng, 100, 2);
  res = run_hdbscan(view(scatter, 2), {51, 5});
  CHECK(res.cluster_count() == 0);
  CHECK(res.noise_count() == 100);

  const std::vector<double> same(30 * 4, 0.25);
  res = run_hdbscan(view(same, 4), {10, 10});
  CHECK(res.cluster_count() == 1);
  CHECK(res.noise_count() == 0);
  res = run_hdbscan(view(same, 4), {31, 10});
  CHECK(res.cluster_count() == 0);

  const std::vector<double> tiny{0, 1};
  CHECK(run_hdbscan(view(tiny, 1), {2, 2}).noise_count() == 2);
  CHECK(run_hdbscan({tiny.data(), 1, 1}, {2, 1}).noise_count() == 1);
  CHECK_THROWS(validate(Params{1, 1}));
  CHECK_THROWS(validate(Params{5, 0}));
}

TEST_CASE("labels ordered by stability, clusters at least min_cluster_size") {
  std::mt19937_64 rng(6);
  const auto p = blobs(rng, {{0, 0}, {10, 0}, {0, 10}, {10, 10}}, 30, 0.7);
  const auto res = run_hdbscan(view(p, 2), {8, 5});
  REQUIRE(res.cluster_count() >= 2);
  for (std::size_t i = 1; i < res.stabilities.size(); ++i) CHECK(res.stabilities[i - 1] >= res.stabilities[i]);
  std::vector<std::size_t> size(res.cluster_count());
  for (int l : res.labels) {
    CHECK(l >= -1);
    CHECK(l < static_cast<int>(res.cluster_count()));
    if (l >= 0) ++size[l];
  }
  for (auto s : size) CHECK(s >= 8);
}

TEST_CASE("deterministic and permutation equivariant") {
  std::mt19937_64 rng(12);
  const std::size_t dim = 3;
  const auto p = blobs(rng, {{0, 0, 0}, {6, 0, 0}, {0, 6, 0}}, 25, 1.0);
  const std::size_t n = p.size() / dim;
  const auto base = run_hdbscan(view(p, dim), {6, 4});
  CHECK(run_hdbscan(view(p, dim), {6, 4}).labels == base.labels);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> q(p.size());
  for (std::size_t i = 0; i < n; ++i) std::copy_n(&p[perm[i] * dim], dim, &q[i * dim]);
  const auto permuted = run_hdbscan(view(q, dim), {6, 4});
  std::vector<int> expect(n);
  for (std::size_t i = 0; i < n; ++i) expect[i] = base.labels[perm[i]];
  CHECK(oracle::same_partition(expect, permuted.labels));
  CHECK(oracle::adjusted_rand_index(expect, permuted.labels) == doctest::Approx(1.0));
}

TEST_CASE("matches the reference implementation on a three-blob case") {
  const auto cases = oracle::load_reference(RP_FIXTURE_DIR "/hdbscan_reference.json");
  REQUIRE(!cases.empty());
  const auto& c = cases.front();
  const auto res = run_hdbscan({c.points.data(), c.n, c.dim}, {c.min_cluster_size, c.min_samples});
  CHECK(oracle::same_partition(res.labels, c.labels));
}
