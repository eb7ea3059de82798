#include "reasonprobe/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>

#include "reasonprobe/parallel.hpp"

namespace reasonprobe::hdbscan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lambda_of(double distance) {
  return distance > 0.0 ? std::min(1.0 / distance, kLambdaMax) : kLambdaMax;
}

using EdgeKey = std::tuple<double, std::size_t, std::size_t>;

EdgeKey key_of(double w, std::size_t i, std::size_t j) {
  return {w, std::min(i, j), std::max(i, j)};
}

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  std::size_t unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }
  std::size_t size(std::size_t x) { return size_[find(x)]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace

void validate(const Params& params) {
  if (params.min_cluster_size < 2) throw std::invalid_argument("min_cluster_size must be at least 2");
  if (params.min_samples < 1) throw std::invalid_argument("min_samples must be at least 1");
}

std::size_t ClusterAssignment::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), -1));
}

std::vector<double> core_distances(const PointView& points, std::size_t min_samples) {
  const std::size_t n = points.n;
  if (min_samples < 1) throw std::invalid_argument("min_samples must be at least 1");
  if (n <= min_samples)
    throw std::invalid_argument("core distances need more than min_samples=" +
                                std::to_string(min_samples) + " points, got " + std::to_string(n));
  std::vector<double> cores(n);
  const std::size_t workers = std::min(hardware_workers(), n / 256 + 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  parallel_for(workers, workers, [&](std::size_t w) {
    std::vector<double> dist(n - 1);
    const std::size_t end = std::min(n, (w + 1) * chunk);
    for (std::size_t i = w * chunk; i < end; ++i) {
      const double* pi = points.data + i * points.dim;
      std::size_t k = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        dist[k++] = squared_distance(pi, points.data + j * points.dim, points.dim);
      }
      auto nth = dist.begin() + static_cast<std::ptrdiff_t>(min_samples - 1);
      std::nth_element(dist.begin(), nth, dist.end());
      cores[i] = std::sqrt(*nth);
    }
  });
  return cores;
}

double mutual_reachability(std::size_t i, std::size_t j, std::span<const double> cores,
                           const PointView& points) {
  return std::max({cores[i], cores[j], euclidean_distance(points.row(i), points.row(j))});
}

std::vector<Edge> build_mst(const PointView& points, std::span<const double> cores) {
  const std::size_t n = points.n;
  if (n < 2) throw std::invalid_argument("build_mst needs at least 2 points");
  if (cores.size() != n) throw std::invalid_argument("build_mst: one core distance per point required");

  std::vector<double> best(n, kInf);
  std::vector<std::size_t> best_from(n, 0);
  std::vector<std::size_t> remaining(n - 1);
  std::iota(remaining.begin(), remaining.end(), std::size_t{1});
  std::vector<Edge> edges;
  edges.reserve(n - 1);

  std::size_t current = 0;
  while (!remaining.empty()) {
    const double* pc = points.data + current * points.dim;
    std::size_t pick = 0;
    for (std::size_t r = 0; r < remaining.size(); ++r) {
      const std::size_t j = remaining[r];
      const double core_floor = std::max(cores[current], cores[j]);
      if (core_floor <= best[j]) {
        const double d = std::sqrt(squared_distance(pc, points.data + j * points.dim, points.dim));
        const double w = std::max(core_floor, d);
        if (key_of(w, current, j) < key_of(best[j], best_from[j], j)) {
          best[j] = w;
          best_from[j] = current;
        }
      }
      const std::size_t k = remaining[pick];
      if (key_of(best[j], best_from[j], j) < key_of(best[k], best_from[k], k)) pick = r;
    }
    const std::size_t next = remaining[pick];
    edges.push_back(Edge{std::min(next, best_from[next]), std::max(next, best_from[next]), best[next]});
    remaining[pick] = remaining.back();
    remaining.pop_back();
    current = next;
  }
  return edges;
}

std::vector<Merge> single_linkage(std::span<const Edge> edges, std::size_t n) {
  if (n == 0) return {};
  if (edges.size() + 1 != n)
    throw std::invalid_argument("single_linkage: a spanning tree over " + std::to_string(n) +
                                " points has " + std::to_string(n - 1) + " edges, got " +
                                std::to_string(edges.size()));
  std::vector<Edge> sorted(edges.begin(), edges.end());
  std::sort(sorted.begin(), sorted.end(), [](const Edge& x, const Edge& y) {
    return key_of(x.weight, x.a, x.b) < key_of(y.weight, y.a, y.b);
  });
  DisjointSet sets(n);
  std::vector<std::size_t> node_of(n);  // set representative -> dendrogram node id
  std::iota(node_of.begin(), node_of.end(), std::size_t{0});
  std::vector<Merge> merges;
  merges.reserve(n - 1);
  for (const auto& e : sorted) {
    if (e.a >= n || e.b >= n) throw std::invalid_argument("single_linkage: edge endpoint out of range");
    const std::size_t ra = sets.find(e.a);
    const std::size_t rb = sets.find(e.b);
    if (ra == rb) throw std::invalid_argument("single_linkage: edges do not form a spanning tree (disconnected input)");
    const std::size_t na = node_of[ra];
    const std::size_t nb = node_of[rb];
    const std::size_t root = sets.unite(ra, rb);
    merges.push_back(Merge{std::min(na, nb), std::max(na, nb), e.weight, sets.size(root)});
    node_of[root] = n + merges.size() - 1;
  }
  return merges;
}

CondensedTree condense_tree(std::span<const Merge> dendrogram, std::size_t n,
                            std::size_t min_cluster_size) {
  if (min_cluster_size < 2) throw std::invalid_argument("min_cluster_size must be at least 2");
  CondensedTree tree;
  tree.n_points = n;
  tree.n_clusters = 1;
  if (n == 0) return tree;
  if (dendrogram.size() + 1 != n) throw std::invalid_argument("condense_tree: dendrogram has wrong length");

  const std::size_t root = 2 * n - 2;
  auto size_of = [&](std::size_t node) { return node < n ? std::size_t{1} : dendrogram[node - n].size; };
  auto leaves_under = [&](std::size_t node, auto&& emit) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n) {
        emit(x);
      } else {
        stack.push_back(dendrogram[x - n].right);
        stack.push_back(dendrogram[x - n].left);
      }
    }
  };

  std::vector<std::size_t> relabel(2 * n - 1, 0);
  std::vector<bool> ignore(2 * n - 1, false);
  relabel[root] = n;
  std::size_t next_label = n + 1;

  if (n == 1) {
    tree.nodes.push_back(CondensedNode{n, 0, kLambdaMax, 1});
    return tree;
  }

  std::vector<std::size_t> queue{root};
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t node = queue[head];
    if (node >= n) {
      queue.push_back(dendrogram[node - n].left);
      queue.push_back(dendrogram[node - n].right);
    }
    if (node < n || ignore[node]) continue;

    const Merge& m = dendrogram[node - n];
    const double lambda = lambda_of(m.distance);
    const std::size_t parent = relabel[node];
    auto fall_out = [&](std::size_t child) {
      leaves_under(child, [&](std::size_t p) {
        tree.nodes.push_back(CondensedNode{parent, p, lambda, 1});
      });
      std::vector<std::size_t> stack{child};
      while (!stack.empty()) {
        const std::size_t x = stack.back();
        stack.pop_back();
        ignore[x] = true;
        if (x >= n) {
          stack.push_back(dendrogram[x - n].left);
          stack.push_back(dendrogram[x - n].right);
        }
      }
    };

    // Merges at the same distance form one multi-way split, so the result
    // does not depend on how equal-weight edges were ordered.
    std::vector<std::size_t> parts;
    std::vector<std::size_t> pending{m.right, m.left};
    while (!pending.empty()) {
      const std::size_t x = pending.back();
      pending.pop_back();
      if (x >= n && dendrogram[x - n].distance == m.distance) {
        ignore[x] = true;
        pending.push_back(dendrogram[x - n].right);
        pending.push_back(dendrogram[x - n].left);
      } else {
        parts.push_back(x);
      }
    }

    const auto big_count = static_cast<std::size_t>(std::count_if(
        parts.begin(), parts.end(), [&](std::size_t x) { return size_of(x) >= min_cluster_size; }));
    for (const std::size_t x : parts) {
      if (size_of(x) < min_cluster_size) {
        fall_out(x);
      } else if (big_count == 1) {
        relabel[x] = parent;
      } else {
        relabel[x] = next_label++;
        tree.nodes.push_back(CondensedNode{parent, relabel[x], lambda, size_of(x)});
      }
    }
  }
  tree.n_clusters = next_label - n;
  return tree;
}

std::vector<double> compute_stability(const CondensedTree& tree) {
  const std::size_t n = tree.n_points;
  std::vector<double> birth(tree.n_clusters, 0.0);
  for (const auto& node : tree.nodes)
    if (node.child >= n) birth[node.child - n] = node.lambda;
  std::vector<double> stability(tree.n_clusters, 0.0);
  for (const auto& node : tree.nodes)
    stability[node.parent - n] +=
        (node.lambda - birth[node.parent - n]) * static_cast<double>(node.child_size);
  return stability;
}

ClusterAssignment extract_clusters(const CondensedTree& tree, std::vector<double> stabilities,
                                   std::size_t min_cluster_size) {
  const std::size_t n = tree.n_points;
  const std::size_t k = tree.n_clusters;
  if (stabilities.size() != k) throw std::invalid_argument("extract_clusters: one stability per cluster required");
  const std::vector<double> own_stability = stabilities;

  std::vector<std::size_t> cluster_parent(k, 0);
  std::vector<std::vector<std::size_t>> children(k);
  std::vector<std::size_t> point_parent(n, 0);
  for (const auto& node : tree.nodes) {
    if (node.child >= n) {
      cluster_parent[node.child - n] = node.parent - n;
      children[node.parent - n].push_back(node.child - n);
    } else {
      point_parent[node.child] = node.parent - n;
    }
  }

  // Children always carry larger ids than their parent, so a reverse sweep is bottom-up.
  std::vector<bool> selected(k, true);
  selected[0] = false;
  for (std::size_t c = k; c-- > 1;) {
    if (children[c].empty()) continue;
    double subtree = 0.0;
    for (std::size_t ch : children[c]) subtree += stabilities[ch];
    if (subtree > stabilities[c]) {
      selected[c] = false;
      stabilities[c] = subtree;
    } else {
      std::vector<std::size_t> stack(children[c]);
      while (!stack.empty()) {
        const std::size_t x = stack.back();
        stack.pop_back();
        selected[x] = false;
        stack.insert(stack.end(), children[x].begin(), children[x].end());
      }
    }
  }

  bool any = std::find(selected.begin(), selected.end(), true) != selected.end();
  if (!any && k == 1 && n >= min_cluster_size && !tree.nodes.empty()) {
    const double first = tree.nodes.front().lambda;
    const bool flat = std::all_of(tree.nodes.begin(), tree.nodes.end(),
                                  [first](const CondensedNode& x) { return x.lambda == first; });
    if (flat) selected[0] = true;
  }

  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < k; ++c)
    if (selected[c]) chosen.push_back(c);
  std::sort(chosen.begin(), chosen.end(), [&](std::size_t x, std::size_t y) {
    if (own_stability[x] != own_stability[y]) return own_stability[x] > own_stability[y];
    return x < y;
  });
  std::vector<int> label_of(k, -1);
  ClusterAssignment out;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    label_of[chosen[i]] = static_cast<int>(i);
    out.stabilities.push_back(own_stability[chosen[i]]);
  }

  // Nearest selected ancestor-or-self of each cluster, top-down.
  std::vector<int> owner(k, -1);
  for (std::size_t c = 0; c < k; ++c) {
    const int inherited = c == 0 ? -1 : owner[cluster_parent[c]];
    owner[c] = inherited >= 0 ? inherited : label_of[c];
  }
  out.labels.resize(n);
  for (std::size_t p = 0; p < n; ++p) out.labels[p] = owner[point_parent[p]];
  return out;
}

ClusterAssignment run_hdbscan(const PointView& points, const Params& params) {
  validate(params);
  const std::size_t n = points.n;
  if (n < 2 || n <= params.min_samples) {
    ClusterAssignment none;
    none.labels.assign(n, -1);
    return none;
  }
  const auto cores = core_distances(points, params.min_samples);
  const auto mst = build_mst(points, cores);
  const auto dendrogram = single_linkage(mst, n);
  const auto tree = condense_tree(dendrogram, n, params.min_cluster_size);
  return extract_clusters(tree, compute_stability(tree), params.min_cluster_size);
}

}  // namespace reasonprobe::hdbscan
