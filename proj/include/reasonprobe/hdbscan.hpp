#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "reasonprobe/embedding.hpp"

namespace reasonprobe::hdbscan {

/// Density level assigned to zero-distance merges (1 / 1e-12).
inline constexpr double kLambdaMax = 1e12;

struct Params {
  std::size_t min_cluster_size = 10;
  std::size_t min_samples = 10;  // neighbours, not counting the point itself
};

/// Throws std::invalid_argument when min_cluster_size < 2 or min_samples < 1.
void validate(const Params& params);

struct Edge {
  std::size_t a = 0;  // a < b
  std::size_t b = 0;
  double weight = 0.0;
};

/// One agglomeration step. Node ids below n are points; id n + i is the
/// node created by merge i.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

/// Edge of the condensed hierarchy. Cluster ids start at n_points (the root);
/// a child below n_points is a point that left `parent` at `lambda`.
struct CondensedNode {
  std::size_t parent = 0;
  std::size_t child = 0;
  double lambda = 0.0;
  std::size_t child_size = 0;
};

struct CondensedTree {
  std::size_t n_points = 0;
  std::size_t n_clusters = 0;  // including the root
  std::vector<CondensedNode> nodes;

  std::size_t root() const { return n_points; }
};

struct ClusterAssignment {
  std::vector<int> labels;          // -1 for noise, otherwise 0..k-1
  std::vector<double> stabilities;  // indexed by label, non-increasing

  std::size_t cluster_count() const { return stabilities.size(); }
  std::size_t noise_count() const;
};

/// Distance to the min_samples-th nearest other point. Requires n > min_samples.
std::vector<double> core_distances(const PointView& points, std::size_t min_samples);

double mutual_reachability(std::size_t i, std::size_t j, std::span<const double> cores,
                           const PointView& points);

/// Dense Prim's over the complete mutual-reachability graph. Ties resolve to
/// the smallest (weight, min endpoint, max endpoint).
std::vector<Edge> build_mst(const PointView& points, std::span<const double> cores);

/// Kruskal-order agglomeration of a spanning tree over n points.
std::vector<Merge> single_linkage(std::span<const Edge> edges, std::size_t n);

/// Consecutive merges at one distance are treated as a single multi-way
/// split; undersized parts fall out of the parent at that lambda.
CondensedTree condense_tree(std::span<const Merge> dendrogram, std::size_t n,
                            std::size_t min_cluster_size);

/// Indexed by cluster id - n_points.
std::vector<double> compute_stability(const CondensedTree& tree);

/// Excess-of-mass selection; the root is never selected except when the
/// whole input sits at a single density level (every point leaves the root
/// at the same lambda), in which case it is the only cluster.
ClusterAssignment extract_clusters(const CondensedTree& tree, std::vector<double> stabilities,
                                   std::size_t min_cluster_size);

/// Full pipeline. Inputs with n < 2 or n <= min_samples come back as all noise.
ClusterAssignment run_hdbscan(const PointView& points, const Params& params);

}  // namespace reasonprobe::hdbscan
