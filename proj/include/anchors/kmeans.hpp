/**
 * anchors: metric trees with cached sufficient statistics
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "anchors/anchors.hpp"
#include "anchors/core.hpp"
#include "anchors/rng.hpp"
#include "anchors/tree.hpp"

namespace anchors {

using CentroidSet = std::vector<Point>;

/// Per-centroid vector sums and counts accumulated by one assignment pass.
struct StepAccumulator {
  std::vector<Point> sums;
  std::vector<std::size_t> counts;

  StepAccumulator(std::size_t k, std::size_t dim)
      : sums(k, Point(dim, 0.0)), counts(k, 0) {}
};

/// Assigns every point to its nearest centroid (ties to the lowest
/// centroid index) by exhaustive scan. Costs exactly R*K evaluations.
inline StepAccumulator naive_kmeans_step(const Dataset& data, const CentroidSet& cents,
                                         DistanceCounter& counter) {
  if (cents.empty()) throw std::invalid_argument("naive_kmeans_step: no centroids");
  StepAccumulator acc(cents.size(), data.dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    PointView p = data[i];
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cents.size(); ++c) {
      const double d = distance(p, cents[c], counter);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    acc.counts[best] += 1;
    Point& sum = acc.sums[best];
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += p[c];
  }
  return acc;
}

/// Test hook: called at every node of the accelerated recursion with the
/// candidate set on entry and after pruning.
using KmeansStepAudit =
    std::function<void(const TreeNode&, std::span<const std::size_t> cands_entry,
                       std::span<const std::size_t> cands_pruned)>;

namespace detail {

inline void fast_step_rec(const TreeNode& node, const Dataset& data,
                          const CentroidSet& cents,
                          const std::vector<std::size_t>& cands, StepAccumulator& acc,
                          DistanceCounter& counter, const KmeansStepAudit* audit) {
  // Find c*, the candidate nearest the pivot (ties to the lowest index;
  // cands are kept in ascending index order).
  std::vector<double> d(cands.size());
  std::size_t star = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    d[i] = distance(cents[cands[i]], node.pivot, counter);
    if (d[i] < d[star]) star = i;
  }

  // A candidate is dropped only when it provably loses for every point of
  // the node, strictly: d* + R < d_c - R. Strictness preserves the naive
  // tie-break (a dropped candidate can never tie the survivor).
  const double bound = d[star] + 2.0 * node.radius;
  std::vector<std::size_t> surviving;
  surviving.reserve(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (i == star || !(bound < d[i])) surviving.push_back(cands[i]);
  }
  if (audit) (*audit)(node, cands, surviving);

  if (surviving.size() == 1) {
    // Whole node awarded from cached statistics, no points visited.
    const std::size_t c = surviving.front();
    acc.counts[c] += node.count;
    Point& sum = acc.sums[c];
    const double w = static_cast<double>(node.count);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += w * node.centroid[k];
    return;
  }
  if (node.is_leaf()) {
    for (std::size_t idx : node.points) {
      PointView p = data[idx];
      std::size_t best = surviving.front();
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c : surviving) {
        const double dist_c = distance(p, cents[c], counter);
        if (dist_c < best_d) {
          best_d = dist_c;
          best = c;
        }
      }
      acc.counts[best] += 1;
      Point& sum = acc.sums[best];
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += p[k];
    }
    return;
  }
  fast_step_rec(*node.left, data, cents, surviving, acc, counter, audit);
  fast_step_rec(*node.right, data, cents, surviving, acc, counter, audit);
}

}  // namespace detail

/// Tree-accelerated assignment pass. Produces exactly the accumulator of
/// naive_kmeans_step (same assignments under the same tie-break), pruning
/// candidate centroids on the way down and awarding whole nodes from their
/// cached count and centroid when a single candidate survives.
inline StepAccumulator fast_kmeans_step(const TreeNode& root, const Dataset& data,
                                        const CentroidSet& cents,
                                        DistanceCounter& counter,
                                        const KmeansStepAudit* audit = nullptr) {
  if (cents.empty()) throw std::invalid_argument("fast_kmeans_step: no centroids");
  if (root.count != data.size()) {
    throw std::invalid_argument("fast_kmeans_step: tree does not cover the dataset");
  }
  if (cents.front().size() != data.dim()) {
    throw std::invalid_argument("fast_kmeans_step: centroid dimension mismatch");
  }
  StepAccumulator acc(cents.size(), data.dim());
  std::vector<std::size_t> cands(cents.size());
  for (std::size_t c = 0; c < cands.size(); ++c) cands[c] = c;
  detail::fast_step_rec(root, data, cents, cands, acc, counter, audit);
  return acc;
}

/// Sum over all points of squared distance to the nearest centroid.
inline double distortion(const Dataset& data, const CentroidSet& cents,
                         DistanceCounter& counter) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point& c : cents) {
      const double d = distance(data[i], c, counter);
      if (d < best) best = d;
    }
    total += best * best;
  }
  return total;
}

/// K distinct dataset points, seeded.
inline CentroidSet random_centroids(const Dataset& data, std::size_t k,
                                    std::uint64_t seed) {
  if (k > data.size()) throw std::invalid_argument("random_centroids: k > R");
  Rng rng(seed);
  CentroidSet cents;
  cents.reserve(k);
  for (std::size_t idx : sample_without_replacement(data.size(), k, rng)) {
    PointView p = data[idx];
    cents.emplace_back(p.begin(), p.end());
  }
  return cents;
}

enum class KmeansInit { random_points, anchor_centroids };

struct KmeansResult {
  CentroidSet centroids;
  std::vector<double> distortion_trace;  // entry 0 is the initial distortion
  std::size_t iterations = 0;
  std::uint64_t step_distance_count = 0;
};

/// Lloyd iterations: one assignment pass per iteration (accelerated when a
/// tree is supplied), centroids re-estimated as sum/count, empty clusters
/// keep their previous location. Stops after max_iters or when no centroid
/// moves more than 1e-12. Step evaluations are charged to `counter`;
/// the distortion trace is instrumentation and keeps its own books.
inline KmeansResult run_kmeans(const Dataset& data, const TreeNode* root,
                               CentroidSet initial, std::size_t max_iters,
                               DistanceCounter& counter) {
  if (initial.empty()) throw std::invalid_argument("run_kmeans: no centroids");
  if (initial.size() > data.size()) throw std::invalid_argument("run_kmeans: K > R");

  KmeansResult result;
  result.centroids = std::move(initial);
  DistanceCounter instrumentation;
  result.distortion_trace.push_back(distortion(data, result.centroids, instrumentation));

  const std::uint64_t start_count = counter.count();
  for (std::size_t iter = 1; iter <= max_iters; ++iter) {
    const StepAccumulator acc =
        root ? fast_kmeans_step(*root, data, result.centroids, counter)
             : naive_kmeans_step(data, result.centroids, counter);

    double moved = 0.0;
    for (std::size_t c = 0; c < result.centroids.size(); ++c) {
      if (acc.counts[c] == 0) continue;  // keep previous location
      Point next = acc.sums[c];
      const double cnt = static_cast<double>(acc.counts[c]);
      for (double& v : next) v /= cnt;
      moved = std::max(moved, uncounted_distance(next, result.centroids[c]));
      result.centroids[c] = std::move(next);
    }
    result.iterations = iter;
    result.distortion_trace.push_back(
        distortion(data, result.centroids, instrumentation));
    if (moved <= 1e-12) break;
  }
  result.step_distance_count = counter.count() - start_count;
  return result;
}

/// Convenience entry point covering both initializations. Anchor seeding
/// charges its construction to `init_counter` when given (else uncharged).
inline KmeansResult run_kmeans(const Dataset& data, const TreeNode* root,
                               KmeansInit init, std::uint64_t seed, std::size_t k,
                               std::size_t max_iters, DistanceCounter& counter,
                               DistanceCounter* init_counter = nullptr) {
  if (k == 0) throw std::invalid_argument("run_kmeans: K must be positive");
  if (k > data.size()) throw std::invalid_argument("run_kmeans: K > R");
  CentroidSet cents;
  if (init == KmeansInit::random_points) {
    cents = random_centroids(data, k, seed);
  } else {
    DistanceCounter scratch;
    DistanceCounter& target = init_counter ? *init_counter : scratch;
    cents = anchors_as_seed_centroids(build_anchors(data, k, target, seed));
  }
  return run_kmeans(data, root, std::move(cents), max_iters, counter);
}

}  // namespace anchors
