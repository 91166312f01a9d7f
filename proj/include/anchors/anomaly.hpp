/**
 * anchors: metric trees with cached sufficient statistics
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */

#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "anchors/core.hpp"
#include "anchors/tree.hpp"

namespace anchors {

/// A point is anomalous when fewer than `threshold` dataset points lie
/// within `range` of it ("within" is inclusive, distance <= range). A query
/// point that is itself a dataset point counts toward its own neighborhood;
/// callers screening dataset points should pass threshold + 1.
struct AnomalyQuery {
  Point query;
  double range = 0.0;
  std::size_t threshold = 0;
};

/// Test hook: invoked after every confirmed/possible update.
using RangeCountObserver = std::function<void(std::size_t confirmed, std::size_t possible)>;

namespace detail {

struct RangeCountState {
  std::size_t confirmed = 0;  // points proven within range
  std::size_t possible = 0;   // upper bound on points within range
};

// Depth-first traversal, closer child first. Rules:
//   1. node ball inside the query ball  -> confirmed += count
//   2. node ball outside the query ball -> possible -= count
//   3. confirmed >= threshold           -> verdict FALSE (early)
//   4. possible < threshold             -> verdict TRUE (early)
// `early` disables rules 3-4 so the traversal runs to an exact count.
inline std::optional<bool> range_count_rec(const TreeNode& node, const Dataset& data,
                                           const AnomalyQuery& q, double dist_to_pivot,
                                           RangeCountState& state, bool early,
                                           DistanceCounter& counter,
                                           const RangeCountObserver* observer) {
  const auto note = [&] {
    if (observer) (*observer)(state.confirmed, state.possible);
  };
  if (dist_to_pivot + node.radius <= q.range) {
    state.confirmed += node.count;
    note();
    if (early && state.confirmed >= q.threshold) return false;
    return std::nullopt;
  }
  if (dist_to_pivot - node.radius > q.range) {
    state.possible -= node.count;
    note();
    if (early && state.possible < q.threshold) return true;
    return std::nullopt;
  }
  if (node.is_leaf()) {
    for (std::size_t idx : node.points) {
      if (distance(q.query, data[idx], counter) <= q.range) {
        state.confirmed += 1;
        note();
        if (early && state.confirmed >= q.threshold) return false;
      } else {
        state.possible -= 1;
        note();
        if (early && state.possible < q.threshold) return true;
      }
    }
    return std::nullopt;
  }
  const double dl = distance(q.query, node.left->pivot, counter);
  const double dr = distance(q.query, node.right->pivot, counter);
  const TreeNode* first = node.left.get();
  const TreeNode* second = node.right.get();
  double df = dl, ds = dr;
  if (dr < dl) {
    std::swap(first, second);
    std::swap(df, ds);
  }
  if (auto verdict = range_count_rec(*first, data, q, df, state, early, counter, observer)) {
    return verdict;
  }
  return range_count_rec(*second, data, q, ds, state, early, counter, observer);
}

inline RangeCountState run_range_search(const TreeNode& root, const Dataset& data,
                                        const AnomalyQuery& q, bool early,
                                        DistanceCounter& counter,
                                        const RangeCountObserver* observer,
                                        std::optional<bool>& verdict) {
  if (q.range < 0.0) throw std::invalid_argument("range must be nonnegative");
  if (root.count != data.size()) {
    throw std::invalid_argument("range search: tree does not cover the dataset");
  }
  RangeCountState state;
  state.possible = root.count;
  if (early && state.confirmed >= q.threshold) {
    verdict = false;  // threshold 0: no count can be below it
    return state;
  }
  if (early && state.possible < q.threshold) {
    verdict = true;
    return state;
  }
  const double d0 = distance(q.query, root.pivot, counter);
  verdict = range_count_rec(root, data, q, d0, state, early, counter, observer);
  return state;
}

}  // namespace detail

/// Accelerated anomaly verdict with early exit: TRUE iff fewer than
/// q.threshold points lie within q.range of the query.
inline bool is_anomaly(const TreeNode& root, const Dataset& data, const AnomalyQuery& q,
                       DistanceCounter& counter,
                       const RangeCountObserver* observer = nullptr) {
  std::optional<bool> verdict;
  const detail::RangeCountState state =
      detail::run_range_search(root, data, q, /*early=*/true, counter, observer, verdict);
  if (verdict) return *verdict;
  return state.confirmed < q.threshold;
}

/// Accelerated exact in-range count (pruning rules 1-2 only, no early exit).
inline std::size_t tree_range_count(const TreeNode& root, const Dataset& data,
                                    const AnomalyQuery& q, DistanceCounter& counter,
                                    const RangeCountObserver* observer = nullptr) {
  std::optional<bool> verdict;
  const detail::RangeCountState state =
      detail::run_range_search(root, data, q, /*early=*/false, counter, observer, verdict);
  return state.confirmed;
}

/// Oracle: exhaustive in-range count. Costs exactly R evaluations.
inline std::size_t brute_force_range_count(const Dataset& data, const AnomalyQuery& q,
                                           DistanceCounter& counter) {
  if (q.range < 0.0) throw std::invalid_argument("range must be nonnegative");
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (distance(q.query, data[i], counter) <= q.range) ++count;
  }
  return count;
}

}  // namespace anchors
