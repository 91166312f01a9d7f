/**
 * anchors: metric trees with cached sufficient statistics
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "anchors/core.hpp"
#include "anchors/tree.hpp"

namespace anchors {

/// Attribute columns recast as points: one point per kept attribute, each
/// centered to zero mean and scaled to unit Euclidean norm, so that
/// rho(x, y) = 1 - D^2(x*, y*) / 2 holds exactly. `kept[i]` maps point i
/// back to its original column; constant columns are dropped.
struct NormalizedAttributes {
  Dataset points;
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
};

/// Transposes an R x M matrix (rows = records) and normalizes each column.
/// A column counts as constant when its centered norm is at most
/// 1e-12 * sqrt(R) * (1 + |mean|).
inline NormalizedAttributes normalize_attributes(const Dataset& matrix) {
  const std::size_t rows = matrix.size();
  const std::size_t cols = matrix.dim();
  if (rows < 2) throw std::invalid_argument("normalize_attributes: need at least 2 rows");

  std::vector<double> values;
  std::vector<std::size_t> kept, dropped;
  std::vector<double> column(rows);
  for (std::size_t j = 0; j < cols; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < rows; ++i) mean += matrix[i][j];
    mean /= static_cast<double>(rows);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      column[i] = matrix[i][j] - mean;
      norm_sq += column[i] * column[i];
    }
    const double norm = std::sqrt(norm_sq);
    if (norm <= 1e-12 * std::sqrt(static_cast<double>(rows)) * (1.0 + std::abs(mean))) {
      dropped.push_back(j);
      continue;
    }
    for (std::size_t i = 0; i < rows; ++i) values.push_back(column[i] / norm);
    kept.push_back(j);
  }
  if (kept.empty()) {
    throw std::invalid_argument("normalize_attributes: every column is constant");
  }
  return NormalizedAttributes{Dataset(std::move(values), rows), std::move(kept),
                              std::move(dropped)};
}

/// Distance on normalized attributes equivalent to a correlation level:
/// pairs with rho >= `rho` are exactly the pairs with distance <= the
/// returned value, sqrt(2 - 2 rho).
inline double correlation_threshold_to_distance(double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) {
    throw std::invalid_argument("correlation threshold must lie in [-1, 1]");
  }
  return std::sqrt(2.0 - 2.0 * rho);
}

struct CorrelatedPair {
  std::size_t i, j;  // original attribute indices, i < j
  double rho;
};

/// Qualifying pairs in canonical order (ascending i, then j).
struct CorrelatedPairSet {
  std::vector<CorrelatedPair> pairs;
};

namespace detail {

inline void canonicalize(CorrelatedPairSet& set) {
  std::sort(set.pairs.begin(), set.pairs.end(),
            [](const CorrelatedPair& a, const CorrelatedPair& b) {
              if (a.i != b.i) return a.i < b.i;
              return a.j < b.j;
            });
}

inline double dot(PointView a, PointView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct PairSearch {
  const NormalizedAttributes& norm;
  double d_max;
  DistanceCounter& counter;
  CorrelatedPairSet out;

  void emit_checked(std::size_t pi, std::size_t pj, double dist) {
    std::size_t i = norm.kept[pi];
    std::size_t j = norm.kept[pj];
    if (i > j) std::swap(i, j);
    out.pairs.push_back({i, j, 1.0 - dist * dist / 2.0});
  }

  // All cross pairs qualify; rho is recomputed from the dot product since
  // no distance was ever evaluated for them.
  void emit_all(const TreeNode& a, const TreeNode& b) {
    const std::vector<std::size_t> pa = collect_points(a);
    const std::vector<std::size_t> pb = collect_points(b);
    for (std::size_t pi : pa) {
      for (std::size_t pj : pb) {
        std::size_t i = norm.kept[pi];
        std::size_t j = norm.kept[pj];
        if (i > j) std::swap(i, j);
        out.pairs.push_back({i, j, dot(norm.points[pi], norm.points[pj])});
      }
    }
  }

  void check_pair(std::size_t pi, std::size_t pj) {
    const double d = distance(norm.points[pi], norm.points[pj], counter);
    if (d <= d_max) emit_checked(pi, pj, d);
  }

  void self(const TreeNode& n) {
    if (n.is_leaf()) {
      for (std::size_t a = 0; a < n.points.size(); ++a) {
        for (std::size_t b = a + 1; b < n.points.size(); ++b) {
          check_pair(n.points[a], n.points[b]);
        }
      }
      return;
    }
    self(*n.left);
    self(*n.right);
    cross(*n.left, *n.right);
  }

  void cross(const TreeNode& n1, const TreeNode& n2) {
    const double d = distance(n1.pivot, n2.pivot, counter);
    if (d - n1.radius - n2.radius > d_max) return;  // no pair can qualify
    if (d + n1.radius + n2.radius <= d_max) {
      emit_all(n1, n2);
      return;
    }
    if (n1.is_leaf() && n2.is_leaf()) {
      for (std::size_t pi : n1.points) {
        for (std::size_t pj : n2.points) check_pair(pi, pj);
      }
      return;
    }
    // Split the wider side; a leaf forces the other.
    const bool split_first =
        n2.is_leaf() || (!n1.is_leaf() && n1.radius >= n2.radius);
    if (split_first) {
      cross(*n1.left, n2);
      cross(*n1.right, n2);
    } else {
      cross(n1, *n2.left);
      cross(n1, *n2.right);
    }
  }
};

}  // namespace detail

/// Oracle: exhaustive M(M-1)/2 scan over kept attributes with the distance
/// form of the threshold.
inline CorrelatedPairSet brute_force_pairs(const NormalizedAttributes& norm,
                                           double rho_min, DistanceCounter& counter) {
  if (norm.points.size() < 2) {
    throw std::invalid_argument("brute_force_pairs: need at least 2 attributes");
  }
  const double d_max = correlation_threshold_to_distance(rho_min);
  CorrelatedPairSet out;
  for (std::size_t a = 0; a < norm.points.size(); ++a) {
    for (std::size_t b = a + 1; b < norm.points.size(); ++b) {
      const double d = distance(norm.points[a], norm.points[b], counter);
      if (d <= d_max) {
        out.pairs.push_back({norm.kept[a], norm.kept[b], 1.0 - d * d / 2.0});
      }
    }
  }
  detail::canonicalize(out);
  return out;
}

/// Dual-tree search for every attribute pair with rho >= rho_min. Builds a
/// metric tree over the normalized attribute points (charged to
/// `build_counter` when given, else to `counter`), then recurses over node
/// pairs, pruning pairs that cannot qualify and emitting whole cross
/// products that must.
inline CorrelatedPairSet find_correlated_pairs(const NormalizedAttributes& norm,
                                               double rho_min, const BuildConfig& cfg,
                                               DistanceCounter& counter,
                                               DistanceCounter* build_counter = nullptr) {
  if (norm.points.size() < 2) {
    throw std::invalid_argument("find_correlated_pairs: need at least 2 attributes");
  }
  DistanceCounter& build_target = build_counter ? *build_counter : counter;
  const auto root = build_tree(norm.points, cfg, build_target);

  detail::PairSearch search{norm, correlation_threshold_to_distance(rho_min), counter, {}};
  search.self(*root);
  detail::canonicalize(search.out);
  return std::move(search.out);
}

}  // namespace anchors
