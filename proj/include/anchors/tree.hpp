/**
 * anchors: metric trees with cached sufficient statistics
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <ostream>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "anchors/anchors.hpp"
#include "anchors/core.hpp"
#include "anchors/rng.hpp"

namespace anchors {

enum class TreeBuilder { middle_out, top_down };

struct BuildConfig {
  std::size_t r_min = 30;  // leaf threshold
  TreeBuilder builder = TreeBuilder::middle_out;
  std::uint64_t seed = 0;
  // When set, a post-build pass rescans every node's points and tightens
  // interior radii from containment bounds to exact maxima.
  bool exact_radius = false;
};

/// Binary metric-tree node decorated with cached sufficient statistics.
/// `radius` is always a valid containment bound: every owned point lies
/// within `radius` of `pivot`. Leaves carry their owned dataset indices.
struct TreeNode {
  Point pivot;
  double radius = 0.0;
  std::size_t count = 0;
  Point centroid;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;
  std::vector<std::size_t> points;  // leaf payload, ascending

  bool is_leaf() const noexcept { return left == nullptr; }
};

/// All dataset indices owned by `node`, ascending.
inline std::vector<std::size_t> collect_points(const TreeNode& node) {
  std::vector<std::size_t> out;
  out.reserve(node.count);
  const auto walk = [&out](const TreeNode& n, const auto& self) -> void {
    if (n.is_leaf()) {
      out.insert(out.end(), n.points.begin(), n.points.end());
      return;
    }
    self(*n.left, self);
    self(*n.right, self);
  };
  walk(node, walk);
  std::sort(out.begin(), out.end());
  return out;
}

/// Radius of the smallest ball containing both nodes' bounding balls:
/// max(r1, r2) when one ball contains the other, else (d + r1 + r2) / 2.
/// Smaller means more mergeable.
inline double node_compatibility(const TreeNode& n1, const TreeNode& n2,
                                 DistanceCounter& counter) {
  const double d = distance(n1.pivot, n2.pivot, counter);
  const double rmin = std::min(n1.radius, n2.radius);
  const double rmax = std::max(n1.radius, n2.radius);
  if (d + rmin <= rmax) return rmax;
  return (d + n1.radius + n2.radius) / 2.0;
}

namespace detail {

// Same enclosing-ball radius, from an already-cached pivot distance.
inline double compatibility_from_distance(double d, double r1, double r2) {
  const double rmin = std::min(r1, r2);
  const double rmax = std::max(r1, r2);
  if (d + rmin <= rmax) return rmax;
  return (d + r1 + r2) / 2.0;
}

}  // namespace detail

/// Merges two nonempty nodes under a fresh parent. The parent pivot is the
/// mass-weighted mean of the child centroids; its radius is the containment
/// bound max_i(distance(pivot, child_i.pivot) + child_i.radius).
inline std::unique_ptr<TreeNode> merge_nodes(std::unique_ptr<TreeNode> n1,
                                             std::unique_ptr<TreeNode> n2,
                                             DistanceCounter& counter) {
  if (!n1 || !n2 || n1->count == 0 || n2->count == 0) {
    throw std::invalid_argument("merge_nodes: children must own points");
  }
  auto parent = std::make_unique<TreeNode>();
  parent->count = n1->count + n2->count;
  const double w1 = static_cast<double>(n1->count) / static_cast<double>(parent->count);
  const double w2 = static_cast<double>(n2->count) / static_cast<double>(parent->count);
  parent->centroid.resize(n1->centroid.size());
  for (std::size_t c = 0; c < parent->centroid.size(); ++c) {
    parent->centroid[c] = w1 * n1->centroid[c] + w2 * n2->centroid[c];
  }
  parent->pivot = parent->centroid;
  const double b1 = distance(parent->pivot, n1->pivot, counter) + n1->radius;
  const double b2 = distance(parent->pivot, n2->pivot, counter) + n2->radius;
  parent->radius = std::max(b1, b2);
  parent->left = std::move(n1);
  parent->right = std::move(n2);
  return parent;
}

namespace detail {

// Leaf over `subset`: pivot = centroid, exact radius.
inline std::unique_ptr<TreeNode> make_leaf(const Dataset& data,
                                           std::vector<std::size_t> subset,
                                           DistanceCounter& counter) {
  std::sort(subset.begin(), subset.end());
  auto node = std::make_unique<TreeNode>();
  node->centroid = centroid(data, subset);
  node->pivot = node->centroid;
  node->count = subset.size();
  double radius = 0.0;
  for (std::size_t idx : subset) {
    radius = std::max(radius, distance(node->pivot, data[idx], counter));
  }
  node->radius = radius;
  node->points = std::move(subset);
  return node;
}

}  // namespace detail

/// Top-down builder. Pivot = centroid of the subset, exact radius. Splits
/// pick f1 (furthest from the pivot) and f2 (furthest from f1), assign each
/// point to the nearer of the two, then reassign once against the tentative
/// child centroids; ties and index ties go low. Subsets at or below r_min,
/// and zero-diameter subsets, become leaves.
inline std::unique_ptr<TreeNode> build_top_down(const Dataset& data,
                                                std::vector<std::size_t> subset,
                                                const BuildConfig& cfg,
                                                DistanceCounter& counter) {
  if (cfg.r_min == 0) throw std::invalid_argument("BuildConfig: r_min must be >= 1");
  if (subset.empty()) throw std::invalid_argument("build_top_down: empty subset");
  std::sort(subset.begin(), subset.end());
  const std::size_t n = subset.size();

  auto node = std::make_unique<TreeNode>();
  node->centroid = centroid(data, subset);
  node->pivot = node->centroid;
  node->count = n;

  std::vector<double> dist_pivot(n);
  double radius = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dist_pivot[i] = distance(node->pivot, data[subset[i]], counter);
    radius = std::max(radius, dist_pivot[i]);
  }
  node->radius = radius;

  if (n <= cfg.r_min || radius == 0.0) {
    node->points = std::move(subset);
    return node;
  }

  const auto argmax = [n](const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (v[i] > v[best]) best = i;
    }
    return best;
  };

  const std::size_t f1 = argmax(dist_pivot);
  std::vector<double> dist_f1(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist_f1[i] = i == f1 ? 0.0 : distance(data[subset[f1]], data[subset[i]], counter);
  }
  const std::size_t f2 = argmax(dist_f1);
  if (dist_f1[f2] == 0.0) {
    // Zero diameter (the radius can still be a hair above zero when the
    // mean is not representable): no split can make progress.
    node->points = std::move(subset);
    return node;
  }
  std::vector<double> dist_f2(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist_f2[i] = i == f2 ? 0.0 : distance(data[subset[f2]], data[subset[i]], counter);
  }

  std::vector<bool> to_first(n);
  std::vector<std::size_t> side1, side2;
  for (std::size_t i = 0; i < n; ++i) {
    to_first[i] = dist_f1[i] <= dist_f2[i];
    (to_first[i] ? side1 : side2).push_back(subset[i]);
  }

  // One refinement pass against the tentative child centroids.
  const Point c1 = centroid(data, side1);
  const Point c2 = centroid(data, side2);
  std::vector<std::size_t> r1, r2;
  for (std::size_t i = 0; i < n; ++i) {
    const double d1 = distance(c1, data[subset[i]], counter);
    const double d2 = distance(c2, data[subset[i]], counter);
    (d1 <= d2 ? r1 : r2).push_back(subset[i]);
  }
  if (!r1.empty() && !r2.empty()) {
    side1 = std::move(r1);
    side2 = std::move(r2);
  }

  node->left = build_top_down(data, std::move(side1), cfg, counter);
  node->right = build_top_down(data, std::move(side2), cfg, counter);
  return node;
}

namespace detail {

inline std::unique_ptr<TreeNode> build_middle_out_impl(const Dataset& data,
                                                       std::vector<std::size_t> subset,
                                                       const BuildConfig& cfg,
                                                       DistanceCounter& counter,
                                                       Rng& rng) {
  if (subset.empty()) throw std::invalid_argument("build_middle_out: empty subset");
  const std::size_t n = subset.size();
  if (n <= cfg.r_min) return make_leaf(data, std::move(subset), counter);

  const std::size_t want =
      std::max<std::size_t>(2, static_cast<std::size_t>(
                                   std::ceil(std::sqrt(static_cast<double>(n)))));
  AnchorSet aset = build_anchors(data, subset, std::min(want, n), counter, rng);

  // Anchor-stage nodes: pivot = anchor pivot, radius exact from the cache.
  std::vector<std::unique_ptr<TreeNode>> nodes;
  std::vector<TreeNode*> anchor_nodes;
  std::vector<std::size_t> node_anchor;  // node id -> anchor id
  for (std::size_t ai = 0; ai < aset.size(); ++ai) {
    const Anchor& a = aset[ai];
    if (a.owned.empty()) continue;
    auto node = std::make_unique<TreeNode>();
    PointView pv = data[a.pivot_index];
    node->pivot.assign(pv.begin(), pv.end());
    node->radius = a.radius();
    node->count = a.owned.size();
    node->points.reserve(a.owned.size());
    for (const OwnedEntry& e : a.owned) node->points.push_back(e.index);
    std::sort(node->points.begin(), node->points.end());
    node->centroid = centroid(data, node->points);
    anchor_nodes.push_back(node.get());
    node_anchor.push_back(ai);
    nodes.push_back(std::move(node));
  }

  // Zero-diameter subsets (every anchor ball degenerate and coincident)
  // become leaves: no split can make progress.
  bool degenerate = nodes.size() == 1;
  if (!degenerate) {
    degenerate = true;
    for (std::size_t i = 0; i < nodes.size() && degenerate; ++i) {
      if (nodes[i]->radius != 0.0) degenerate = false;
      for (std::size_t j = i + 1; j < nodes.size() && degenerate; ++j) {
        if (aset.pivot_distance(node_anchor[i], node_anchor[j]) != 0.0) degenerate = false;
      }
    }
  }
  if (degenerate) {
    return make_leaf(data, std::move(subset), counter);
  }

  // Greedy agglomeration of the most compatible live pair. Initial pair
  // distances come from the anchor set's cached inter-pivot table.
  struct PairEntry {
    double compat;
    std::size_t a, b;  // node ids, a < b
  };
  const auto worse = [](const PairEntry& x, const PairEntry& y) {
    return std::tie(x.compat, x.a, x.b) > std::tie(y.compat, y.a, y.b);
  };
  std::priority_queue<PairEntry, std::vector<PairEntry>, decltype(worse)> queue(worse);

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const double d = aset.pivot_distance(node_anchor[i], node_anchor[j]);
      queue.push({compatibility_from_distance(d, nodes[i]->radius, nodes[j]->radius),
                  i, j});
    }
  }

  std::size_t live = nodes.size();
  while (live > 1) {
    const PairEntry top = queue.top();
    queue.pop();
    if (!nodes[top.a] || !nodes[top.b]) continue;  // stale entry
    auto parent = merge_nodes(std::move(nodes[top.a]), std::move(nodes[top.b]), counter);
    const std::size_t id = nodes.size();
    nodes.push_back(std::move(parent));
    --live;
    for (std::size_t i = 0; i < id; ++i) {
      if (!nodes[i]) continue;
      queue.push({node_compatibility(*nodes[i], *nodes[id], counter), i, id});
    }
  }
  std::unique_ptr<TreeNode> root = std::move(nodes.back());

  // Subdivide each anchor-stage leaf by recursing on its owned points.
  // Seeds are drawn in anchor order so structure does not depend on
  // traversal order.
  for (TreeNode* leaf : anchor_nodes) {
    Rng leaf_rng(rng.next());
    auto subtree =
        build_middle_out_impl(data, std::move(leaf->points), cfg, counter, leaf_rng);
    *leaf = std::move(*subtree);
  }
  return root;
}

inline void tighten_radii(const Dataset& data, TreeNode& node,
                          DistanceCounter& counter) {
  const std::vector<std::size_t> owned = collect_points(node);
  double radius = 0.0;
  for (std::size_t idx : owned) {
    radius = std::max(radius, distance(node.pivot, data[idx], counter));
  }
  node.radius = radius;
  if (!node.is_leaf()) {
    tighten_radii(data, *node.left, counter);
    tighten_radii(data, *node.right, counter);
  }
}

}  // namespace detail

/// Middle-out builder: ceil(sqrt(n)) anchors over the subset, agglomerated
/// bottom-up by compatibility into a single root, then each anchor-stage
/// leaf is replaced by recursively rebuilding over its owned points.
inline std::unique_ptr<TreeNode> build_middle_out(const Dataset& data,
                                                  std::vector<std::size_t> subset,
                                                  const BuildConfig& cfg,
                                                  DistanceCounter& counter) {
  if (cfg.r_min == 0) throw std::invalid_argument("BuildConfig: r_min must be >= 1");
  Rng rng(cfg.seed);
  std::sort(subset.begin(), subset.end());
  auto root = detail::build_middle_out_impl(data, std::move(subset), cfg, counter, rng);
  if (cfg.exact_radius) detail::tighten_radii(data, *root, counter);
  return root;
}

/// Builds over the whole dataset with the configured builder.
inline std::unique_ptr<TreeNode> build_tree(const Dataset& data, const BuildConfig& cfg,
                                            DistanceCounter& counter) {
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (cfg.builder == TreeBuilder::top_down) {
    // Top-down radii are exact by construction; no tightening pass needed.
    return build_top_down(data, std::move(all), cfg, counter);
  }
  return build_middle_out(data, std::move(all), cfg, counter);
}

/// Structural audit: containment, partition, cached-statistics consistency,
/// and the leaf-size bound. An empty report means the tree is valid.
struct TreeDiagnostics {
  std::vector<std::string> violations;
  std::size_t nodes_checked = 0;

  bool ok() const noexcept { return violations.empty(); }
};

inline TreeDiagnostics validate_tree(const Dataset& data, const TreeNode& root,
                                     std::size_t r_min) {
  TreeDiagnostics diag;
  const auto complain = [&diag](std::string msg) {
    if (diag.violations.size() < 64) diag.violations.push_back(std::move(msg));
  };

  // Returns the sorted owned indices of `node`.
  const auto walk = [&](const TreeNode& node, const auto& self) -> std::vector<std::size_t> {
    ++diag.nodes_checked;
    std::vector<std::size_t> owned;
    if (node.is_leaf()) {
      owned = node.points;
      std::sort(owned.begin(), owned.end());
      bool degenerate = true;
      for (std::size_t idx : owned) {
        if (uncounted_distance(data[idx], data[owned.front()]) != 0.0) {
          degenerate = false;
          break;
        }
      }
      if (owned.size() > r_min && !degenerate) {
        complain("leaf exceeds r_min with non-identical points (count=" +
                 std::to_string(owned.size()) + ")");
      }
      Point direct = centroid(data, owned);
      double err = 0.0, scale = 0.0;
      for (std::size_t c = 0; c < direct.size(); ++c) {
        err += (direct[c] - node.centroid[c]) * (direct[c] - node.centroid[c]);
        scale += node.centroid[c] * node.centroid[c];
      }
      if (std::sqrt(err) > 1e-9 * (1.0 + std::sqrt(scale))) {
        complain("leaf centroid differs from direct mean");
      }
    } else {
      std::vector<std::size_t> lo = self(*node.left, self);
      std::vector<std::size_t> ro = self(*node.right, self);
      if (node.left->count + node.right->count != node.count) {
        complain("count != sum of child counts");
      }
      owned.resize(lo.size() + ro.size());
      std::merge(lo.begin(), lo.end(), ro.begin(), ro.end(), owned.begin());
      for (std::size_t i = 1; i < owned.size(); ++i) {
        if (owned[i] == owned[i - 1]) {
          complain("children overlap at index " + std::to_string(owned[i]));
          break;
        }
      }
      const double total = static_cast<double>(node.left->count + node.right->count);
      double err = 0.0, scale = 0.0;
      for (std::size_t c = 0; c < node.centroid.size(); ++c) {
        const double mean = (static_cast<double>(node.left->count) * node.left->centroid[c] +
                             static_cast<double>(node.right->count) * node.right->centroid[c]) /
                            total;
        err += (mean - node.centroid[c]) * (mean - node.centroid[c]);
        scale += node.centroid[c] * node.centroid[c];
      }
      if (std::sqrt(err) > 1e-9 * (1.0 + std::sqrt(scale))) {
        complain("centroid differs from weighted child mean");
      }
    }
    if (owned.size() != node.count) {
      complain("count field disagrees with owned points (" +
               std::to_string(node.count) + " vs " + std::to_string(owned.size()) + ")");
    }
    const double slack = 1e-9 * (1.0 + node.radius);
    for (std::size_t idx : owned) {
      if (uncounted_distance(node.pivot, data[idx]) > node.radius + slack) {
        complain("containment violated at index " + std::to_string(idx));
        break;
      }
    }
    return owned;
  };

  const std::vector<std::size_t> all = walk(root, walk);
  if (all.size() != data.size()) {
    complain("root does not own the whole dataset");
  } else {
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i] != i) {
        complain("root ownership is not a permutation of 0..R-1");
        break;
      }
    }
  }
  return diag;
}

/// Per-node statistics as TSV: id (preorder), depth, count, radius, leaf.
inline void dump_tree_stats(const TreeNode& root, std::ostream& out) {
  out << "id\tdepth\tcount\tradius\tleaf\n";
  std::size_t next_id = 0;
  const auto walk = [&](const TreeNode& node, std::size_t depth, const auto& self) -> void {
    out << next_id++ << '\t' << depth << '\t' << node.count << '\t' << node.radius
        << '\t' << (node.is_leaf() ? 1 : 0) << '\n';
    if (!node.is_leaf()) {
      self(*node.left, depth + 1, self);
      self(*node.right, depth + 1, self);
    }
  };
  walk(root, 0, walk);
}

}  // namespace anchors
