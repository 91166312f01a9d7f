/**
 * anchors: metric trees with cached sufficient statistics
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "anchors/core.hpp"
#include "anchors/rng.hpp"

namespace anchors {

/// One entry of an anchor's owned list: a dataset index plus its cached
/// distance to the anchor pivot.
struct OwnedEntry {
  std::size_t index;
  double dist;
};

/// A pivot point plus the points closer to it than to any other anchor's
/// pivot. The owned list (which includes the pivot itself, at distance 0)
/// is kept sorted by nonincreasing cached distance, ties by ascending
/// index, so the radius is always the head entry.
struct Anchor {
  std::size_t pivot_index;
  std::vector<OwnedEntry> owned;

  double radius() const noexcept { return owned.empty() ? 0.0 : owned.front().dist; }
};

namespace detail {

inline void sort_owned(std::vector<OwnedEntry>& owned) {
  std::sort(owned.begin(), owned.end(), [](const OwnedEntry& a, const OwnedEntry& b) {
    if (a.dist != b.dist) return a.dist > b.dist;
    return a.index < b.index;
  });
}

}  // namespace detail

/// A growing partition of (a subset of) a dataset among anchors.
/// All inter-pivot distances are cached; adding an anchor steals points
/// from existing anchors, cutting each scan off early once the sorted
/// cached distances prove nothing further can move.
class AnchorSet {
 public:
  /// Single-anchor set: `first_pivot` owns every index in `subset`.
  /// Costs |subset| - 1 distance evaluations (the pivot's own distance is 0).
  AnchorSet(const Dataset& data, std::span<const std::size_t> subset,
            std::size_t first_pivot, DistanceCounter& counter)
      : data_(&data) {
    Anchor a;
    a.pivot_index = first_pivot;
    a.owned.reserve(subset.size());
    PointView pivot = data[first_pivot];
    bool saw_pivot = false;
    for (std::size_t idx : subset) {
      if (idx == first_pivot) {
        a.owned.push_back({idx, 0.0});
        saw_pivot = true;
      } else {
        a.owned.push_back({idx, distance(data[idx], pivot, counter)});
      }
    }
    if (!saw_pivot) {
      throw std::invalid_argument("AnchorSet: first pivot not in subset");
    }
    detail::sort_owned(a.owned);
    pivots_.insert(first_pivot);
    anchors_.push_back(std::move(a));
  }

  const Dataset& data() const noexcept { return *data_; }
  std::size_t size() const noexcept { return anchors_.size(); }
  const Anchor& operator[](std::size_t i) const { return anchors_[i]; }
  const std::vector<Anchor>& anchors() const noexcept { return anchors_; }
  bool is_pivot(std::size_t index) const { return pivots_.contains(index); }

  /// Cached pivot-to-pivot distance, symmetric.
  double pivot_distance(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    if (i < j) std::swap(i, j);
    return inter_[i * (i - 1) / 2 + j];
  }

  /// The furthest owned point of the maximum-radius anchor (radius ties go
  /// to the lowest anchor index). Costs zero distance evaluations. Entries
  /// that are already pivots are skipped (possible only with duplicate
  /// points); throws when saturated.
  std::size_t choose_next_anchor() const {
    std::vector<std::size_t> order;
    order.reserve(anchors_.size());
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
      if (anchors_[i].owned.size() >= 2) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
      return anchors_[a].radius() > anchors_[b].radius();
    });
    for (std::size_t i : order) {
      for (const OwnedEntry& e : anchors_[i].owned) {
        if (!is_pivot(e.index)) return e.index;
      }
    }
    throw std::runtime_error("choose_next_anchor: saturated (no stealable point)");
  }

  /// Appends a new anchor pivoted at `new_pivot_index` and lets it steal.
  /// Each existing anchor's sorted list is scanned from the head; the scan
  /// stops at the first entry whose cached distance drops strictly below
  /// half the pivot-to-pivot distance. A scanned point moves only when it
  /// is strictly closer to the new pivot.
  void add_anchor(std::size_t new_pivot_index, DistanceCounter& counter) {
    if (is_pivot(new_pivot_index)) {
      throw std::invalid_argument("add_anchor: duplicate anchor pivot");
    }
    const Dataset& data = *data_;
    PointView new_pivot = data[new_pivot_index];

    std::vector<double> pivot_dists(anchors_.size());
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
      pivot_dists[i] = distance(new_pivot, data[anchors_[i].pivot_index], counter);
    }

    Anchor fresh;
    fresh.pivot_index = new_pivot_index;
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
      Anchor& a = anchors_[i];
      const double cutoff = pivot_dists[i] / 2.0;
      const std::size_t stolen_before = fresh.owned.size();
      std::size_t scanned = 0;
      std::vector<OwnedEntry> kept;
      kept.reserve(a.owned.size());
      for (; scanned < a.owned.size(); ++scanned) {
        const OwnedEntry& e = a.owned[scanned];
        if (e.dist < cutoff) break;  // rest of the list is unstealable
        if (e.index == new_pivot_index) {
          fresh.owned.push_back({e.index, 0.0});
          continue;
        }
        const double d_new = distance(data[e.index], new_pivot, counter);
        if (d_new < e.dist) {
          fresh.owned.push_back({e.index, d_new});
        } else {
          kept.push_back(e);
        }
      }
      if (fresh.owned.size() == stolen_before) continue;  // nothing moved
      kept.insert(kept.end(), a.owned.begin() + scanned, a.owned.end());
      a.owned = std::move(kept);
    }
    detail::sort_owned(fresh.owned);

    inter_.insert(inter_.end(), pivot_dists.begin(), pivot_dists.end());
    pivots_.insert(new_pivot_index);
    anchors_.push_back(std::move(fresh));
  }

 private:
  const Dataset* data_;
  std::vector<Anchor> anchors_;
  std::vector<double> inter_;  // lower triangle, row i holds distances to 0..i-1
  std::unordered_set<std::size_t> pivots_;
};

/// Builds k anchors over `subset`: the first pivot is drawn from `rng`,
/// the rest are placed at the furthest owned point of the largest-radius
/// anchor.
inline AnchorSet build_anchors(const Dataset& data,
                               std::span<const std::size_t> subset, std::size_t k,
                               DistanceCounter& counter, Rng& rng) {
  if (k == 0) throw std::invalid_argument("build_anchors: k must be positive");
  if (k > subset.size()) {
    throw std::invalid_argument("build_anchors: k exceeds point count");
  }
  AnchorSet set(data, subset, subset[rng.index(subset.size())], counter);
  for (std::size_t i = 1; i < k; ++i) {
    set.add_anchor(set.choose_next_anchor(), counter);
  }
  return set;
}

inline AnchorSet build_anchors(const Dataset& data, std::size_t k,
                               DistanceCounter& counter, std::uint64_t seed) {
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  Rng rng(seed);
  return build_anchors(data, all, k, counter, rng);
}

/// One seed centroid per anchor, in anchor order: the mean of the owned
/// points (accumulated in ascending index order), or the pivot point for
/// an anchor that owns nothing.
inline std::vector<Point> anchors_as_seed_centroids(const AnchorSet& set) {
  if (set.size() == 0) throw std::invalid_argument("anchors_as_seed_centroids: empty set");
  std::vector<Point> seeds;
  seeds.reserve(set.size());
  for (const Anchor& a : set.anchors()) {
    if (a.owned.empty()) {
      PointView p = set.data()[a.pivot_index];
      seeds.emplace_back(p.begin(), p.end());
      continue;
    }
    std::vector<std::size_t> idx;
    idx.reserve(a.owned.size());
    for (const OwnedEntry& e : a.owned) idx.push_back(e.index);
    std::sort(idx.begin(), idx.end());
    seeds.push_back(centroid(set.data(), idx));
  }
  return seeds;
}

}  // namespace anchors
