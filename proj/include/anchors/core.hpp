/**
 * anchors: metric trees with cached sufficient statistics
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace anchors {

using Point = std::vector<double>;
using PointView = std::span<const double>;

/// Tally of metric evaluations, the cost unit of every experiment.
/// Counters are always passed explicitly so each run (regular, fast,
/// tree build, instrumentation) keeps its own books.
class DistanceCounter {
 public:
  void add(std::uint64_t n = 1) noexcept { count_ += n; }
  void merge(const DistanceCounter& other) noexcept { count_ += other.count_; }
  std::uint64_t count() const noexcept { return count_; }

 private:
  std::uint64_t count_ = 0;
};

namespace detail {

inline double squared_norm_diff(PointView a, PointView b) {
  // Ascending coordinate order, plain accumulation: bit-reproducible.
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace detail

/// Euclidean distance between equal-dimension points. Exactly one counter
/// increment per call.
inline double distance(PointView a, PointView b, DistanceCounter& counter) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("distance: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  counter.add();
  return std::sqrt(detail::squared_norm_diff(a, b));
}

/// The same metric, uncounted. Reserved for instrumentation arithmetic
/// (e.g. centroid convergence deltas) that is not part of an experiment's
/// reported cost.
inline double uncounted_distance(PointView a, PointView b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("distance: dimension mismatch");
  }
  return std::sqrt(detail::squared_norm_diff(a, b));
}

/// Immutable ordered collection of points with uniform dimension.
/// Indices 0..size()-1 are stable identities; storage is row-major.
class Dataset {
 public:
  Dataset(std::vector<double> values, std::size_t dim)
      : values_(std::move(values)), dim_(dim) {
    if (dim_ == 0) throw std::invalid_argument("Dataset: dimension must be >= 1");
    if (values_.empty()) throw std::invalid_argument("Dataset: no points");
    if (values_.size() % dim_ != 0) {
      throw std::invalid_argument("Dataset: value count not a multiple of dimension");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("Dataset: non-finite coordinate");
      }
    }
  }

  static Dataset from_points(const std::vector<Point>& points) {
    if (points.empty()) throw std::invalid_argument("Dataset: no points");
    const std::size_t dim = points.front().size();
    std::vector<double> values;
    values.reserve(points.size() * dim);
    for (const Point& p : points) {
      if (p.size() != dim) {
        throw std::invalid_argument("Dataset: mixed point dimensions");
      }
      values.insert(values.end(), p.begin(), p.end());
    }
    return Dataset(std::move(values), dim);
  }

  std::size_t size() const noexcept { return values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }

  PointView operator[](std::size_t i) const noexcept {
    return PointView{values_.data() + i * dim_, dim_};
  }

  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
  std::size_t dim_;
};

/// Coordinate-wise mean of the points named by `indices`, accumulated in
/// the order given. Divides rather than multiplying by a reciprocal so
/// integer-valued data keeps exact means. Never touches the distance
/// counter.
inline Point centroid(const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("centroid: empty collection");
  Point mean(data.dim(), 0.0);
  for (std::size_t idx : indices) {
    PointView p = data[idx];
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[c];
  }
  const double n = static_cast<double>(indices.size());
  for (double& v : mean) v /= n;
  return mean;
}

/// Mean of free-standing points (same accumulation convention).
inline Point centroid(std::span<const Point> points) {
  if (points.empty()) throw std::invalid_argument("centroid: empty collection");
  const std::size_t dim = points.front().size();
  Point mean(dim, 0.0);
  for (const Point& p : points) {
    if (p.size() != dim) throw std::invalid_argument("centroid: mixed dimensions");
    for (std::size_t c = 0; c < dim; ++c) mean[c] += p[c];
  }
  const double n = static_cast<double>(points.size());
  for (double& v : mean) v /= n;
  return mean;
}

}  // namespace anchors
