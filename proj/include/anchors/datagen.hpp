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
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "anchors/core.hpp"
#include "anchors/rng.hpp"

namespace anchors {

enum class GenKind { squiggles, filaments, sparse_mixture, two_class_binary };

struct GenSpec {
  GenKind kind = GenKind::squiggles;
  std::size_t r = 1000;
  std::size_t m = 2;          // two_class_binary / sparse_mixture only
  std::size_t k = 3;          // sparse_mixture components
  std::uint64_t seed = 0;
  double sparsity = 0.10;     // sparse_mixture prototype density
  double flip = 0.01;         // sparse_mixture per-coordinate flip probability
};

/// Generator provenance, exposed for measurement-style tests.
struct SquiggleTrace {
  std::vector<std::vector<Point>> curves;  // dense polylines, one per curve
  std::vector<std::size_t> point_curve;    // generating curve of each point
  double blur = 0.0;
};

struct FilamentTrace {
  std::vector<std::pair<Point, Point>> segments;
  std::vector<std::size_t> point_segment;
  double noise = 0.0;
};

struct MixtureTrace {
  std::vector<std::vector<double>> prototypes;
  std::vector<std::size_t> point_prototype;
};

namespace detail {

struct SquiggleCurve {
  double cx, cy;      // center
  double dirx, diry;  // unit direction
  double length;
  double amplitude;
  double frequency;   // cycles along the arc
  double phase;

  Point at(double t) const {
    const double along = (t - 0.5) * length;
    const double across =
        amplitude * std::sin(2.0 * std::numbers::pi * (frequency * t) + phase);
    // Perpendicular offset: rotate the direction by 90 degrees.
    return Point{cx + dirx * along - diry * across, cy + diry * along + dirx * across};
  }
};

}  // namespace detail

/// 2-d points sampled along 5 random sinusoid arcs with isotropic Gaussian
/// blur of 1% of the curves' joint bounding-box diagonal.
inline Dataset gen_squiggles(std::size_t r, std::uint64_t seed,
                             SquiggleTrace* trace = nullptr) {
  if (r == 0) throw std::invalid_argument("gen_squiggles: R must be positive");
  Rng rng(seed);
  constexpr std::size_t kCurves = 5;
  std::vector<detail::SquiggleCurve> curves;
  curves.reserve(kCurves);
  for (std::size_t c = 0; c < kCurves; ++c) {
    detail::SquiggleCurve curve;
    curve.cx = rng.uniform(0.0, 10.0);
    curve.cy = rng.uniform(0.0, 10.0);
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    curve.dirx = std::cos(theta);
    curve.diry = std::sin(theta);
    curve.length = rng.uniform(4.0, 10.0);
    curve.amplitude = rng.uniform(0.3, 1.5);
    curve.frequency = rng.uniform(1.0, 3.0);
    curve.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    curves.push_back(curve);
  }

  double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
  constexpr std::size_t kSamples = 512;
  std::vector<std::vector<Point>> polylines(kCurves);
  for (std::size_t c = 0; c < kCurves; ++c) {
    polylines[c].reserve(kSamples + 1);
    for (std::size_t s = 0; s <= kSamples; ++s) {
      Point p = curves[c].at(static_cast<double>(s) / kSamples);
      lo_x = std::min(lo_x, p[0]);
      hi_x = std::max(hi_x, p[0]);
      lo_y = std::min(lo_y, p[1]);
      hi_y = std::max(hi_y, p[1]);
      polylines[c].push_back(std::move(p));
    }
  }
  const double blur = 0.01 * std::hypot(hi_x - lo_x, hi_y - lo_y);

  std::vector<double> values;
  values.reserve(2 * r);
  std::vector<std::size_t> point_curve(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t c = rng.index(kCurves);
    point_curve[i] = c;
    const Point base = curves[c].at(rng.uniform());
    values.push_back(base[0] + blur * rng.normal());
    values.push_back(base[1] + blur * rng.normal());
  }
  if (trace) {
    trace->curves = std::move(polylines);
    trace->point_curve = std::move(point_curve);
    trace->blur = blur;
  }
  return Dataset(std::move(values), 2);
}

/// 2-d points scattered with Gaussian noise (1% of the site bounding-box
/// diagonal) along 10 random segments joining random sites.
inline Dataset gen_filaments(std::size_t r, std::uint64_t seed,
                             FilamentTrace* trace = nullptr) {
  if (r == 0) throw std::invalid_argument("gen_filaments: R must be positive");
  Rng rng(seed);
  constexpr std::size_t kSites = 12;
  constexpr std::size_t kSegments = 10;
  std::vector<Point> sites;
  sites.reserve(kSites);
  double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
  for (std::size_t s = 0; s < kSites; ++s) {
    Point p{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
    lo_x = std::min(lo_x, p[0]);
    hi_x = std::max(hi_x, p[0]);
    lo_y = std::min(lo_y, p[1]);
    hi_y = std::max(hi_y, p[1]);
    sites.push_back(std::move(p));
  }
  const double noise = 0.01 * std::hypot(hi_x - lo_x, hi_y - lo_y);

  std::vector<std::pair<Point, Point>> segments;
  segments.reserve(kSegments);
  while (segments.size() < kSegments) {
    const std::size_t a = rng.index(kSites);
    const std::size_t b = rng.index(kSites);
    if (a == b) continue;
    segments.emplace_back(sites[a], sites[b]);
  }

  std::vector<double> values;
  values.reserve(2 * r);
  std::vector<std::size_t> point_segment(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t s = rng.index(kSegments);
    point_segment[i] = s;
    const double t = rng.uniform();
    const auto& [p, q] = segments[s];
    values.push_back(p[0] + t * (q[0] - p[0]) + noise * rng.normal());
    values.push_back(p[1] + t * (q[1] - p[1]) + noise * rng.normal());
  }
  if (trace) {
    trace->segments = std::move(segments);
    trace->point_segment = std::move(point_segment);
    trace->noise = noise;
  }
  return Dataset(std::move(values), 2);
}

/// Binary points copied from k random prototypes (coordinates 1 with
/// probability `sparsity`), each coordinate flipped with probability `flip`.
inline Dataset gen_sparse_mixture(std::size_t r, std::size_t m, std::size_t k,
                                  std::uint64_t seed, double sparsity = 0.10,
                                  double flip = 0.01, MixtureTrace* trace = nullptr) {
  if (r == 0 || m == 0 || k == 0) {
    throw std::invalid_argument("gen_sparse_mixture: R, M, k must be positive");
  }
  if (k > r) throw std::invalid_argument("gen_sparse_mixture: k > R");
  Rng rng(seed);
  std::vector<std::vector<double>> prototypes(k, std::vector<double>(m));
  for (auto& proto : prototypes) {
    for (double& v : proto) v = rng.uniform() < sparsity ? 1.0 : 0.0;
  }
  std::vector<double> values;
  values.reserve(r * m);
  std::vector<std::size_t> point_prototype(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t p = rng.index(k);
    point_prototype[i] = p;
    for (std::size_t c = 0; c < m; ++c) {
      const bool flipped = rng.uniform() < flip;
      values.push_back(flipped ? 1.0 - prototypes[p][c] : prototypes[p][c]);
    }
  }
  if (trace) {
    trace->prototypes = std::move(prototypes);
    trace->point_prototype = std::move(point_prototype);
  }
  return Dataset(std::move(values), m);
}

/// Two classes of binary points, R/2 each (class 0 first). The first
/// floor(M/5) attributes are 1 with probability 1/3 for class 0 and 2/3 for
/// class 1; the rest are 1 with probability 1/2 for both, so every marginal
/// is half ones. Labels are for evaluation only.
inline Dataset gen_two_class_binary(std::size_t r, std::size_t m, std::uint64_t seed,
                                    std::vector<int>* labels = nullptr) {
  if (m < 2) throw std::invalid_argument("gen_two_class_binary: M must be >= 2");
  if (r < 2 || r % 2 != 0) {
    throw std::invalid_argument("gen_two_class_binary: R must be even and >= 2");
  }
  Rng rng(seed);
  const std::size_t informative = m / 5;
  std::vector<double> values;
  values.reserve(r * m);
  for (std::size_t i = 0; i < r; ++i) {
    const bool class_b = i >= r / 2;
    for (std::size_t c = 0; c < m; ++c) {
      double p = 0.5;
      if (c < informative) p = class_b ? 2.0 / 3.0 : 1.0 / 3.0;
      values.push_back(rng.uniform() < p ? 1.0 : 0.0);
    }
  }
  if (labels) {
    labels->assign(r, 0);
    for (std::size_t i = r / 2; i < r; ++i) (*labels)[i] = 1;
  }
  return Dataset(std::move(values), m);
}

struct Generated {
  Dataset data;
  std::vector<int> labels;  // empty for unlabeled kinds
};

inline Generated generate(const GenSpec& spec) {
  switch (spec.kind) {
    case GenKind::squiggles:
      return {gen_squiggles(spec.r, spec.seed), {}};
    case GenKind::filaments:
      return {gen_filaments(spec.r, spec.seed), {}};
    case GenKind::sparse_mixture: {
      MixtureTrace trace;
      Dataset data = gen_sparse_mixture(spec.r, spec.m, spec.k, spec.seed,
                                        spec.sparsity, spec.flip, &trace);
      std::vector<int> labels(trace.point_prototype.size());
      for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = static_cast<int>(trace.point_prototype[i]);
      }
      return {std::move(data), std::move(labels)};
    }
    case GenKind::two_class_binary: {
      std::vector<int> labels;
      Dataset data = gen_two_class_binary(spec.r, spec.m, spec.seed, &labels);
      return {std::move(data), std::move(labels)};
    }
  }
  throw std::logic_error("generate: unknown kind");
}

inline GenKind parse_gen_kind(const std::string& name) {
  if (name == "squiggles") return GenKind::squiggles;
  if (name == "filaments") return GenKind::filaments;
  if (name == "sparse-mixture" || name == "sparse_mixture") return GenKind::sparse_mixture;
  if (name == "two-class-binary" || name == "two_class_binary") {
    return GenKind::two_class_binary;
  }
  throw std::invalid_argument("unknown dataset kind: " + name);
}

}  // namespace anchors
