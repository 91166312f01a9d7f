/**
 * anchors: metric trees with cached sufficient statistics
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "anchors/allpairs.hpp"
#include "anchors/anomaly.hpp"
#include "anchors/core.hpp"
#include "anchors/csv.hpp"
#include "anchors/kmeans.hpp"
#include "anchors/tree.hpp"

namespace anchors {

/// Raised when the regular and accelerated runs of one experiment disagree
/// beyond tolerance. A report is never produced for mismatched runs.
class MismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Algorithm { kmeans, anomaly, allpairs };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kmeans: return "kmeans";
    case Algorithm::anomaly: return "anomaly";
    case Algorithm::allpairs: return "allpairs";
  }
  return "?";
}

inline const char* builder_name(TreeBuilder b) {
  return b == TreeBuilder::middle_out ? "anchors" : "topdown";
}

struct ExperimentConfig {
  std::string dataset_name = "data";
  Algorithm algorithm = Algorithm::kmeans;
  BuildConfig build;
  std::uint64_t seed = 0;
  int threads = 1;
  bool fold_build_cost = false;
  // kmeans
  std::size_t k = 3;
  std::size_t max_iters = 50;
  KmeansInit init = KmeansInit::random_points;
  // anomaly
  double range = 1.0;
  std::size_t threshold = 1;
  std::optional<Dataset> queries;  // default: every dataset point
  // allpairs
  double rho_min = 0.5;
};

struct ExperimentReport {
  std::string dataset_name;
  std::string algorithm;
  std::string parameters;
  std::string builder;
  std::uint64_t regular_distance_count = 0;
  std::uint64_t fast_distance_count = 0;
  std::uint64_t build_distance_count = 0;
  bool fold_build_cost = false;
  double speedup = 0.0;
  // Algorithm outputs (meaning depends on the algorithm).
  double final_distortion = 0.0;
  double anomaly_fraction = 0.0;
  std::size_t pair_count = 0;
  double wall_ms = 0.0;
  // Side products for CLI emission.
  std::vector<double> distortion_trace;
  std::vector<bool> verdicts;
  std::vector<CorrelatedPair> pairs;
};

namespace detail {

inline double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline bool traces_match(const std::vector<double>& a, const std::vector<double>& b,
                         double rel_tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > rel_tol * (1.0 + std::max(std::abs(a[i]), std::abs(b[i])))) {
      return false;
    }
  }
  return true;
}

/// Evaluates `fn(i)` for i in [0, n) across `threads` workers with
/// contiguous chunks; per-worker counters merge in chunk order.
template <typename Fn>
inline std::uint64_t parallel_indexed(std::size_t n, int threads, Fn&& fn) {
  const int workers = std::max(1, threads);
  if (workers == 1 || n < 2) {
    DistanceCounter counter;
    for (std::size_t i = 0; i < n; ++i) fn(i, counter);
    return counter.count();
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<DistanceCounter> counters(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    const std::size_t lo = std::min(n, w * chunk);
    const std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&, lo, hi, w] {
      for (std::size_t i = lo; i < hi; ++i) fn(i, counters[w]);
    });
  }
  for (auto& t : pool) t.join();
  std::uint64_t total = 0;
  for (const auto& c : counters) total += c.count();
  return total;
}

}  // namespace detail

/// Runs the configured algorithm in both regular (treeless) and accelerated
/// form on the same input and initialization, hard-fails on any output
/// mismatch, and reports both distance counts plus the speedup.
inline ExperimentReport run_experiment(const Dataset& data, const ExperimentConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.dataset_name = cfg.dataset_name;
  report.algorithm = algorithm_name(cfg.algorithm);
  report.builder = builder_name(cfg.build.builder);
  report.fold_build_cost = cfg.fold_build_cost;

  DistanceCounter regular, fast, build_counter;
  std::ostringstream params;

  switch (cfg.algorithm) {
    case Algorithm::kmeans: {
      params << "k=" << cfg.k << " iters=" << cfg.max_iters
             << " init=" << (cfg.init == KmeansInit::random_points ? "random" : "anchors");
      const auto root = build_tree(data, cfg.build, build_counter);
      CentroidSet initial;
      if (cfg.init == KmeansInit::random_points) {
        initial = random_centroids(data, cfg.k, cfg.seed);
      } else {
        DistanceCounter init_cost;
        initial = anchors_as_seed_centroids(build_anchors(data, cfg.k, init_cost, cfg.seed));
      }
      const KmeansResult slow = run_kmeans(data, nullptr, initial, cfg.max_iters, regular);
      const KmeansResult quick = run_kmeans(data, root.get(), initial, cfg.max_iters, fast);
      if (!detail::traces_match(slow.distortion_trace, quick.distortion_trace, 1e-9)) {
        throw MismatchError("kmeans: regular and accelerated distortion traces differ");
      }
      report.final_distortion = quick.distortion_trace.back();
      report.distortion_trace = quick.distortion_trace;
      break;
    }
    case Algorithm::anomaly: {
      params << "range=" << cfg.range << " threshold=" << cfg.threshold;
      const auto root = build_tree(data, cfg.build, build_counter);
      const Dataset& queries = cfg.queries ? *cfg.queries : data;
      const std::size_t nq = queries.size();
      std::vector<std::uint8_t> fast_verdicts(nq), slow_verdicts(nq);
      const std::uint64_t fast_count =
          detail::parallel_indexed(nq, cfg.threads, [&](std::size_t i, DistanceCounter& c) {
            AnomalyQuery q{Point(queries[i].begin(), queries[i].end()), cfg.range,
                           cfg.threshold};
            fast_verdicts[i] = is_anomaly(*root, data, q, c) ? 1 : 0;
          });
      const std::uint64_t slow_count =
          detail::parallel_indexed(nq, cfg.threads, [&](std::size_t i, DistanceCounter& c) {
            AnomalyQuery q{Point(queries[i].begin(), queries[i].end()), cfg.range,
                           cfg.threshold};
            slow_verdicts[i] = brute_force_range_count(data, q, c) < cfg.threshold ? 1 : 0;
          });
      fast.add(fast_count);
      regular.add(slow_count);
      std::size_t anomalies = 0;
      report.verdicts.resize(nq);
      for (std::size_t i = 0; i < nq; ++i) {
        if (fast_verdicts[i] != slow_verdicts[i]) {
          throw MismatchError("anomaly: verdicts differ at query " + std::to_string(i));
        }
        report.verdicts[i] = fast_verdicts[i] != 0;
        anomalies += fast_verdicts[i];
      }
      report.anomaly_fraction =
          nq == 0 ? 0.0 : static_cast<double>(anomalies) / static_cast<double>(nq);
      break;
    }
    case Algorithm::allpairs: {
      params << "rho_min=" << cfg.rho_min;
      const NormalizedAttributes norm = normalize_attributes(data);
      CorrelatedPairSet fast_set =
          find_correlated_pairs(norm, cfg.rho_min, cfg.build, fast, &build_counter);
      CorrelatedPairSet slow_set = brute_force_pairs(norm, cfg.rho_min, regular);
      if (fast_set.pairs.size() != slow_set.pairs.size()) {
        throw MismatchError("allpairs: pair sets differ in size");
      }
      for (std::size_t i = 0; i < fast_set.pairs.size(); ++i) {
        const auto& a = fast_set.pairs[i];
        const auto& b = slow_set.pairs[i];
        if (a.i != b.i || a.j != b.j || std::abs(a.rho - b.rho) > 1e-9) {
          throw MismatchError("allpairs: pair sets differ at entry " + std::to_string(i));
        }
      }
      report.pair_count = fast_set.pairs.size();
      report.pairs = std::move(fast_set.pairs);
      break;
    }
  }

  report.parameters = params.str();
  report.build_distance_count = build_counter.count();
  report.regular_distance_count = regular.count();
  report.fast_distance_count = fast.count();
  // A zero accelerated count (everything pruned) reports as regular/1.
  const std::uint64_t fast_total =
      report.fast_distance_count + (cfg.fold_build_cost ? report.build_distance_count : 0);
  report.speedup = detail::ratio(report.regular_distance_count, std::max<std::uint64_t>(1, fast_total));
  report.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - started)
                       .count();
  return report;
}

/// Same algorithm, same data, same initialization, two tree builders.
struct BuilderComparison {
  ExperimentReport anchors_built;
  ExperimentReport top_down_built;
  double fast_count_ratio = 0.0;  // top_down / anchors
};

inline BuilderComparison compare_builders(const Dataset& data, ExperimentConfig cfg) {
  BuilderComparison cmp;
  cfg.build.builder = TreeBuilder::middle_out;
  cmp.anchors_built = run_experiment(data, cfg);
  cfg.build.builder = TreeBuilder::top_down;
  cmp.top_down_built = run_experiment(data, cfg);
  cmp.fast_count_ratio = detail::ratio(cmp.top_down_built.fast_distance_count,
                                       cmp.anchors_built.fast_distance_count);
  return cmp;
}

/// Random-start vs anchors-start K-means (Table-4 style): distortion before
/// and after `max_iters` iterations, plus the random/anchors ratios.
struct InitComparison {
  double start_random = 0.0;
  double start_anchors = 0.0;
  double end_random = 0.0;
  double end_anchors = 0.0;
  double start_benefit = 0.0;  // start_random / start_anchors
  double end_benefit = 0.0;    // end_random / end_anchors
};

inline InitComparison compare_inits(const Dataset& data, const ExperimentConfig& cfg) {
  DistanceCounter build_counter;
  const auto root = build_tree(data, cfg.build, build_counter);

  DistanceCounter steps;
  const KmeansResult random_run = run_kmeans(data, root.get(), KmeansInit::random_points,
                                             cfg.seed, cfg.k, cfg.max_iters, steps);
  const KmeansResult anchors_run = run_kmeans(data, root.get(), KmeansInit::anchor_centroids,
                                              cfg.seed, cfg.k, cfg.max_iters, steps);
  InitComparison cmp;
  cmp.start_random = random_run.distortion_trace.front();
  cmp.start_anchors = anchors_run.distortion_trace.front();
  cmp.end_random = random_run.distortion_trace.back();
  cmp.end_anchors = anchors_run.distortion_trace.back();
  cmp.start_benefit = cmp.start_anchors == 0.0 ? 0.0 : cmp.start_random / cmp.start_anchors;
  cmp.end_benefit = cmp.end_anchors == 0.0 ? 0.0 : cmp.end_random / cmp.end_anchors;
  return cmp;
}

// --- report emission ---------------------------------------------------

inline void write_report_tsv_header(std::ostream& out) {
  out << "dataset\talgorithm\tparameters\tbuilder\tregular_distance_count\t"
         "fast_distance_count\tbuild_distance_count\tfold_build_cost\tspeedup\t"
         "final_distortion\tanomaly_fraction\tpair_count\twall_ms\n";
}

inline void write_report_tsv_row(const ExperimentReport& r, std::ostream& out) {
  out << r.dataset_name << '\t' << r.algorithm << '\t' << r.parameters << '\t'
      << r.builder << '\t' << r.regular_distance_count << '\t' << r.fast_distance_count
      << '\t' << r.build_distance_count << '\t' << (r.fold_build_cost ? 1 : 0) << '\t'
      << format_double(r.speedup) << '\t' << format_double(r.final_distortion) << '\t'
      << format_double(r.anomaly_fraction) << '\t' << r.pair_count << '\t'
      << format_double(r.wall_ms) << '\n';
}

}  // namespace anchors
