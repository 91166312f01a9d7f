#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "anchors/core.hpp"
#include "anchors/kmeans.hpp"
#include "anchors/rng.hpp"
#include "anchors/tree.hpp"

using namespace anchors;
using Catch::Approx;

namespace {

Dataset line(std::initializer_list<double> xs) {
  std::vector<double> v(xs);
  return Dataset(std::move(v), 1);
}

Dataset make_points(std::uint64_t seed, std::size_t n, std::size_t dim) {
  Rng rng(seed);
  std::vector<double> v;
  v.reserve(n * dim);
  for (std::size_t i = 0; i < n * dim; ++i) v.push_back(rng.uniform(-10, 10));
  return Dataset(std::move(v), dim);
}

std::vector<std::size_t> all_indices(const Dataset& d) {
  std::vector<std::size_t> idx(d.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

// Oracle nearest centroid: exhaustive, lowest index wins ties.
std::size_t nearest_centroid(PointView p, const CentroidSet& cents) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cents.size(); ++c) {
    const double d = uncounted_distance(p, cents[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void check_accumulators_match(const StepAccumulator& a, const StepAccumulator& b) {
  REQUIRE(a.counts == b.counts);
  REQUIRE(a.sums.size() == b.sums.size());
  for (std::size_t c = 0; c < a.sums.size(); ++c) {
    for (std::size_t k = 0; k < a.sums[c].size(); ++k) {
      const double scale = std::max(std::abs(a.sums[c][k]), std::abs(b.sums[c][k]));
      CHECK(std::abs(a.sums[c][k] - b.sums[c][k]) <= 1e-9 * (1.0 + scale));
    }
  }
}

}  // namespace

TEST_CASE("naive step assigns by hand arithmetic") {
  const Dataset data = line({0, 1, 10, 11});
  const CentroidSet cents{{0.0}, {10.0}};
  DistanceCounter c;
  const StepAccumulator acc = naive_kmeans_step(data, cents, c);
  CHECK(acc.counts == std::vector<std::size_t>{2, 2});
  CHECK(acc.sums[0] == Point{1.0});
  CHECK(acc.sums[1] == Point{21.0});
  CHECK(c.count() == data.size() * cents.size());
}

TEST_CASE("equidistant points go to the lower centroid index") {
  const Dataset data = line({3.5});
  const CentroidSet cents{{2.0}, {5.0}};
  DistanceCounter c;
  const StepAccumulator acc = naive_kmeans_step(data, cents, c);
  CHECK(acc.counts == std::vector<std::size_t>{1, 0});
}

TEST_CASE("single centroid absorbs the dataset") {
  const Dataset data = line({1, 2, 3, 4});
  const CentroidSet cents{{0.0}};
  DistanceCounter c;
  const StepAccumulator acc = naive_kmeans_step(data, cents, c);
  CHECK(acc.counts == std::vector<std::size_t>{4});
  CHECK(acc.sums[0] == Point{10.0});
}

TEST_CASE("pruning rule fires on the textbook configuration") {
  // Node pivot at 0 with radius 1; candidates at distances 2 and 10.
  // 2 + 1 < 10 - 1, so the far candidate must be pruned at the root.
  const Dataset data = line({-1, 0, 1});
  BuildConfig cfg;
  cfg.r_min = 3;
  DistanceCounter tc;
  const auto root = build_tree(data, cfg, tc);
  REQUIRE(root->radius == 1.0);
  const CentroidSet cents{{2.0}, {10.0}};

  bool root_seen = false;
  KmeansStepAudit audit = [&](const TreeNode& node, std::span<const std::size_t> entry,
                              std::span<const std::size_t> pruned) {
    if (node.count == data.size()) {
      root_seen = true;
      CHECK(entry.size() == 2);
      REQUIRE(pruned.size() == 1);
      CHECK(pruned[0] == 0);
    }
  };
  DistanceCounter c;
  const StepAccumulator fast = fast_kmeans_step(*root, data, cents, c, &audit);
  CHECK(root_seen);
  CHECK(fast.counts == std::vector<std::size_t>{3, 0});
  DistanceCounter cn;
  check_accumulators_match(fast, naive_kmeans_step(data, cents, cn));
}

TEST_CASE("well-separated clusters resolve without touching leaf points") {
  const Dataset data = line({0, 1, 2, 100, 101, 102});
  BuildConfig cfg;
  cfg.r_min = 2;
  cfg.seed = 5;
  DistanceCounter tc;
  const auto root = build_tree(data, cfg, tc);
  const CentroidSet cents{{1.0}, {101.0}};

  std::uint64_t candidate_evals = 0;
  bool saw_single_cand_cluster = false;
  KmeansStepAudit audit = [&](const TreeNode& node, std::span<const std::size_t> entry,
                              std::span<const std::size_t> pruned) {
    candidate_evals += entry.size();
    if (node.count == 3 && pruned.size() == 1) saw_single_cand_cluster = true;
  };
  DistanceCounter c;
  const StepAccumulator fast = fast_kmeans_step(*root, data, cents, c, &audit);
  CHECK(saw_single_cand_cluster);
  // Every evaluation was a candidate-to-pivot probe: no leaf point was visited.
  CHECK(c.count() == candidate_evals);
  CHECK(c.count() < data.size() * cents.size());

  DistanceCounter cn;
  const StepAccumulator naive = naive_kmeans_step(data, cents, cn);
  check_accumulators_match(fast, naive);
  CHECK(cn.count() == data.size() * cents.size());
}

TEST_CASE("fast step equals the naive oracle on random instances") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 50 + 37 * seed;
    const Dataset data = make_points(seed + 100, n, 1 + seed % 4);
    for (TreeBuilder builder : {TreeBuilder::middle_out, TreeBuilder::top_down}) {
      BuildConfig cfg;
      cfg.builder = builder;
      cfg.r_min = 5;
      cfg.seed = seed;
      DistanceCounter tc;
      const auto root = build_tree(data, cfg, tc);
      const std::size_t k = 1 + seed % 7;
      const CentroidSet cents = random_centroids(data, k, seed * 3 + 1);
      DistanceCounter cf, cn;
      const StepAccumulator fast = fast_kmeans_step(*root, data, cents, cf);
      const StepAccumulator naive = naive_kmeans_step(data, cents, cn);
      check_accumulators_match(fast, naive);
    }
  }
}

TEST_CASE("candidate sets always contain the true owners") {
  const Dataset data = make_points(55, 400, 2);
  BuildConfig cfg;
  cfg.r_min = 10;
  DistanceCounter tc;
  const auto root = build_tree(data, cfg, tc);
  const CentroidSet cents = random_centroids(data, 8, 9);

  KmeansStepAudit audit = [&](const TreeNode& node, std::span<const std::size_t> entry,
                              std::span<const std::size_t> pruned) {
    for (std::size_t idx : collect_points(node)) {
      const std::size_t truth = nearest_centroid(data[idx], cents);
      CHECK(std::find(entry.begin(), entry.end(), truth) != entry.end());
      CHECK(std::find(pruned.begin(), pruned.end(), truth) != pruned.end());
    }
  };
  DistanceCounter c;
  fast_kmeans_step(*root, data, cents, c, &audit);
}

TEST_CASE("distortion matches hand values and a direct recomputation") {
  const Dataset data = line({0, 2});
  DistanceCounter c;
  CHECK(distortion(data, CentroidSet{{1.0}}, c) == 2.0);
  CHECK(distortion(data, CentroidSet{{0.0}, {2.0}}, c) == 0.0);

  const Dataset rd = make_points(77, 300, 3);
  const CentroidSet cents = random_centroids(rd, 5, 3);
  DistanceCounter c2;
  const double fast = distortion(rd, cents, c2);
  double direct = 0.0;
  for (std::size_t i = 0; i < rd.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point& cent : cents) {
      best = std::min(best, uncounted_distance(rd[i], cent));
    }
    direct += best * best;
  }
  CHECK(fast == Approx(direct).margin(1e-12));
}

TEST_CASE("kmeans at a fixed point converges immediately") {
  const Dataset data = line({1, 5, 9});
  CentroidSet init{{1.0}, {5.0}, {9.0}};
  DistanceCounter c;
  const KmeansResult result = run_kmeans(data, nullptr, init, 50, c);
  CHECK(result.iterations == 1);
  CHECK(result.distortion_trace.front() == 0.0);
  CHECK(result.distortion_trace.back() == 0.0);
}

TEST_CASE("fast and naive runs share the same distortion trace") {
  const Dataset data = make_points(31, 500, 2);
  BuildConfig cfg;
  cfg.r_min = 16;
  DistanceCounter tc;
  const auto root = build_tree(data, cfg, tc);
  const CentroidSet init = random_centroids(data, 6, 12);
  DistanceCounter cf, cn;
  const KmeansResult fast = run_kmeans(data, root.get(), init, 50, cf);
  const KmeansResult naive = run_kmeans(data, nullptr, init, 50, cn);
  REQUIRE(fast.distortion_trace.size() == naive.distortion_trace.size());
  for (std::size_t i = 0; i < fast.distortion_trace.size(); ++i) {
    CHECK(fast.distortion_trace[i] ==
          Approx(naive.distortion_trace[i]).epsilon(1e-9));
  }
  CHECK(fast.step_distance_count < naive.step_distance_count);

  // Monotone distortion, with 1e-9 relative slack.
  for (std::size_t i = 1; i < fast.distortion_trace.size(); ++i) {
    CHECK(fast.distortion_trace[i] <=
          fast.distortion_trace[i - 1] * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("an empty cluster keeps its previous centroid") {
  const Dataset data = line({0, 1});
  CentroidSet init{{0.5}, {100.0}};
  DistanceCounter c;
  const KmeansResult result = run_kmeans(data, nullptr, init, 5, c);
  CHECK(result.centroids[1] == Point{100.0});
  CHECK(result.centroids[0] == Point{0.5});
}

TEST_CASE("kmeans rejects more centroids than points") {
  const Dataset data = line({0, 1});
  DistanceCounter c;
  CHECK_THROWS_AS(run_kmeans(data, nullptr, KmeansInit::random_points, 1, 3, 5, c),
                  std::invalid_argument);
}

TEST_CASE("random and anchor inits meet in the same basin") {
  const Dataset data = line({0, 1, 2, 100, 101, 102});
  DistanceCounter c;
  const KmeansResult random_run =
      run_kmeans(data, nullptr, KmeansInit::random_points, 8, 2, 50, c);
  const KmeansResult anchors_run =
      run_kmeans(data, nullptr, KmeansInit::anchor_centroids, 8, 2, 50, c);
  auto sorted_centroids = [](CentroidSet cents) {
    std::sort(cents.begin(), cents.end());
    return cents;
  };
  const CentroidSet a = sorted_centroids(random_run.centroids);
  const CentroidSet b = sorted_centroids(anchors_run.centroids);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i][0] == Approx(b[i][0]).margin(1e-12));
  }
}

TEST_CASE("anchor seeding runs end to end") {
  const Dataset data = line({0, 1, 2, 10, 11, 12});
  DistanceCounter c;
  const KmeansResult result =
      run_kmeans(data, nullptr, KmeansInit::anchor_centroids, 3, 2, 50, c);
  CHECK(result.centroids.size() == 2);
  // Two clean clusters: distortion ends at the in-cluster optimum,
  // (1 + 0 + 1) per cluster.
  CHECK(result.distortion_trace.back() == Approx(4.0));
}
