#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "anchors/core.hpp"
#include "anchors/rng.hpp"
#include "anchors/tree.hpp"

using namespace anchors;
using Catch::Approx;

namespace {

Dataset line(std::initializer_list<double> xs) {
  std::vector<double> v(xs);
  return Dataset(std::move(v), 1);
}

Dataset make_points(std::uint64_t seed, std::size_t n, std::size_t dim, double lo = -10,
                    double hi = 10) {
  Rng rng(seed);
  std::vector<double> v;
  v.reserve(n * dim);
  for (std::size_t i = 0; i < n * dim; ++i) v.push_back(rng.uniform(lo, hi));
  return Dataset(std::move(v), dim);
}

std::vector<std::size_t> all_indices(const Dataset& d) {
  std::vector<std::size_t> idx(d.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

// Independent splitter oracle: recomputes the root split of the top-down
// builder straight from its definition.
std::pair<std::set<std::size_t>, std::set<std::size_t>> oracle_root_split(
    const Dataset& data, const std::vector<std::size_t>& subset) {
  const Point pivot = centroid(data, subset);
  const auto furthest = [&](auto dist_to) {
    std::size_t best = subset[0];
    double best_d = -1;
    for (std::size_t idx : subset) {
      const double d = dist_to(idx);
      if (d > best_d) {
        best_d = d;
        best = idx;
      }
    }
    return best;
  };
  const std::size_t f1 =
      furthest([&](std::size_t i) { return uncounted_distance(data[i], pivot); });
  const std::size_t f2 =
      furthest([&](std::size_t i) { return uncounted_distance(data[i], data[f1]); });
  std::vector<std::size_t> s1, s2;
  for (std::size_t idx : subset) {
    const double d1 = uncounted_distance(data[idx], data[f1]);
    const double d2 = uncounted_distance(data[idx], data[f2]);
    (d1 <= d2 ? s1 : s2).push_back(idx);
  }
  const Point c1 = centroid(data, s1);
  const Point c2 = centroid(data, s2);
  std::set<std::size_t> r1, r2;
  for (std::size_t idx : subset) {
    const double d1 = uncounted_distance(data[idx], c1);
    const double d2 = uncounted_distance(data[idx], c2);
    (d1 <= d2 ? r1 : r2).insert(idx);
  }
  if (r1.empty() || r2.empty()) {
    return {{s1.begin(), s1.end()}, {s2.begin(), s2.end()}};
  }
  return {r1, r2};
}

std::unique_ptr<TreeNode> zero_count_node() {
  auto n = std::make_unique<TreeNode>();
  n->pivot = {0.0};
  n->centroid = {0.0};
  n->count = 0;
  return n;
}

}  // namespace

TEST_CASE("top-down singleton is a leaf") {
  const Dataset data = line({3.5});
  DistanceCounter c;
  BuildConfig cfg;
  cfg.r_min = 2;
  const auto root = build_top_down(data, all_indices(data), cfg, c);
  CHECK(root->is_leaf());
  CHECK(root->radius == 0.0);
  CHECK(root->centroid == Point{3.5});
  CHECK(root->count == 1);
}

TEST_CASE("top-down splits two far pairs cleanly") {
  const Dataset data = line({0, 1, 9, 10});
  DistanceCounter c;
  BuildConfig cfg;
  cfg.r_min = 2;
  const auto root = build_top_down(data, all_indices(data), cfg, c);
  CHECK(root->pivot == Point{5.0});
  REQUIRE_FALSE(root->is_leaf());
  CHECK(root->left->points == std::vector<std::size_t>{0, 1});
  CHECK(root->right->points == std::vector<std::size_t>{2, 3});
  CHECK(root->left->pivot == Point{0.5});
  CHECK(root->right->pivot == Point{9.5});

  const auto [s1, s2] = oracle_root_split(data, all_indices(data));
  CHECK(s1 == std::set<std::size_t>{0, 1});
  CHECK(s2 == std::set<std::size_t>{2, 3});
}

TEST_CASE("top-down forces a leaf on identical points") {
  const Dataset data = line({2, 2, 2, 2, 2});
  DistanceCounter c;
  BuildConfig cfg;
  cfg.r_min = 2;
  const auto root = build_top_down(data, all_indices(data), cfg, c);
  CHECK(root->is_leaf());
  CHECK(root->count == 5);
}

TEST_CASE("top-down root split agrees with the splitter oracle") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Dataset data = make_points(seed, 80 + 10 * seed, 2);
    DistanceCounter c;
    BuildConfig cfg;
    cfg.r_min = 10;
    const auto root = build_top_down(data, all_indices(data), cfg, c);
    REQUIRE_FALSE(root->is_leaf());
    const auto left = collect_points(*root->left);
    const auto [s1, s2] = oracle_root_split(data, all_indices(data));
    CHECK(std::set<std::size_t>(left.begin(), left.end()) == s1);
  }
}

TEST_CASE("node compatibility is the enclosing-ball radius") {
  DistanceCounter c;
  TreeNode a, b;
  a.pivot = {0.0};
  a.radius = 1.0;
  b.pivot = {10.0};
  b.radius = 2.0;
  CHECK(node_compatibility(a, b, c) == Approx(6.5));

  TreeNode big, small;
  big.pivot = {0.0};
  big.radius = 5.0;
  small.pivot = {1.0};
  small.radius = 1.0;
  CHECK(node_compatibility(big, small, c) == 5.0);

  TreeNode s1, s2;
  s1.pivot = {4.0};
  s1.radius = 3.0;
  s2.pivot = {4.0};
  s2.radius = 3.0;
  CHECK(node_compatibility(s1, s2, c) == 3.0);
  CHECK(c.count() == 3);
}

TEST_CASE("merge combines statistics and bounds the radius") {
  DistanceCounter c;
  auto a = std::make_unique<TreeNode>();
  a->pivot = {0.0, 0.0};
  a->centroid = {0.0, 0.0};
  a->count = 2;
  a->radius = 1.0;
  auto b = std::make_unique<TreeNode>();
  b->pivot = {2.0, 2.0};
  b->centroid = {2.0, 2.0};
  b->count = 2;
  b->radius = 1.0;
  const auto parent = merge_nodes(std::move(a), std::move(b), c);
  CHECK(parent->count == 4);
  CHECK(parent->centroid == Point{1.0, 1.0});
  CHECK(parent->pivot == Point{1.0, 1.0});
  CHECK(parent->radius == Approx(std::sqrt(2.0) + 1.0));

  CHECK_THROWS_AS(
      merge_nodes(zero_count_node(), zero_count_node(), c),
      std::invalid_argument);
}

TEST_CASE("middle-out base case is a leaf") {
  const Dataset data = line({1, 2, 3});
  DistanceCounter c;
  BuildConfig cfg;
  cfg.r_min = 5;
  const auto root = build_middle_out(data, all_indices(data), cfg, c);
  CHECK(root->is_leaf());
  CHECK(root->count == 3);
  CHECK(root->pivot == Point{2.0});
}

TEST_CASE("middle-out on nine points agglomerates three anchors") {
  const Dataset data = line({0, 1, 2, 10, 11, 12, 20, 21, 22});
  DistanceCounter c;
  BuildConfig cfg;
  cfg.r_min = 3;
  cfg.seed = 4;
  const auto root = build_middle_out(data, all_indices(data), cfg, c);
  // ceil(sqrt(9)) = 3 anchors, two merges: the root and one internal child.
  REQUIRE_FALSE(root->is_leaf());
  CHECK(root->count == 9);
  const std::size_t internal = root->left->is_leaf() ? 0 : 1;
  CHECK((internal == 0 ? root->right : root->left)->is_leaf() == false);
  CHECK(validate_tree(data, *root, cfg.r_min).ok());
}

TEST_CASE("both builders produce valid trees on random instances") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t n = 100 + 350 * seed;
    const Dataset data = make_points(seed + 40, n, 1 + seed % 3);
    for (TreeBuilder builder : {TreeBuilder::middle_out, TreeBuilder::top_down}) {
      BuildConfig cfg;
      cfg.builder = builder;
      cfg.r_min = 1 + seed * 7;
      cfg.seed = seed;
      DistanceCounter c;
      const auto root = build_tree(data, cfg, c);
      const auto diag = validate_tree(data, *root, cfg.r_min);
      CAPTURE(seed, static_cast<int>(builder), diag.violations);
      CHECK(diag.ok());
    }
  }
}

TEST_CASE("validator reports injected faults") {
  const Dataset data = make_points(3, 200, 2);
  BuildConfig cfg;
  cfg.r_min = 8;
  cfg.exact_radius = true;  // interior bounds would absorb a 10% shrink
  DistanceCounter c;
  const auto root = build_tree(data, cfg, c);
  REQUIRE(validate_tree(data, *root, cfg.r_min).ok());

  SECTION("shrunken radius breaks containment") {
    root->radius *= 0.9;
    const auto diag = validate_tree(data, *root, cfg.r_min);
    CHECK_FALSE(diag.ok());
  }
  SECTION("duplicated leaf index breaks the partition") {
    TreeNode* leaf = root.get();
    while (!leaf->is_leaf()) leaf = leaf->left.get();
    TreeNode* other = root.get();
    while (!other->is_leaf()) other = other->right.get();
    other->points.push_back(leaf->points.front());
    const auto diag = validate_tree(data, *root, cfg.r_min);
    CHECK_FALSE(diag.ok());
  }
}

TEST_CASE("exact-radius pass tightens every node") {
  const Dataset data = make_points(9, 500, 3);
  BuildConfig cfg;
  cfg.r_min = 20;
  cfg.exact_radius = true;
  DistanceCounter c;
  const auto root = build_tree(data, cfg, c);
  const auto walk = [&](const TreeNode& node, const auto& self) -> void {
    double max_d = 0.0;
    for (std::size_t idx : collect_points(node)) {
      max_d = std::max(max_d, uncounted_distance(node.pivot, data[idx]));
    }
    CHECK(std::abs(node.radius - max_d) <= 1e-12);
    if (!node.is_leaf()) {
      self(*node.left, self);
      self(*node.right, self);
    }
  };
  walk(*root, walk);
}

TEST_CASE("builds are deterministic") {
  const Dataset data = make_points(21, 400, 2);
  BuildConfig cfg;
  cfg.r_min = 10;
  cfg.seed = 77;
  for (TreeBuilder builder : {TreeBuilder::middle_out, TreeBuilder::top_down}) {
    cfg.builder = builder;
    DistanceCounter c1, c2;
    const auto a = build_tree(data, cfg, c1);
    const auto b = build_tree(data, cfg, c2);
    std::ostringstream sa, sb;
    dump_tree_stats(*a, sa);
    dump_tree_stats(*b, sb);
    CHECK(sa.str() == sb.str());
    CHECK(c1.count() == c2.count());
  }
}

TEST_CASE("stats dump is one row per node") {
  const Dataset data = line({0, 1, 9, 10});
  BuildConfig cfg;
  cfg.r_min = 2;
  cfg.builder = TreeBuilder::top_down;
  DistanceCounter c;
  const auto root = build_tree(data, cfg, c);
  std::ostringstream out;
  dump_tree_stats(*root, out);
  std::istringstream in(out.str());
  std::string lead;
  std::getline(in, lead);
  CHECK(lead == "id\tdepth\tcount\tradius\tleaf");
  std::size_t rows = 0;
  for (std::string row; std::getline(in, row);) ++rows;
  CHECK(rows == 3);  // root plus two leaves
}

TEST_CASE("empty subsets are rejected") {
  const Dataset data = line({1});
  DistanceCounter c;
  BuildConfig cfg;
  CHECK_THROWS_AS(build_top_down(data, {}, cfg, c), std::invalid_argument);
  CHECK_THROWS_AS(build_middle_out(data, {}, cfg, c), std::invalid_argument);
}
