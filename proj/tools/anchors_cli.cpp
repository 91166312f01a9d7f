/**
 * anchors: metric trees with cached sufficient statistics
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "anchors/allpairs.hpp"
#include "anchors/anomaly.hpp"
#include "anchors/core.hpp"
#include "anchors/csv.hpp"
#include "anchors/datagen.hpp"
#include "anchors/experiment.hpp"
#include "anchors/kmeans.hpp"
#include "anchors/rng.hpp"
#include "anchors/tree.hpp"

namespace {

using nlohmann::json;

struct CommonOpts {
  std::string input;
  std::string dataset_name;
  std::uint64_t seed = 0;
  std::string builder = "anchors";
  std::size_t rmin = 30;
  bool exact_radius = false;
  std::string report = "tsv";
  bool fold_build_cost = false;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_input = true) {
  auto* in = cmd->add_option("--input", opts.input, "input CSV of points");
  if (needs_input) in->required();
  cmd->add_option("--name", opts.dataset_name, "dataset label used in reports");
  cmd->add_option("--seed", opts.seed, "random seed");
  cmd->add_option("--builder", opts.builder, "tree builder: anchors|topdown")
      ->check(CLI::IsMember({"anchors", "topdown"}));
  cmd->add_option("--rmin", opts.rmin, "leaf threshold R_min")->check(CLI::PositiveNumber);
  cmd->add_flag("--exact-radius", opts.exact_radius, "tighten interior radii to exact maxima");
  cmd->add_option("--report", opts.report, "report format: tsv|json")
      ->check(CLI::IsMember({"tsv", "json"}));
  cmd->add_flag("--fold-build-cost", opts.fold_build_cost,
                "include tree construction in the fast distance count");
  cmd->add_option("--threads", opts.threads, "worker cap; 1 = fully serial")
      ->check(CLI::PositiveNumber);
}

anchors::ExperimentConfig make_config(const CommonOpts& opts) {
  anchors::ExperimentConfig cfg;
  cfg.dataset_name = opts.dataset_name.empty() ? opts.input : opts.dataset_name;
  cfg.build.builder = opts.builder == "topdown" ? anchors::TreeBuilder::top_down
                                                : anchors::TreeBuilder::middle_out;
  cfg.build.r_min = opts.rmin;
  cfg.build.seed = opts.seed;
  cfg.build.exact_radius = opts.exact_radius;
  cfg.seed = opts.seed;
  cfg.threads = opts.threads;
  cfg.fold_build_cost = opts.fold_build_cost;
  return cfg;
}

json report_to_json(const anchors::ExperimentReport& r) {
  return json{{"dataset", r.dataset_name},
              {"algorithm", r.algorithm},
              {"parameters", r.parameters},
              {"builder", r.builder},
              {"regular_distance_count", r.regular_distance_count},
              {"fast_distance_count", r.fast_distance_count},
              {"build_distance_count", r.build_distance_count},
              {"fold_build_cost", r.fold_build_cost},
              {"speedup", r.speedup},
              {"final_distortion", r.final_distortion},
              {"anomaly_fraction", r.anomaly_fraction},
              {"pair_count", r.pair_count},
              {"wall_ms", r.wall_ms}};
}

void emit_report(const anchors::ExperimentReport& r, const CommonOpts& opts) {
  if (opts.report == "json") {
    json j = report_to_json(r);
    if (r.algorithm == "kmeans") j["distortion_trace"] = r.distortion_trace;
    if (r.algorithm == "anomaly") {
      j["verdicts"] = std::vector<int>(r.verdicts.begin(), r.verdicts.end());
    }
    if (r.algorithm == "allpairs") {
      json pairs = json::array();
      for (const auto& p : r.pairs) pairs.push_back({{"i", p.i}, {"j", p.j}, {"rho", p.rho}});
      j["pairs"] = pairs;
    }
    std::cout << j.dump(2) << '\n';
    return;
  }
  if (r.algorithm == "kmeans") {
    std::cout << "iteration\tdistortion\n";
    for (std::size_t i = 0; i < r.distortion_trace.size(); ++i) {
      std::cout << i << '\t' << anchors::format_double(r.distortion_trace[i]) << '\n';
    }
    std::cout << '\n';
  } else if (r.algorithm == "anomaly") {
    std::cout << "query\tanomaly\n";
    for (std::size_t i = 0; i < r.verdicts.size(); ++i) {
      std::cout << i << '\t' << (r.verdicts[i] ? 1 : 0) << '\n';
    }
    std::cout << '\n';
  } else if (r.algorithm == "allpairs") {
    auto sorted = r.pairs;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      if (a.rho != b.rho) return a.rho > b.rho;
      if (a.i != b.i) return a.i < b.i;
      return a.j < b.j;
    });
    std::cout << "i\tj\trho\n";
    for (const auto& p : sorted) {
      std::cout << p.i << '\t' << p.j << '\t' << anchors::format_double(p.rho) << '\n';
    }
    std::cout << '\n';
  }
  anchors::write_report_tsv_header(std::cout);
  anchors::write_report_tsv_row(r, std::cout);
}

int run_gen(const std::string& kind, std::size_t r, std::size_t m, std::size_t k,
            std::uint64_t seed, double sparsity, double flip, const std::string& out) {
  anchors::GenSpec spec;
  spec.kind = anchors::parse_gen_kind(kind);
  spec.r = r;
  spec.m = m;
  spec.k = k;
  spec.seed = seed;
  spec.sparsity = sparsity;
  spec.flip = flip;
  const anchors::Generated gen = anchors::generate(spec);
  anchors::write_csv_file(gen.data, out);
  std::cerr << "wrote " << gen.data.size() << " x " << gen.data.dim() << " points to "
            << out << '\n';
  if (!gen.labels.empty()) {
    anchors::write_labels_file(gen.labels, out + ".labels");
    std::cerr << "wrote labels to " << out << ".labels\n";
  }
  return 0;
}

int run_build(const CommonOpts& opts, bool validate) {
  const anchors::Dataset data = anchors::read_csv_file(opts.input);
  const anchors::ExperimentConfig cfg = make_config(opts);
  anchors::DistanceCounter counter;
  const auto root = anchors::build_tree(data, cfg.build, counter);
  anchors::dump_tree_stats(*root, std::cout);
  std::cerr << "build_distance_count\t" << counter.count() << '\n';
  if (validate) {
    const auto diag = anchors::validate_tree(data, *root, cfg.build.r_min);
    if (!diag.ok()) {
      for (const auto& v : diag.violations) std::cerr << "violation: " << v << '\n';
      return 2;
    }
    std::cerr << "tree valid (" << diag.nodes_checked << " nodes)\n";
  }
  return 0;
}

std::size_t calibrate_threshold(const anchors::Dataset& data, double range,
                                double fraction, std::uint64_t seed) {
  // Threshold such that roughly `fraction` of sampled dataset points fall
  // below it: the fraction-quantile of neighbor counts, plus one.
  anchors::Rng rng(seed);
  const std::size_t sample = std::min<std::size_t>(data.size(), 500);
  std::vector<std::size_t> counts;
  counts.reserve(sample);
  anchors::DistanceCounter scratch;
  for (std::size_t s = 0; s < sample; ++s) {
    const std::size_t idx = rng.index(data.size());
    anchors::AnomalyQuery q{anchors::Point(data[idx].begin(), data[idx].end()), range, 0};
    counts.push_back(anchors::brute_force_range_count(data, q, scratch));
  }
  std::sort(counts.begin(), counts.end());
  const std::size_t pos = std::min(
      counts.size() - 1,
      static_cast<std::size_t>(fraction * static_cast<double>(counts.size())));
  return counts[pos] + 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anchors hierarchy and cached-statistic metric trees"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset as CSV");
  std::string gen_kind = "squiggles", gen_out;
  std::size_t gen_r = 1000, gen_m = 2, gen_k = 3;
  std::uint64_t gen_seed = 0;
  double gen_sparsity = 0.10, gen_flip = 0.01;
  gen->add_option("--kind", gen_kind,
                  "squiggles|filaments|sparse-mixture|two-class-binary")
      ->required();
  gen->add_option("--r", gen_r, "number of points")->check(CLI::PositiveNumber);
  gen->add_option("--m", gen_m, "dimension (binary/mixture kinds)");
  gen->add_option("--k", gen_k, "mixture components");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--sparsity", gen_sparsity, "mixture prototype density");
  gen->add_option("--flip", gen_flip, "mixture flip probability");
  gen->add_option("--out", gen_out, "output CSV path")->required();

  // build
  auto* build = app.add_subcommand("build", "build a tree and dump node stats as TSV");
  CommonOpts build_opts;
  bool build_validate = false;
  add_common(build, build_opts);
  build->add_flag("--validate", build_validate, "run the structural validator");

  // kmeans
  auto* km = app.add_subcommand("kmeans", "regular-vs-fast exact K-means");
  CommonOpts km_opts;
  std::size_t km_k = 3, km_iters = 50;
  std::string km_init = "random";
  add_common(km, km_opts);
  km->add_option("--k", km_k, "number of centroids")->check(CLI::PositiveNumber);
  km->add_option("--iters", km_iters, "maximum iterations")->check(CLI::PositiveNumber);
  km->add_option("--init", km_init, "initialization: random|anchors")
      ->check(CLI::IsMember({"random", "anchors"}));

  // anomaly
  auto* an = app.add_subcommand("anomaly", "regular-vs-fast range-count anomaly test");
  CommonOpts an_opts;
  double an_range = 1.0;
  std::size_t an_threshold = 1;
  std::string an_queries;
  double an_calibrate = -1.0;
  add_common(an, an_opts);
  an->add_option("--range", an_range, "query radius")->required();
  an->add_option("--threshold", an_threshold, "anomaly count threshold");
  an->add_option("--queries", an_queries, "CSV of query points (default: all data points)");
  an->add_option("--calibrate", an_calibrate,
                 "pick the threshold so about this fraction of sampled points is anomalous");

  // allpairs
  auto* ap = app.add_subcommand("allpairs", "regular-vs-fast correlated attribute pairs");
  CommonOpts ap_opts;
  double ap_rho = 0.5;
  add_common(ap, ap_opts);
  ap->add_option("--rho", ap_rho, "correlation threshold in [-1, 1]")->required();

  // compare-builders
  auto* cb = app.add_subcommand("compare-builders",
                                "same experiment with anchors-built and top-down trees");
  CommonOpts cb_opts;
  std::string cb_algo = "kmeans";
  std::size_t cb_k = 3, cb_iters = 50;
  double cb_range = 1.0, cb_rho = 0.5;
  std::size_t cb_threshold = 1;
  add_common(cb, cb_opts);
  cb->add_option("--algo", cb_algo, "kmeans|anomaly|allpairs")
      ->check(CLI::IsMember({"kmeans", "anomaly", "allpairs"}));
  cb->add_option("--k", cb_k, "kmeans centroids");
  cb->add_option("--iters", cb_iters, "kmeans iterations");
  cb->add_option("--range", cb_range, "anomaly radius");
  cb->add_option("--threshold", cb_threshold, "anomaly threshold");
  cb->add_option("--rho", cb_rho, "allpairs correlation threshold");

  // compare-inits
  auto* ci = app.add_subcommand("compare-inits",
                                "random-start vs anchors-start K-means distortion");
  CommonOpts ci_opts;
  std::size_t ci_k = 3, ci_iters = 50;
  add_common(ci, ci_opts);
  ci->add_option("--k", ci_k, "number of centroids");
  ci->add_option("--iters", ci_iters, "iterations per run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      return run_gen(gen_kind, gen_r, gen_m, gen_k, gen_seed, gen_sparsity, gen_flip,
                     gen_out);
    }
    if (build->parsed()) {
      return run_build(build_opts, build_validate);
    }
    if (km->parsed()) {
      const anchors::Dataset data = anchors::read_csv_file(km_opts.input);
      anchors::ExperimentConfig cfg = make_config(km_opts);
      cfg.algorithm = anchors::Algorithm::kmeans;
      cfg.k = km_k;
      cfg.max_iters = km_iters;
      cfg.init = km_init == "anchors" ? anchors::KmeansInit::anchor_centroids
                                      : anchors::KmeansInit::random_points;
      emit_report(anchors::run_experiment(data, cfg), km_opts);
      return 0;
    }
    if (an->parsed()) {
      const anchors::Dataset data = anchors::read_csv_file(an_opts.input);
      anchors::ExperimentConfig cfg = make_config(an_opts);
      cfg.algorithm = anchors::Algorithm::anomaly;
      cfg.range = an_range;
      if (an_calibrate >= 0.0) {
        cfg.threshold = calibrate_threshold(data, an_range, an_calibrate, an_opts.seed);
        std::cerr << "calibrated threshold\t" << cfg.threshold << '\n';
      } else {
        cfg.threshold = an_threshold;
      }
      if (!an_queries.empty()) cfg.queries = anchors::read_csv_file(an_queries);
      emit_report(anchors::run_experiment(data, cfg), an_opts);
      return 0;
    }
    if (ap->parsed()) {
      const anchors::Dataset data = anchors::read_csv_file(ap_opts.input);
      anchors::ExperimentConfig cfg = make_config(ap_opts);
      cfg.algorithm = anchors::Algorithm::allpairs;
      cfg.rho_min = ap_rho;
      emit_report(anchors::run_experiment(data, cfg), ap_opts);
      return 0;
    }
    if (cb->parsed()) {
      const anchors::Dataset data = anchors::read_csv_file(cb_opts.input);
      anchors::ExperimentConfig cfg = make_config(cb_opts);
      if (cb_algo == "kmeans") {
        cfg.algorithm = anchors::Algorithm::kmeans;
        cfg.k = cb_k;
        cfg.max_iters = cb_iters;
      } else if (cb_algo == "anomaly") {
        cfg.algorithm = anchors::Algorithm::anomaly;
        cfg.range = cb_range;
        cfg.threshold = cb_threshold;
      } else {
        cfg.algorithm = anchors::Algorithm::allpairs;
        cfg.rho_min = cb_rho;
      }
      const anchors::BuilderComparison cmp = anchors::compare_builders(data, cfg);
      if (cb_opts.report == "json") {
        json j{{"anchors", report_to_json(cmp.anchors_built)},
               {"topdown", report_to_json(cmp.top_down_built)},
               {"fast_count_ratio", cmp.fast_count_ratio}};
        std::cout << j.dump(2) << '\n';
      } else {
        anchors::write_report_tsv_header(std::cout);
        anchors::write_report_tsv_row(cmp.anchors_built, std::cout);
        anchors::write_report_tsv_row(cmp.top_down_built, std::cout);
        std::cout << "fast_count_ratio_topdown_over_anchors\t"
                  << anchors::format_double(cmp.fast_count_ratio) << '\n';
      }
      return 0;
    }
    if (ci->parsed()) {
      const anchors::Dataset data = anchors::read_csv_file(ci_opts.input);
      anchors::ExperimentConfig cfg = make_config(ci_opts);
      cfg.algorithm = anchors::Algorithm::kmeans;
      cfg.k = ci_k;
      cfg.max_iters = ci_iters;
      const anchors::InitComparison cmp = anchors::compare_inits(data, cfg);
      if (ci_opts.report == "json") {
        json j{{"dataset", cfg.dataset_name},
               {"k", ci_k},
               {"iters", ci_iters},
               {"start_random", cmp.start_random},
               {"start_anchors", cmp.start_anchors},
               {"end_random", cmp.end_random},
               {"end_anchors", cmp.end_anchors},
               {"start_benefit", cmp.start_benefit},
               {"end_benefit", cmp.end_benefit}};
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << "dataset\tk\tstart_random\tstart_anchors\tend_random\tend_anchors\t"
                     "start_benefit\tend_benefit\n"
                  << cfg.dataset_name << '\t' << ci_k << '\t'
                  << anchors::format_double(cmp.start_random) << '\t'
                  << anchors::format_double(cmp.start_anchors) << '\t'
                  << anchors::format_double(cmp.end_random) << '\t'
                  << anchors::format_double(cmp.end_anchors) << '\t'
                  << anchors::format_double(cmp.start_benefit) << '\t'
                  << anchors::format_double(cmp.end_benefit) << '\n';
      }
      return 0;
    }
  } catch (const anchors::MismatchError& e) {
    std::cerr << "mismatch: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
