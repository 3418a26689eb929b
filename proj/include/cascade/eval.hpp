#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cascade/dataset.hpp"
#include "cascade/model.hpp"
#include "cascade/prototypes.hpp"
#include "cascade/synth.hpp"

namespace cascade {

// Ranked-retrieval AP: rank by (score desc, stable node order), average the
// precision at each positive. Undefined (defined=false) without positives.
double ranked_ap(const Vec& scores, const std::vector<std::uint8_t>& labels, bool* defined);

struct APResult {
  Vec ap;  // per class; 0 when undefined
  std::vector<std::uint8_t> defined;
  double ap_terminal = 0.0;
  double map_prototypes = 0.0;  // mean over defined classes 0..k-1
  double map_all = 0.0;         // mean over all defined classes
  int excluded_classes = 0;
  std::size_t n_nodes = 0;
};

// Teacher-forced per-node scores: states follow the ground-truth tree.
struct PerNodeScores {
  int k = 0;
  std::vector<Vec> scores;  // one (k+1)-vector per node, corpus order
  std::vector<NodeTarget> targets;
  std::vector<int> poster_distinct_cats;
};

PerNodeScores collect_node_scores(const ModelParams& params,
                                  const std::vector<TreeSample>& samples);
APResult ap_from_scores(const PerNodeScores& scores);
APResult per_node_eval(const ModelParams& params, const std::vector<TreeSample>& samples);

// AP recomputed per poster partition: users posting to a single category
// (N = 1) vs several (N > 1).
struct CategoryBreakdown {
  APResult single;
  APResult multi;
  std::size_t n_single = 0, n_multi = 0;
};
CategoryBreakdown category_breakdown(const PerNodeScores& scores);

struct GenerationConfig {
  double terminal_threshold = 0.5;
  double prototype_threshold = 0.5;
  TreeCaps caps;
};

// Free-running generation over prototypes.
struct GenTree {
  std::vector<int> proto;   // proto[0] is the root's prototype
  std::vector<int> parent;  // -1 for the root
  std::vector<int> depth;
  int size() const { return static_cast<int>(proto.size()); }
  int tree_depth() const;
  // Mean centroid category distribution over non-root nodes; empty when the
  // tree is a single root.
  Vec category_distribution(const PrototypeModel& protos) const;
};

// Breadth-first expansion: a node is a leaf when the terminal probability
// clears terminal_threshold; otherwise it spawns one child per prototype
// class clearing prototype_threshold, each child fed that prototype's
// centroid feature. Caps are hard limits; generation always terminates.
GenTree generate_tree(const ModelParams& params, const PrototypeModel& protos,
                      const Vec& root_social, int root_proto, const Vec& embedding_std,
                      const GenerationConfig& cfg);

// Depth MAE bucketed by reference depth, averaged over non-empty buckets.
double depth_mae(const std::vector<int>& gen_depths, const std::vector<int>& ref_depths);

// Sum of elementwise minima of two normalized histograms.
double histogram_intersection(const Vec& d1, const Vec& d2);

struct TreeGenScores {
  double depth_mae = 0.0;
  double hi = 0.0;
  int hi_scored = 0;
  int hi_skipped = 0;
  int n_trees = 0;
};

TreeGenScores evaluate_generation(const ModelParams& params, const PrototypeModel& protos,
                                  const std::vector<TreeSample>& test_set,
                                  const GenerationConfig& cfg);

// Terminal threshold stays at 0.5; the scalar prototype threshold sweeps a
// grid and the depth-MAE argmin on validation wins, ties to the larger
// threshold.
GenerationConfig calibrate_thresholds(const ModelParams& params, const PrototypeModel& protos,
                                      const std::vector<TreeSample>& val_set, TreeCaps caps,
                                      const Vec& grid = {});

// Chance performance: per reference tree, sample a training tree uniformly
// and use its shape and users, ignoring all inputs.
TreeGenScores chance_generation(const std::vector<TreeSample>& train_set,
                                const std::vector<TreeSample>& test_set, std::uint64_t seed);

// key=value report, fixed key order, deterministic formatting
void write_metrics(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& entries);
std::string format_metric(double v);

}  // namespace cascade
