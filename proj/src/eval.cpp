#include "cascade/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "cascade/rng.hpp"

namespace cascade {

double ranked_ap(const Vec& scores, const std::vector<std::uint8_t>& labels, bool* defined) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("ranked_ap: scores/labels length mismatch");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];  // stable keeps node order on ties
  });
  double positives_seen = 0.0;
  double precision_sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]]) {
      positives_seen += 1.0;
      precision_sum += positives_seen / static_cast<double>(rank + 1);
    }
  }
  if (defined) *defined = positives_seen > 0.0;
  return positives_seen > 0.0 ? precision_sum / positives_seen : 0.0;
}

PerNodeScores collect_node_scores(const ModelParams& params,
                                  const std::vector<TreeSample>& samples) {
  PerNodeScores out;
  out.k = params.dims.k;
  Rng rng(0, "unused");
  for (const auto& s : samples) {
    TreeCache cache = tree_forward(params, *s.tree, s.inputs, s.embedding, Mode::Eval, 0.0, rng);
    for (std::size_t n = 0; n < cache.nodes.size(); ++n) {
      out.scores.push_back(cache.nodes[n].probs);
      out.targets.push_back(s.targets[n]);
      out.poster_distinct_cats.push_back(s.node_distinct_cats[n]);
    }
  }
  return out;
}

APResult ap_from_scores(const PerNodeScores& scores) {
  const std::size_t classes = static_cast<std::size_t>(scores.k) + 1;
  APResult res;
  res.ap.assign(classes, 0.0);
  res.defined.assign(classes, 0);
  res.n_nodes = scores.scores.size();
  Vec column(scores.scores.size());
  std::vector<std::uint8_t> labels(scores.scores.size());
  double sum_proto = 0.0;
  int n_proto = 0;
  double sum_all = 0.0;
  int n_all = 0;
  for (std::size_t u = 0; u < classes; ++u) {
    for (std::size_t i = 0; i < scores.scores.size(); ++i) {
      column[i] = scores.scores[i][u];
      labels[i] = scores.targets[i][u];
    }
    bool defined = false;
    double ap = ranked_ap(column, labels, &defined);
    res.ap[u] = defined ? ap : 0.0;
    res.defined[u] = defined;
    if (!defined) {
      res.excluded_classes++;
      continue;
    }
    sum_all += ap;
    ++n_all;
    if (u + 1 < classes) {
      sum_proto += ap;
      ++n_proto;
    } else {
      res.ap_terminal = ap;
    }
  }
  res.map_prototypes = n_proto > 0 ? sum_proto / n_proto : 0.0;
  res.map_all = n_all > 0 ? sum_all / n_all : 0.0;
  return res;
}

APResult per_node_eval(const ModelParams& params, const std::vector<TreeSample>& samples) {
  return ap_from_scores(collect_node_scores(params, samples));
}

CategoryBreakdown category_breakdown(const PerNodeScores& scores) {
  CategoryBreakdown out;
  PerNodeScores single, multi;
  single.k = multi.k = scores.k;
  for (std::size_t i = 0; i < scores.scores.size(); ++i) {
    PerNodeScores& dst = scores.poster_distinct_cats[i] <= 1 ? single : multi;
    dst.scores.push_back(scores.scores[i]);
    dst.targets.push_back(scores.targets[i]);
    dst.poster_distinct_cats.push_back(scores.poster_distinct_cats[i]);
  }
  out.n_single = single.scores.size();
  out.n_multi = multi.scores.size();
  if (!single.scores.empty()) out.single = ap_from_scores(single);
  if (!multi.scores.empty()) out.multi = ap_from_scores(multi);
  return out;
}

int GenTree::tree_depth() const {
  int d = 0;
  for (int x : depth) d = std::max(d, x);
  return d;
}

Vec GenTree::category_distribution(const PrototypeModel& protos) const {
  if (size() <= 1) return {};
  Vec mean(kNumCategories, 0.0);
  for (int n = 1; n < size(); ++n) {
    Vec d = protos.centroid_category_distribution(proto[static_cast<std::size_t>(n)]);
    axpy(1.0, d, mean);
  }
  for (auto& v : mean) v /= static_cast<double>(size() - 1);
  return mean;
}

GenTree generate_tree(const ModelParams& params, const PrototypeModel& protos,
                      const Vec& root_social, int root_proto, const Vec& embedding_std,
                      const GenerationConfig& cfg) {
  if (cfg.terminal_threshold <= 0.0 || cfg.terminal_threshold >= 1.0 ||
      cfg.prototype_threshold <= 0.0 || cfg.prototype_threshold >= 1.0) {
    throw std::invalid_argument("generate_tree: thresholds must lie in (0,1)");
  }
  const int k = protos.k;
  if (params.dims.k != k) {
    throw std::invalid_argument("generate_tree: model k " + std::to_string(params.dims.k) +
                                " vs prototype k " + std::to_string(k));
  }
  auto make_input = [&](const Vec& social) {
    switch (params.variant) {
      case Variant::ImageOnly:
        return embedding_std;
      case Variant::Fc: {
        Vec in = social;
        in.insert(in.end(), embedding_std.begin(), embedding_std.end());
        return in;
      }
      default:
        return social;
    }
  };

  GenTree tree;
  tree.proto.push_back(root_proto);
  tree.parent.push_back(-1);
  tree.depth.push_back(0);

  const bool lstm = is_lstm_variant(params.variant);
  std::vector<Vec> state_c, state_h;
  Rng rng(0, "unused");  // eval mode, dropout inactive
  Vec c0, h0;
  if (lstm) {
    c0 = init_root(embedding_std, params);
    h0 = Vec(static_cast<std::size_t>(params.dims.hidden), 0.0);
    state_c.reserve(static_cast<std::size_t>(cfg.caps.max_size));
    state_h.reserve(static_cast<std::size_t>(cfg.caps.max_size));
  }

  std::vector<int> level_count(static_cast<std::size_t>(cfg.caps.max_depth) + 1, 0);
  level_count[0] = 1;
  std::size_t head = 0;
  while (head < tree.proto.size()) {
    int node = static_cast<int>(head);
    ++head;
    NodeCache nc;
    Vec social = node == 0 ? root_social
                           : protos.centroid_feature(tree.proto[static_cast<std::size_t>(node)]);
    Vec input = make_input(social);
    if (lstm) {
      int parent = tree.parent[static_cast<std::size_t>(node)];
      const Vec& c_p = parent < 0 ? c0 : state_c[static_cast<std::size_t>(parent)];
      const Vec& h_p = parent < 0 ? h0 : state_h[static_cast<std::size_t>(parent)];
      cell_step(input, c_p, h_p, params, nc);
      head_forward(nc.h, params, Mode::Eval, 0.0, rng, nc);
      state_c.push_back(nc.c);
      state_h.push_back(nc.h);
    } else {
      // FC baseline is stateless; run it through the single-node path
      DiffusionTree one;
      one.nodes.push_back(TreeNode{});
      TreeCache cache = tree_forward(params, one, {input}, embedding_std, Mode::Eval, 0.0, rng);
      nc.probs = cache.nodes[0].probs;
    }
    int depth = tree.depth[static_cast<std::size_t>(node)];
    if (nc.probs[static_cast<std::size_t>(k)] >= cfg.terminal_threshold) continue;
    if (depth >= cfg.caps.max_depth) continue;
    for (int u = 0; u < k; ++u) {
      if (nc.probs[static_cast<std::size_t>(u)] < cfg.prototype_threshold) continue;
      if (tree.size() >= cfg.caps.max_size) break;
      if (level_count[static_cast<std::size_t>(depth) + 1] >= cfg.caps.max_width) break;
      tree.proto.push_back(u);
      tree.parent.push_back(node);
      tree.depth.push_back(depth + 1);
      level_count[static_cast<std::size_t>(depth) + 1]++;
    }
  }
  return tree;
}

double depth_mae(const std::vector<int>& gen_depths, const std::vector<int>& ref_depths) {
  if (gen_depths.size() != ref_depths.size() || gen_depths.empty()) {
    throw std::invalid_argument("depth_mae: paired corpora required");
  }
  std::map<int, std::pair<double, int>> buckets;  // ref depth -> (abs err sum, count)
  for (std::size_t i = 0; i < gen_depths.size(); ++i) {
    auto& b = buckets[ref_depths[i]];
    b.first += std::fabs(static_cast<double>(gen_depths[i]) - ref_depths[i]);
    b.second += 1;
  }
  double sum = 0.0;
  for (const auto& [d, b] : buckets) sum += b.first / b.second;
  return sum / static_cast<double>(buckets.size());
}

double histogram_intersection(const Vec& d1, const Vec& d2) {
  if (d1.size() != d2.size()) {
    throw std::invalid_argument("histogram_intersection: dim mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < d1.size(); ++i) s += std::min(d1[i], d2[i]);
  return s;
}

namespace {

Vec reference_category_distribution(const TreeSample& s) {
  if (s.tree->size() <= 1) return {};
  Vec mean(kNumCategories, 0.0);
  for (int n = 1; n < s.tree->size(); ++n) {
    axpy(1.0, s.node_cat_dist[static_cast<std::size_t>(n)], mean);
  }
  for (auto& v : mean) v /= static_cast<double>(s.tree->size() - 1);
  return mean;
}

TreeGenScores score_pairs(const std::vector<int>& gen_depths, const std::vector<Vec>& gen_dists,
                          const std::vector<TreeSample>& refs) {
  TreeGenScores out;
  out.n_trees = static_cast<int>(refs.size());
  std::vector<int> ref_depths;
  ref_depths.reserve(refs.size());
  for (const auto& s : refs) ref_depths.push_back(s.tree->depth());
  out.depth_mae = depth_mae(gen_depths, ref_depths);
  double hi_sum = 0.0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    Vec ref_dist = reference_category_distribution(refs[i]);
    if (gen_dists[i].empty() || ref_dist.empty()) {
      out.hi_skipped++;
      continue;
    }
    hi_sum += histogram_intersection(gen_dists[i], ref_dist);
    out.hi_scored++;
  }
  out.hi = out.hi_scored > 0 ? hi_sum / out.hi_scored : 0.0;
  return out;
}

}  // namespace

TreeGenScores evaluate_generation(const ModelParams& params, const PrototypeModel& protos,
                                  const std::vector<TreeSample>& test_set,
                                  const GenerationConfig& cfg) {
  if (test_set.empty()) throw std::invalid_argument("evaluate_generation: empty test set");
  std::vector<int> gen_depths;
  std::vector<Vec> gen_dists;
  gen_depths.reserve(test_set.size());
  gen_dists.reserve(test_set.size());
  for (const auto& s : test_set) {
    GenTree g = generate_tree(params, protos, s.root_social, s.node_proto[0], s.embedding, cfg);
    gen_depths.push_back(g.tree_depth());
    gen_dists.push_back(g.category_distribution(protos));
  }
  return score_pairs(gen_depths, gen_dists, test_set);
}

GenerationConfig calibrate_thresholds(const ModelParams& params, const PrototypeModel& protos,
                                      const std::vector<TreeSample>& val_set, TreeCaps caps,
                                      const Vec& grid) {
  if (val_set.empty()) throw std::invalid_argument("calibrate_thresholds: empty validation set");
  Vec candidates = grid;
  if (candidates.empty()) {
    for (int i = 1; i <= 19; ++i) candidates.push_back(0.05 * i);
  }
  GenerationConfig cfg;
  cfg.caps = caps;
  double best_mae = std::numeric_limits<double>::infinity();
  double best_threshold = candidates.front();
  for (double th : candidates) {
    GenerationConfig trial = cfg;
    trial.prototype_threshold = th;
    TreeGenScores s = evaluate_generation(params, protos, val_set, trial);
    if (s.depth_mae <= best_mae) {  // ties go to the larger threshold
      best_mae = s.depth_mae;
      best_threshold = th;
    }
  }
  cfg.prototype_threshold = best_threshold;
  return cfg;
}

TreeGenScores chance_generation(const std::vector<TreeSample>& train_set,
                                const std::vector<TreeSample>& test_set, std::uint64_t seed) {
  if (train_set.empty() || test_set.empty()) {
    throw std::invalid_argument("chance_generation: empty corpus");
  }
  Rng rng(seed, "chance");
  std::vector<int> gen_depths;
  std::vector<Vec> gen_dists;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const TreeSample& pick = train_set[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(train_set.size())))];
    gen_depths.push_back(pick.tree->depth());
    gen_dists.push_back(reference_category_distribution(pick));
  }
  return score_pairs(gen_depths, gen_dists, test_set);
}

std::string format_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_metrics(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write metrics report " + path);
  for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

}  // namespace cascade
