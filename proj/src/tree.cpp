#include "cascade/tree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cascade/rng.hpp"

namespace cascade {

int DiffusionTree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

int DiffusionTree::width() const {
  std::vector<int> counts(static_cast<std::size_t>(depth()) + 1, 0);
  for (const auto& n : nodes) counts[static_cast<std::size_t>(n.depth)]++;
  return *std::max_element(counts.begin(), counts.end());
}

void DiffusionTree::recompute_derived() {
  for (auto& n : nodes) n.children.clear();
  for (int i = 0; i < size(); ++i) {
    int p = nodes[static_cast<std::size_t>(i)].parent;
    if (p < 0) {
      nodes[static_cast<std::size_t>(i)].depth = 0;
    } else {
      nodes[static_cast<std::size_t>(p)].children.push_back(i);
      nodes[static_cast<std::size_t>(i)].depth = nodes[static_cast<std::size_t>(p)].depth + 1;
    }
  }
}

void DiffusionTree::validate() const {
  if (nodes.empty()) throw std::invalid_argument("tree " + tree_id + ": empty");
  if (nodes[0].parent != -1) throw std::invalid_argument("tree " + tree_id + ": node 0 is not the root");
  for (int i = 1; i < size(); ++i) {
    int p = nodes[static_cast<std::size_t>(i)].parent;
    if (p < 0 || p >= i) {
      throw std::invalid_argument("tree " + tree_id + ": node " + std::to_string(i) +
                                  " has parent " + std::to_string(p) +
                                  " (storage must be parent-before-child)");
    }
  }
}

TreeStats corpus_stats(const std::vector<DiffusionTree>& trees) {
  if (trees.empty()) throw std::invalid_argument("corpus_stats: empty corpus");
  auto mean_std = [](const std::vector<double>& xs, double& mean, double& sd) {
    double s = 0;
    for (double x : xs) s += x;
    mean = s / static_cast<double>(xs.size());
    double v = 0;
    for (double x : xs) v += (x - mean) * (x - mean);
    sd = std::sqrt(v / static_cast<double>(xs.size()));
  };
  std::vector<double> sizes, widths, depths;
  for (const auto& t : trees) {
    sizes.push_back(t.size());
    widths.push_back(t.width());
    depths.push_back(t.depth());
  }
  TreeStats st;
  mean_std(sizes, st.mean_size, st.std_size);
  mean_std(widths, st.mean_width, st.std_width);
  mean_std(depths, st.mean_depth, st.std_depth);
  return st;
}

std::vector<NodeTarget> node_targets(const DiffusionTree& tree,
                                     const std::function<int(const std::string&)>& proto_of,
                                     int k) {
  std::vector<int> proto(tree.nodes.size());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    int p = proto_of(tree.nodes[i].user_id);
    if (p < 0 || p >= k) {
      throw std::invalid_argument("node_targets: user " + tree.nodes[i].user_id +
                                  " maps to prototype " + std::to_string(p) +
                                  ", outside [0," + std::to_string(k) + ")");
    }
    proto[i] = p;
  }
  std::vector<NodeTarget> targets(tree.nodes.size(), NodeTarget(static_cast<std::size_t>(k) + 1, 0));
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.children.empty()) {
      targets[i][static_cast<std::size_t>(k)] = 1;
    } else {
      for (int ch : n.children) targets[i][static_cast<std::size_t>(proto[static_cast<std::size_t>(ch)])] = 1;
    }
  }
  return targets;
}

SplitIndices split_corpus(std::size_t n_trees, std::uint64_t seed) {
  if (n_trees < 8) {
    throw std::invalid_argument("split_corpus: need at least 8 trees for a 6:1:1 split, got " +
                                std::to_string(n_trees));
  }
  std::vector<int> order(n_trees);
  for (std::size_t i = 0; i < n_trees; ++i) order[i] = static_cast<int>(i);
  Rng rng(seed, "split");
  rng.shuffle(order);
  std::size_t n_val = std::max<std::size_t>(1, n_trees / 8);
  std::size_t n_test = std::max<std::size_t>(1, n_trees / 8);
  std::size_t n_train = n_trees - n_val - n_test;
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

}  // namespace cascade
