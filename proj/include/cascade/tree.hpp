#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cascade {

inline constexpr int kNumCategories = 38;
inline constexpr int kNumActivity = 4;  // pins, followers, followings, likes
inline constexpr int kSocialDim = kNumActivity + kNumCategories;

struct TreeNode {
  std::string user_id;
  int parent = -1;  // -1 for the root
  std::vector<int> children;
  int depth = 0;
};

// Rooted share tree. Nodes are stored in a topological order: the root is
// node 0 and every node's parent index is smaller than its own.
struct DiffusionTree {
  std::string tree_id;
  std::string content_id;
  std::vector<TreeNode> nodes;

  int size() const { return static_cast<int>(nodes.size()); }
  int depth() const;                 // max node depth; depth(root) = 0
  int width() const;                 // max node count at any single depth
  void recompute_derived();          // children lists and depths from parents

  // Throws std::invalid_argument when storage is not parent-before-child.
  void validate() const;
};

struct TreeStats {
  double mean_size = 0, std_size = 0;
  double mean_width = 0, std_width = 0;
  double mean_depth = 0, std_depth = 0;
};

// Population std. Throws on an empty corpus.
TreeStats corpus_stats(const std::vector<DiffusionTree>& trees);

// Per-node (k+1)-dim binary target: entry u in [0,k) is 1 iff some child of
// the node maps to prototype u; entry k is 1 iff the node is a leaf.
// Duplicate same-prototype children collapse to a single positive.
using NodeTarget = std::vector<std::uint8_t>;

std::vector<NodeTarget> node_targets(const DiffusionTree& tree,
                                     const std::function<int(const std::string&)>& proto_of,
                                     int k);

struct SplitIndices {
  std::vector<int> train, val, test;
};

// Tree-level 6:1:1 split, deterministic under seed. Requires >= 8 trees.
SplitIndices split_corpus(std::size_t n_trees, std::uint64_t seed);

}  // namespace cascade
