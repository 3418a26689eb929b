#pragma once

#include <vector>

#include "cascade/corpus.hpp"
#include "cascade/model.hpp"
#include "cascade/prototypes.hpp"
#include "cascade/tree.hpp"

namespace cascade {

// Per-dimension standardization of content embeddings, fitted on the
// training split. Zero-variance dimensions pass through as 0.
struct StandardizeStats {
  Vec mean, stddev;
};

StandardizeStats fit_standardize(const std::vector<const Vec*>& embeddings);
Vec standardize(const Vec& e, const StandardizeStats& stats);

// One tree prepared for a model variant: per-node input vectors, per-node
// (k+1) targets, and the side information evaluation needs.
struct TreeSample {
  const DiffusionTree* tree = nullptr;
  std::vector<Vec> inputs;
  std::vector<NodeTarget> targets;
  Vec embedding;  // standardized
  std::vector<int> node_proto;
  std::vector<int> node_distinct_cats;
  std::vector<Vec> node_cat_dist;  // each user's raw category distribution
  Vec root_social;                 // root user's 42-D feature (generation input)
};

std::vector<TreeSample> build_samples(const std::vector<DiffusionTree>& trees,
                                      const std::vector<int>& tree_indices, const Corpus& corpus,
                                      const PrototypeModel& protos,
                                      const StandardizeStats& emb_stats, Variant variant);

// Users appearing in the given trees, first-appearance order, deduplicated.
std::vector<const UserRecord*> users_in_trees(const std::vector<DiffusionTree>& trees,
                                              const std::vector<int>& tree_indices,
                                              const Corpus& corpus);

}  // namespace cascade
