#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cascade/corpus.hpp"
#include "cascade/tree.hpp"

namespace cascade {

struct TreeCaps {
  int max_depth = 10;
  int max_size = 150;
  int max_width = 100;
};

struct SynthParams {
  int k = 10;
  int n_topics = 3;
  int n_users = 3000;
  int embed_dim = 16;
  // child-prototype mixture: parent preference vs root preference vs topic
  double parent_weight = 0.4;
  double root_weight = 0.3;
  double topic_weight = 0.3;
  // expected children per node = base + root_span*influence(root) + topic_span*tb(topic)
  double budget_base = 0.45;
  double budget_root_span = 0.35;
  double budget_topic_span = 0.10;
  // fraction of activity fields blanked in the emitted user table
  double missing_rate = 0.0;
};

// A branching-process world over k latent prototypes. Child spawning is
// conditioned on the parent prototype, the ROOT prototype, and the content
// topic, so an optimal predictor must remember the start of the cascade;
// a memoryless model cannot recover the root or topic at depth >= 2.
struct SyntheticWorld {
  SynthParams params;
  std::uint64_t seed = 0;

  std::vector<Vec> base_pref;    // k x k, row = parent prototype
  std::vector<Vec> root_pref;    // k x k, row = root prototype
  std::vector<Vec> topic_pref;   // T x k
  std::vector<double> root_influence;  // k, in [0,1]
  std::vector<double> topic_budget;    // T, in [0,1]
  std::vector<Vec> topic_direction;    // T x embed_dim
  std::vector<double> mean_log_activity[kNumActivity];  // per prototype
  std::vector<int> preferred_cat;      // k x 3 flattened
  std::vector<double> preferred_cat_weight;  // k x 3 flattened

  static SyntheticWorld build(const SynthParams& params, std::uint64_t seed);

  double budget(int root_proto, int topic) const;
  // Bernoulli spawn probability per child prototype; sums to budget().
  Vec spawn_probs(int parent_proto, int root_proto, int topic) const;
  Vec category_weights(int proto) const;  // 38-dim, sums to 1
};

struct SynthCorpus {
  std::vector<DiffusionTree> trees;
  std::vector<UserRecord> users;
  std::vector<std::pair<std::string, Vec>> embeddings;  // one content per tree
  std::vector<int> user_proto;  // latent prototype per user (not emitted)
  std::vector<int> tree_topic;  // latent topic per tree (not emitted)
};

SynthCorpus generate_synthetic(const SyntheticWorld& world, int n_trees, TreeCaps caps);

void write_synth_manifest(const std::string& path, const SyntheticWorld& world, int n_trees,
                          TreeCaps caps);

}  // namespace cascade
