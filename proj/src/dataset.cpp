#include "cascade/dataset.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace cascade {

StandardizeStats fit_standardize(const std::vector<const Vec*>& embeddings) {
  if (embeddings.size() < 2) {
    throw std::invalid_argument("fit_standardize: need at least 2 embeddings");
  }
  const std::size_t dim = embeddings[0]->size();
  StandardizeStats st;
  st.mean.assign(dim, 0.0);
  st.stddev.assign(dim, 0.0);
  for (const auto* e : embeddings) {
    if (e->size() != dim) throw std::invalid_argument("fit_standardize: inconsistent dims");
    for (std::size_t d = 0; d < dim; ++d) st.mean[d] += (*e)[d];
  }
  for (auto& v : st.mean) v /= static_cast<double>(embeddings.size());
  for (const auto* e : embeddings) {
    for (std::size_t d = 0; d < dim; ++d) {
      double diff = (*e)[d] - st.mean[d];
      st.stddev[d] += diff * diff;
    }
  }
  for (auto& v : st.stddev) v = std::sqrt(v / static_cast<double>(embeddings.size()));
  return st;
}

Vec standardize(const Vec& e, const StandardizeStats& stats) {
  if (e.size() != stats.mean.size()) {
    throw std::invalid_argument("standardize: embedding dim " + std::to_string(e.size()) +
                                " vs stats dim " + std::to_string(stats.mean.size()));
  }
  Vec out(e.size());
  for (std::size_t d = 0; d < e.size(); ++d) {
    out[d] = stats.stddev[d] > 0.0 ? (e[d] - stats.mean[d]) / stats.stddev[d] : 0.0;
  }
  return out;
}

std::vector<const UserRecord*> users_in_trees(const std::vector<DiffusionTree>& trees,
                                              const std::vector<int>& tree_indices,
                                              const Corpus& corpus) {
  std::vector<const UserRecord*> out;
  std::unordered_set<std::string> seen;
  for (int ti : tree_indices) {
    for (const auto& node : trees[static_cast<std::size_t>(ti)].nodes) {
      if (seen.insert(node.user_id).second) out.push_back(&corpus.user(node.user_id));
    }
  }
  return out;
}

std::vector<TreeSample> build_samples(const std::vector<DiffusionTree>& trees,
                                      const std::vector<int>& tree_indices, const Corpus& corpus,
                                      const PrototypeModel& protos,
                                      const StandardizeStats& emb_stats, Variant variant) {
  std::vector<TreeSample> samples;
  samples.reserve(tree_indices.size());
  for (int ti : tree_indices) {
    const DiffusionTree& tree = trees[static_cast<std::size_t>(ti)];
    TreeSample s;
    s.tree = &tree;
    s.embedding = standardize(corpus.embedding(tree.content_id), emb_stats);
    s.inputs.reserve(tree.nodes.size());
    s.node_proto.reserve(tree.nodes.size());
    for (const auto& node : tree.nodes) {
      const UserRecord& user = corpus.user(node.user_id);
      Vec social = build_feature(user, protos.norm);
      s.node_proto.push_back(map_feature(protos, social));
      s.node_distinct_cats.push_back(user.distinct_categories());
      s.node_cat_dist.push_back(user.category_distribution());
      if (s.root_social.empty()) s.root_social = social;
      switch (variant) {
        case Variant::ImageOnly:
          s.inputs.push_back(s.embedding);
          break;
        case Variant::Fc: {
          Vec in = social;
          in.insert(in.end(), s.embedding.begin(), s.embedding.end());
          s.inputs.push_back(std::move(in));
          break;
        }
        default:
          s.inputs.push_back(std::move(social));
      }
    }
    std::unordered_map<std::string, int> proto_of;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      proto_of[tree.nodes[i].user_id] = s.node_proto[i];
    }
    s.targets = node_targets(
        tree, [&](const std::string& uid) { return proto_of.at(uid); }, protos.k);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace cascade
