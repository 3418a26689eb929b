#include "cascade/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "cascade/rng.hpp"

namespace cascade {

namespace {

double frac(double x) { return x - std::floor(x); }

}  // namespace

SyntheticWorld SyntheticWorld::build(const SynthParams& params, std::uint64_t seed) {
  if (params.k < 2) throw std::invalid_argument("synth: k must be >= 2");
  if (params.n_topics < 1) throw std::invalid_argument("synth: n_topics must be >= 1");
  if (params.n_users < params.k) throw std::invalid_argument("synth: need n_users >= k");
  double max_budget =
      params.budget_base + params.budget_root_span + params.budget_topic_span;
  if (max_budget >= 1.0) {
    throw std::invalid_argument("synth: branching budget can reach " + std::to_string(max_budget) +
                                "; must stay below 1 (sub-critical)");
  }
  SyntheticWorld w;
  w.params = params;
  w.seed = seed;
  const int k = params.k;
  const int T = params.n_topics;
  Rng rng(seed, "world");

  w.root_influence.resize(k);
  for (int p = 0; p < k; ++p) w.root_influence[p] = k > 1 ? double(p) / double(k - 1) : 0.5;
  w.topic_budget.resize(T);
  for (int t = 0; t < T; ++t) w.topic_budget[t] = T > 1 ? double(t) / double(T - 1) : 0.5;

  // parent preference: a ring so child prototypes drift with the parent's
  w.base_pref.assign(k, Vec(k, 0.0));
  for (int p = 0; p < k; ++p) {
    w.base_pref[p][(p + 1) % k] += 0.5;
    w.base_pref[p][(p + 3) % k] += 0.3;
    w.base_pref[p][p] += 0.2;
  }
  // root preference: cascades keep returning to the root's community
  w.root_pref.assign(k, Vec(k, 0.0));
  for (int r = 0; r < k; ++r) {
    w.root_pref[r][r] += 0.6;
    w.root_pref[r][(r + k / 2) % k] += 0.4;
  }
  // topic preference: each topic owns a residue class of prototypes
  w.topic_pref.assign(T, Vec(k, 0.0));
  for (int t = 0; t < T; ++t) {
    int n_owned = 0;
    for (int u = 0; u < k; ++u) {
      if (u % T == t % T) ++n_owned;
    }
    for (int u = 0; u < k; ++u) {
      if (u % T == t % T) w.topic_pref[t][u] = 1.0 / n_owned;
    }
  }

  // activity profiles: followers grow with influence so branching potential
  // is readable from the social feature; the rest just separate clusters
  for (int a = 0; a < kNumActivity; ++a) w.mean_log_activity[a].resize(k);
  for (int p = 0; p < k; ++p) {
    w.mean_log_activity[0][p] = rng.uniform(1.0, 5.0);                    // pins
    w.mean_log_activity[1][p] = 1.0 + 4.0 * w.root_influence[p];          // followers
    w.mean_log_activity[2][p] = rng.uniform(1.0, 5.0);                    // followings
    w.mean_log_activity[3][p] = rng.uniform(1.0, 5.0);                    // likes
  }

  // category taste: up to three preferred categories per prototype; every
  // third prototype is single-category so the N=1 / N>1 breakdown has both
  w.preferred_cat.resize(3 * static_cast<std::size_t>(k));
  w.preferred_cat_weight.resize(3 * static_cast<std::size_t>(k));
  for (int p = 0; p < k; ++p) {
    int base = static_cast<int>(std::floor(frac(p * 0.618033988749) * kNumCategories));
    w.preferred_cat[3 * p + 0] = base % kNumCategories;
    w.preferred_cat[3 * p + 1] = (base + 11) % kNumCategories;
    w.preferred_cat[3 * p + 2] = (base + 23) % kNumCategories;
    if (p % 3 == 0) {
      w.preferred_cat_weight[3 * p + 0] = 1.0;
      w.preferred_cat_weight[3 * p + 1] = 0.0;
      w.preferred_cat_weight[3 * p + 2] = 0.0;
    } else {
      w.preferred_cat_weight[3 * p + 0] = 0.7;
      w.preferred_cat_weight[3 * p + 1] = 0.2;
      w.preferred_cat_weight[3 * p + 2] = 0.1;
    }
  }

  // topic directions: random, roughly orthogonal at embed_dim >> T
  w.topic_direction.assign(T, Vec(params.embed_dim, 0.0));
  for (int t = 0; t < T; ++t) {
    double norm2 = 0.0;
    for (int d = 0; d < params.embed_dim; ++d) {
      w.topic_direction[t][d] = rng.normal();
      norm2 += w.topic_direction[t][d] * w.topic_direction[t][d];
    }
    double scale = 3.0 / std::sqrt(norm2);
    for (auto& v : w.topic_direction[t]) v *= scale;
  }
  return w;
}

double SyntheticWorld::budget(int root_proto, int topic) const {
  return params.budget_base + params.budget_root_span * root_influence[root_proto] +
         params.budget_topic_span * topic_budget[topic];
}

Vec SyntheticWorld::spawn_probs(int parent_proto, int root_proto, int topic) const {
  const int k = params.k;
  double b = budget(root_proto, topic);
  Vec q(k, 0.0);
  for (int u = 0; u < k; ++u) {
    double mix = params.parent_weight * base_pref[parent_proto][u] +
                 params.root_weight * root_pref[root_proto][u] +
                 params.topic_weight * topic_pref[topic][u];
    q[u] = b * mix;
  }
  return q;
}

Vec SyntheticWorld::category_weights(int proto) const {
  Vec wts(kNumCategories, 0.0);
  for (int j = 0; j < 3; ++j) {
    wts[preferred_cat[3 * proto + j]] += preferred_cat_weight[3 * proto + j];
  }
  return wts;
}

SynthCorpus generate_synthetic(const SyntheticWorld& world, int n_trees, TreeCaps caps) {
  if (n_trees <= 0) throw std::invalid_argument("generate_synthetic: n_trees must be positive");
  const auto& p = world.params;
  const int k = p.k;
  SynthCorpus out;
  Rng rng(world.seed, "synth");

  // user pool; round-robin prototypes so every prototype is populated
  out.users.resize(p.n_users);
  out.user_proto.resize(p.n_users);
  std::vector<std::vector<int>> users_of_proto(k);
  for (int i = 0; i < p.n_users; ++i) {
    int proto = i % k;
    out.user_proto[i] = proto;
    users_of_proto[proto].push_back(i);
    UserRecord& u = out.users[i];
    char buf[32];
    std::snprintf(buf, sizeof(buf), "u%05d", i);
    u.user_id = buf;
    for (int a = 0; a < kNumActivity; ++a) {
      double v = std::exp(world.mean_log_activity[a][proto] + 0.35 * rng.normal());
      u.activity[a] = std::floor(v);
    }
    Vec cat_w = world.category_weights(proto);
    int n_posts = 10 + rng.uniform_int(51);
    std::array<double, kNumCategories> counts{};
    for (int s = 0; s < n_posts; ++s) {
      double r = rng.uniform();
      double acc = 0.0;
      int chosen = kNumCategories - 1;
      for (int c = 0; c < kNumCategories; ++c) {
        acc += cat_w[c];
        if (r < acc) {
          chosen = c;
          break;
        }
      }
      counts[chosen] += 1.0;
    }
    for (int c = 0; c < kNumCategories; ++c) u.categories[c] = counts[c];
    if (p.missing_rate > 0.0) {
      for (int a = 0; a < kNumActivity; ++a) {
        if (rng.uniform() < p.missing_rate) u.activity[a].reset();
      }
    }
  }

  // trees: breadth-first branching process over prototypes
  out.trees.resize(n_trees);
  out.embeddings.resize(n_trees);
  out.tree_topic.resize(n_trees);
  for (int ti = 0; ti < n_trees; ++ti) {
    char tbuf[32], cbuf[32];
    std::snprintf(tbuf, sizeof(tbuf), "t%06d", ti);
    std::snprintf(cbuf, sizeof(cbuf), "c%06d", ti);
    int topic = rng.uniform_int(p.n_topics);
    out.tree_topic[ti] = topic;

    Vec emb(p.embed_dim);
    for (int d = 0; d < p.embed_dim; ++d) {
      emb[d] = world.topic_direction[topic][d] + 0.5 * rng.normal();
    }
    out.embeddings[ti] = {cbuf, std::move(emb)};

    DiffusionTree& tree = out.trees[ti];
    tree.tree_id = tbuf;
    tree.content_id = cbuf;
    int root_user = rng.uniform_int(p.n_users);
    int root_proto = out.user_proto[root_user];

    std::unordered_set<int> used{root_user};
    std::vector<int> node_proto{root_proto};
    TreeNode root;
    root.user_id = out.users[root_user].user_id;
    tree.nodes.push_back(root);

    std::vector<int> level_count(caps.max_depth + 1, 0);
    level_count[0] = 1;
    std::size_t head = 0;
    while (head < tree.nodes.size()) {
      int node = static_cast<int>(head);
      ++head;
      int depth = tree.nodes[node].depth;
      if (depth >= caps.max_depth) continue;
      Vec q = world.spawn_probs(node_proto[node], root_proto, topic);
      for (int u = 0; u < k; ++u) {
        if (rng.uniform() >= q[u]) continue;
        if (tree.size() >= caps.max_size) break;
        if (level_count[depth + 1] >= caps.max_width) break;
        // draw an unused user of prototype u; give up after a few tries
        int child_user = -1;
        for (int attempt = 0; attempt < 10; ++attempt) {
          int cand = users_of_proto[u][rng.uniform_int(static_cast<int>(users_of_proto[u].size()))];
          if (!used.count(cand)) {
            child_user = cand;
            break;
          }
        }
        if (child_user < 0) continue;
        used.insert(child_user);
        TreeNode ch;
        ch.user_id = out.users[child_user].user_id;
        ch.parent = node;
        ch.depth = depth + 1;
        tree.nodes[node].children.push_back(tree.size());
        node_proto.push_back(u);
        tree.nodes.push_back(ch);
        level_count[depth + 1]++;
      }
    }
    tree.validate();
  }
  return out;
}

void write_synth_manifest(const std::string& path, const SyntheticWorld& world, int n_trees,
                          TreeCaps caps) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write manifest " + path);
  const auto& p = world.params;
  out << "seed=" << world.seed << '\n'
      << "n_trees=" << n_trees << '\n'
      << "k=" << p.k << '\n'
      << "n_topics=" << p.n_topics << '\n'
      << "n_users=" << p.n_users << '\n'
      << "embed_dim=" << p.embed_dim << '\n'
      << "parent_weight=" << p.parent_weight << '\n'
      << "root_weight=" << p.root_weight << '\n'
      << "topic_weight=" << p.topic_weight << '\n'
      << "budget_base=" << p.budget_base << '\n'
      << "budget_root_span=" << p.budget_root_span << '\n'
      << "budget_topic_span=" << p.budget_topic_span << '\n'
      << "missing_rate=" << p.missing_rate << '\n'
      << "max_depth=" << caps.max_depth << '\n'
      << "max_size=" << caps.max_size << '\n'
      << "max_width=" << caps.max_width << '\n';
}

}  // namespace cascade
