#include <fcntl.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/config.hpp"
#include "cascade/corpus.hpp"
#include "cascade/dataset.hpp"
#include "cascade/eval.hpp"
#include "cascade/model.hpp"
#include "cascade/prototypes.hpp"
#include "cascade/synth.hpp"
#include "cascade/train.hpp"
#include "cascade/tree.hpp"

namespace fs = std::filesystem;
using namespace cascade;

namespace {

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Advisory lock: one command per workdir at a time.
class WorkdirLock {
 public:
  explicit WorkdirLock(const std::string& workdir) : path_(workdir + "/.lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw std::invalid_argument("workdir " + workdir +
                                  " is locked by another run (remove .lock if stale)");
    }
  }
  ~WorkdirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

void write_effective_config(const RunConfig& cfg, const std::string& command) {
  save_config_file(cfg.workdir + "/" + command + "_config.txt", cfg);
}

ModelDims dims_from(const RunConfig& cfg, int k, int embed_dim) {
  ModelDims d;
  d.hidden = cfg.hidden;
  d.head = cfg.head;
  d.embed = embed_dim;
  d.k = k;
  return d;
}

struct LoadedPipeline {
  Corpus corpus;
  SplitIndices split;
  PrototypeModel protos;
  StandardizeStats emb_stats;
};

LoadedPipeline load_pipeline(const RunConfig& cfg) {
  LoadedPipeline p;
  p.corpus = load_corpus(cfg.edges_path(), cfg.users_path(), cfg.embeddings_path());
  p.split = split_corpus(p.corpus.trees.size(), cfg.seed);
  p.protos = load_prototype_model(cfg.prototypes_path());
  std::vector<const Vec*> train_embs;
  for (int ti : p.split.train) {
    train_embs.push_back(&p.corpus.embedding(p.corpus.trees[static_cast<std::size_t>(ti)].content_id));
  }
  p.emb_stats = fit_standardize(train_embs);
  return p;
}

void atomic_rename(const std::string& tmp, const std::string& final_path) {
  fs::rename(tmp, final_path);
}

int cmd_synth(const RunConfig& cfg) {
  if (cfg.synth_trees <= 0) {
    throw std::invalid_argument("synth: --trees must be positive");
  }
  fs::create_directories(cfg.workdir);
  WorkdirLock lock(cfg.workdir);
  write_effective_config(cfg, "synth");
  SyntheticWorld world = SyntheticWorld::build(cfg.synth_params(), cfg.seed);
  SynthCorpus corpus = generate_synthetic(world, cfg.synth_trees, cfg.caps());
  save_edge_file(cfg.edges_path(), corpus.trees);
  save_user_file(cfg.users_path(), corpus.users);
  save_embedding_file(cfg.embeddings_path(), corpus.embeddings);
  write_synth_manifest(cfg.workdir + "/synth_manifest.txt", world, cfg.synth_trees, cfg.caps());
  TreeStats st = corpus_stats(corpus.trees);
  std::printf("wrote %zu trees, %zu users, %zu embeddings to %s\n", corpus.trees.size(),
              corpus.users.size(), corpus.embeddings.size(), cfg.workdir.c_str());
  std::printf("tree size %.2f+-%.2f, width %.2f+-%.2f, depth %.2f+-%.2f\n", st.mean_size,
              st.std_size, st.mean_width, st.std_width, st.mean_depth, st.std_depth);
  return 0;
}

int cmd_cluster(const RunConfig& cfg) {
  fs::create_directories(cfg.workdir);
  WorkdirLock lock(cfg.workdir);
  write_effective_config(cfg, "cluster");
  Corpus corpus = load_corpus(cfg.edges_path(), cfg.users_path(), cfg.embeddings_path());
  SplitIndices split = split_corpus(corpus.trees.size(), cfg.seed);
  std::vector<const UserRecord*> training_users = users_in_trees(corpus.trees, split.train, corpus);
  PrototypeModel model = fit_prototypes(training_users, cfg.k, cfg.seed);
  std::string tmp = cfg.prototypes_path() + ".tmp";
  save_prototype_model(tmp, model);
  atomic_rename(tmp, cfg.prototypes_path());
  std::vector<int> sizes(static_cast<std::size_t>(cfg.k), 0);
  for (const auto* u : training_users) sizes[static_cast<std::size_t>(map_user(model, *u))]++;
  std::printf("fit %d prototypes on %zu training users\n", cfg.k, training_users.size());
  for (int c = 0; c < cfg.k; ++c) std::printf("cluster %d: %d\n", c, sizes[static_cast<std::size_t>(c)]);
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  fs::create_directories(cfg.workdir);
  WorkdirLock lock(cfg.workdir);
  write_effective_config(cfg, "train");
  LoadedPipeline p = load_pipeline(cfg);
  Variant variant = parse_variant(cfg.variant);
  std::vector<TreeSample> train_set =
      build_samples(p.corpus.trees, p.split.train, p.corpus, p.protos, p.emb_stats, variant);
  std::vector<TreeSample> val_set =
      build_samples(p.corpus.trees, p.split.val, p.corpus, p.protos, p.emb_stats, variant);
  std::vector<NodeTarget> all_targets;
  for (const auto& s : train_set) {
    all_targets.insert(all_targets.end(), s.targets.begin(), s.targets.end());
  }
  ClassWeights weights = class_weights(all_targets, p.protos.k);
  int embed_dim = static_cast<int>(p.emb_stats.mean.size());
  ModelDims dims = dims_from(cfg, p.protos.k, embed_dim);
  TrainResult result = train_model(variant, dims, train_set, val_set, weights, cfg.train_config());

  std::string ckpt = cfg.checkpoint_path(cfg.variant);
  save_checkpoint(ckpt + ".tmp", result.params);
  atomic_rename(ckpt + ".tmp", ckpt);
  save_train_log(cfg.workdir + "/train_log_" + cfg.variant + ".tsv", result.log);
  if (result.diverged) {
    throw NumericError("training diverged: " + result.divergence_message +
                       " (last good checkpoint kept at " + ckpt + ")");
  }
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::printf("trained %s for %d epochs, final val loss %.6g\n", cfg.variant.c_str(), last.epoch,
                last.val_loss);
  } else {
    std::printf("wrote untrained %s checkpoint\n", cfg.variant.c_str());
  }
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& mode) {
  fs::create_directories(cfg.workdir);
  WorkdirLock lock(cfg.workdir);
  write_effective_config(cfg, "eval");
  LoadedPipeline p = load_pipeline(cfg);
  Variant variant = parse_variant(cfg.variant);
  ModelParams params = load_checkpoint(cfg.checkpoint_path(cfg.variant));
  if (params.variant != variant) {
    throw std::invalid_argument("checkpoint holds variant " + variant_name(params.variant) +
                                ", config says " + cfg.variant);
  }
  std::vector<TreeSample> test_set =
      build_samples(p.corpus.trees, p.split.test, p.corpus, p.protos, p.emb_stats, variant);

  if (mode == "node") {
    PerNodeScores scores = collect_node_scores(params, test_set);
    APResult ap = ap_from_scores(scores);
    CategoryBreakdown breakdown = category_breakdown(scores);
    std::string path = cfg.workdir + "/metrics_node_" + cfg.variant + ".txt";
    write_metrics(path, {{"ap_terminal", format_metric(ap.ap_terminal)},
                         {"map_prototypes", format_metric(ap.map_prototypes)},
                         {"map_all", format_metric(ap.map_all)},
                         {"excluded_classes", std::to_string(ap.excluded_classes)},
                         {"n_nodes", std::to_string(ap.n_nodes)},
                         {"n_trees", std::to_string(test_set.size())},
                         {"map_all_single_cat", format_metric(breakdown.single.map_all)},
                         {"map_all_multi_cat", format_metric(breakdown.multi.map_all)},
                         {"n_single_cat_nodes", std::to_string(breakdown.n_single)},
                         {"n_multi_cat_nodes", std::to_string(breakdown.n_multi)}});
    std::printf("node eval (%s): ap_terminal=%.4f map_prototypes=%.4f map_all=%.4f -> %s\n",
                cfg.variant.c_str(), ap.ap_terminal, ap.map_prototypes, ap.map_all, path.c_str());
    return 0;
  }
  if (mode != "tree") {
    throw std::invalid_argument("eval: --mode must be node or tree");
  }
  GenerationConfig gen_cfg;
  gen_cfg.caps = cfg.caps();
  gen_cfg.terminal_threshold = cfg.terminal_threshold;
  if (cfg.prototype_threshold >= 0.0) {
    gen_cfg.prototype_threshold = cfg.prototype_threshold;
  } else {
    std::vector<TreeSample> val_set =
        build_samples(p.corpus.trees, p.split.val, p.corpus, p.protos, p.emb_stats, variant);
    gen_cfg = calibrate_thresholds(params, p.protos, val_set, cfg.caps());
    gen_cfg.terminal_threshold = cfg.terminal_threshold;
  }
  TreeGenScores scores = evaluate_generation(params, p.protos, test_set, gen_cfg);
  std::string path = cfg.workdir + "/metrics_tree_" + cfg.variant + ".txt";
  write_metrics(path, {{"depth_mae", format_metric(scores.depth_mae)},
                       {"hi", format_metric(scores.hi)},
                       {"hi_scored", std::to_string(scores.hi_scored)},
                       {"hi_skipped", std::to_string(scores.hi_skipped)},
                       {"terminal_threshold", format_metric(gen_cfg.terminal_threshold)},
                       {"prototype_threshold", format_metric(gen_cfg.prototype_threshold)},
                       {"n_trees", std::to_string(scores.n_trees)}});
  std::printf("tree eval (%s): depth_mae=%.4f hi=%.4f threshold=%.2f -> %s\n", cfg.variant.c_str(),
              scores.depth_mae, scores.hi, gen_cfg.prototype_threshold, path.c_str());
  return 0;
}

int cmd_generate(const RunConfig& cfg, const std::string& root_user,
                 const std::string& content_id) {
  WorkdirLock lock(cfg.workdir);
  LoadedPipeline p = load_pipeline(cfg);
  Variant variant = parse_variant(cfg.variant);
  ModelParams params = load_checkpoint(cfg.checkpoint_path(cfg.variant));
  const UserRecord& user = p.corpus.user(root_user);  // throws on unknown user
  Vec embedding = standardize(p.corpus.embedding(content_id), p.emb_stats);
  Vec root_social = build_feature(user, p.protos.norm);
  int root_proto = map_feature(p.protos, root_social);

  GenerationConfig gen_cfg;
  gen_cfg.caps = cfg.caps();
  gen_cfg.terminal_threshold = cfg.terminal_threshold;
  if (cfg.prototype_threshold >= 0.0) {
    gen_cfg.prototype_threshold = cfg.prototype_threshold;
  } else {
    std::vector<TreeSample> val_set =
        build_samples(p.corpus.trees, p.split.val, p.corpus, p.protos, p.emb_stats, variant);
    gen_cfg = calibrate_thresholds(params, p.protos, val_set, cfg.caps());
    gen_cfg.terminal_threshold = cfg.terminal_threshold;
  }
  GenTree tree = generate_tree(params, p.protos, root_social, root_proto, embedding, gen_cfg);

  auto node_name = [&](int n) {
    return "p" + std::to_string(tree.proto[static_cast<std::size_t>(n)]) + ".n" + std::to_string(n);
  };
  std::string tree_id = "gen_" + content_id;
  std::printf("%s\tROOT\t%s\t%s\n", tree_id.c_str(), node_name(0).c_str(), content_id.c_str());
  for (int n = 1; n < tree.size(); ++n) {
    std::printf("%s\t%s\t%s\n", tree_id.c_str(),
                node_name(tree.parent[static_cast<std::size_t>(n)]).c_str(),
                node_name(n).c_str());
  }
  for (int n = 0; n < tree.size(); ++n) {
    Vec dist = p.protos.centroid_category_distribution(tree.proto[static_cast<std::size_t>(n)]);
    std::vector<int> idx(dist.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::partial_sort(idx.begin(), idx.begin() + 3, idx.end(),
                      [&](int a, int b) { return dist[static_cast<std::size_t>(a)] > dist[static_cast<std::size_t>(b)]; });
    std::printf("# node %s top_categories=cat%d,cat%d,cat%d\n", node_name(n).c_str(), idx[0],
                idx[1], idx[2]);
  }
  return 0;
}

RunConfig assemble_config(const std::string& config_path,
                          const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_config_file(config_path);
  for (const auto& [key, value] : overrides) cfg.set(key, value);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffusion-tree prediction pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value config file");
    sub->add_option_function<std::string>(
        "--workdir", [&](const std::string& v) { overrides.emplace_back("workdir", v); },
        "working directory");
    sub->add_option_function<std::string>(
        "--seed", [&](const std::string& v) { overrides.emplace_back("seed", v); }, "master seed");
    sub->add_option_function<std::string>(
        "--set", [&](const std::string& v) {
          auto eq = v.find('=');
          if (eq == std::string::npos) throw CLI::ValidationError("--set expects key=value");
          overrides.emplace_back(v.substr(0, eq), v.substr(eq + 1));
        },
        "override any config key (key=value)")->take_all();
  };

  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  add_common(synth);
  synth->add_option_function<std::string>(
      "--trees", [&](const std::string& v) { overrides.emplace_back("synth_trees", v); },
      "number of trees");

  auto* cluster = app.add_subcommand("cluster", "fit user prototypes on the training split");
  add_common(cluster);
  cluster->add_option_function<std::string>(
      "--k", [&](const std::string& v) { overrides.emplace_back("k", v); }, "prototype count");

  auto* train = app.add_subcommand("train", "train a model variant");
  add_common(train);
  train->add_option_function<std::string>(
      "--variant", [&](const std::string& v) { overrides.emplace_back("variant", v); },
      "full|social_only|image_only|fc|random_weights");
  train->add_option_function<std::string>(
      "--max-epochs", [&](const std::string& v) { overrides.emplace_back("max_epochs", v); },
      "epoch cap");
  train->add_option_function<std::string>(
      "--lr-initial", [&](const std::string& v) { overrides.emplace_back("lr_initial", v); },
      "initial learning rate");
  train->add_option_function<std::string>(
      "--lr-reduced", [&](const std::string& v) { overrides.emplace_back("lr_reduced", v); },
      "post-plateau learning rate");

  std::string eval_mode = "node";
  auto* eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
  add_common(eval);
  eval->add_option("--mode", eval_mode, "node|tree");
  eval->add_option_function<std::string>(
      "--variant", [&](const std::string& v) { overrides.emplace_back("variant", v); },
      "model variant");

  std::string root_user, content_id;
  auto* generate = app.add_subcommand("generate", "generate one tree from a root user and image");
  add_common(generate);
  generate->add_option("--root-user", root_user, "root user id")->required();
  generate->add_option("--content-id", content_id, "content id with an embedding")->required();
  generate->add_option_function<std::string>(
      "--variant", [&](const std::string& v) { overrides.emplace_back("variant", v); },
      "model variant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = assemble_config(config_path, overrides);
    if (synth->parsed()) return cmd_synth(cfg);
    if (cluster->parsed()) return cmd_cluster(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (eval->parsed()) return cmd_eval(cfg, eval_mode);
    if (generate->parsed()) return cmd_generate(cfg, root_user, content_id);
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
