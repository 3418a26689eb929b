#pragma once

#include <cstdint>
#include <string>

#include "cascade/synth.hpp"
#include "cascade/train.hpp"

namespace cascade {

// Flat key=value run configuration. Every field has a default except the
// data paths, which derive from workdir when left empty. Unknown keys are
// rejected.
struct RunConfig {
  std::string workdir = ".";
  std::string edges, users, embeddings;  // resolved via paths() when empty

  int k = 100;
  int hidden = 256;
  int head = 128;
  int embed_dim = 16;
  std::string variant = "full";
  std::uint64_t seed = 1;

  double lr_initial = 0.2;
  double lr_reduced = 0.02;
  int plateau_patience = 3;
  int max_epochs = 60;
  int batch_size = 32;
  double dropout = 0.5;
  double clip = 5.0;

  double terminal_threshold = 0.5;
  double prototype_threshold = -1.0;  // < 0: calibrate on validation
  int max_depth = 10;
  int max_size = 150;
  int max_width = 100;

  int synth_trees = 1000;
  int synth_users = 3000;
  int synth_topics = 3;
  double synth_missing_rate = 0.0;
  double synth_parent_weight = 0.4;
  double synth_root_weight = 0.3;
  double synth_topic_weight = 0.3;
  double synth_budget_base = 0.45;
  double synth_budget_root = 0.35;
  double synth_budget_topic = 0.10;

  void set(const std::string& key, const std::string& value);  // throws on unknown key
  std::string serialize() const;

  std::string edges_path() const;
  std::string users_path() const;
  std::string embeddings_path() const;
  std::string prototypes_path() const;
  std::string checkpoint_path(const std::string& variant_name) const;

  TrainConfig train_config() const;
  SynthParams synth_params() const;
  TreeCaps caps() const;
};

RunConfig load_config_file(const std::string& path);
void save_config_file(const std::string& path, const RunConfig& cfg);

}  // namespace cascade
