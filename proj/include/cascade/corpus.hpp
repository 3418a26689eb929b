#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cascade/matrix.hpp"
#include "cascade/tree.hpp"

namespace cascade {

// Raw user row. Missing fields stay flagged here; mean-fill happens when
// normalization stats are fitted on the training split.
struct UserRecord {
  std::string user_id;
  std::array<std::optional<double>, kNumActivity> activity;
  std::array<std::optional<double>, kNumCategories> categories;

  // Distinct categories the user posted to (missing counts as zero).
  int distinct_categories() const;
  // Raw category counts normalized to sum 1; uniform when the sum is zero.
  Vec category_distribution() const;
};

struct Corpus {
  std::vector<DiffusionTree> trees;
  std::vector<UserRecord> users;
  std::unordered_map<std::string, int> user_index;        // user_id -> users[]
  std::vector<std::pair<std::string, Vec>> embeddings;    // content_id -> vector
  std::unordered_map<std::string, int> embedding_index;

  const UserRecord& user(const std::string& id) const;
  const Vec& embedding(const std::string& content_id) const;
};

// Edge file: one tab-separated record per line,
//   tree_id <TAB> parent_user_id <TAB> child_user_id
// and one root declaration per tree,
//   tree_id <TAB> ROOT <TAB> root_user_id <TAB> content_id
// Blank lines and lines starting with '#' are skipped. Node order within
// the file is insignificant.
std::vector<DiffusionTree> load_edge_file(const std::string& path);
void save_edge_file(const std::string& path, const std::vector<DiffusionTree>& trees);

// User file: tab-separated with header,
//   user_id, n_pins, n_followers, n_followings, n_likes, cat0..cat37
// An empty field means missing.
std::vector<UserRecord> load_user_file(const std::string& path);
void save_user_file(const std::string& path, const std::vector<UserRecord>& users);

// Embedding file: "EMB1", LE u32 count, LE u32 dim, then per record a
// u32-length-prefixed UTF-8 content_id followed by dim f32 values.
std::vector<std::pair<std::string, Vec>> load_embedding_file(const std::string& path);
void save_embedding_file(const std::string& path,
                         const std::vector<std::pair<std::string, Vec>>& embeddings);

// Loads and cross-validates the three corpus files: trees must be valid
// rooted trees, every edge user must exist in the user table, and every
// tree's content must have an embedding.
Corpus load_corpus(const std::string& edges_path, const std::string& users_path,
                   const std::string& embeddings_path);

}  // namespace cascade
