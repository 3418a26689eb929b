#include "cascade/corpus.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cascade {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_number(const std::string& s, const std::string& path, std::size_t line_no) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": malformed number '" + s +
                                "'");
  }
}

std::string format_count(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RawTree {
  std::string tree_id;
  std::string content_id;
  bool has_root_line = false;
  std::string root_user;
  // child -> parent, in first-mention order for determinism
  std::vector<std::pair<std::string, std::string>> edges;
};

DiffusionTree build_tree(const RawTree& raw) {
  // parent map; duplicate children rejected
  std::map<std::string, std::string> parent_of;
  std::map<std::string, std::vector<std::string>> children_of;
  std::vector<std::string> mention_order;
  auto mention = [&](const std::string& u) {
    if (!parent_of.count(u) && !children_of.count(u)) mention_order.push_back(u);
  };
  if (raw.has_root_line) {
    mention(raw.root_user);
    children_of[raw.root_user];
  }
  for (const auto& [child, parent] : raw.edges) {
    mention(parent);
    mention(child);
    if (parent_of.count(child)) {
      throw std::invalid_argument("tree " + raw.tree_id + ": user " + child +
                                  " appears as a child twice");
    }
    parent_of[child] = parent;
    children_of[parent].push_back(child);
    children_of[child];
  }

  // cycle check: walk parent chains with tri-state marks
  std::map<std::string, int> mark;  // 0 unvisited, 1 on stack, 2 done
  for (const auto& u : mention_order) {
    if (mark[u] == 2) continue;
    std::vector<std::string> chain;
    std::string cur = u;
    while (true) {
      if (mark[cur] == 1) {
        throw std::invalid_argument("tree " + raw.tree_id + ": cycle through user " + cur);
      }
      if (mark[cur] == 2) break;
      mark[cur] = 1;
      chain.push_back(cur);
      auto it = parent_of.find(cur);
      if (it == parent_of.end()) break;  // chain root (may or may not be the tree root)
      cur = it->second;
    }
    for (const auto& v : chain) mark[v] = 2;
  }

  // resolve the root
  std::string root;
  if (raw.has_root_line) {
    root = raw.root_user;
    if (parent_of.count(root)) {
      throw std::invalid_argument("tree " + raw.tree_id + ": declared root " + root +
                                  " also appears as a child");
    }
  } else {
    for (const auto& u : mention_order) {
      if (!parent_of.count(u)) {
        if (!root.empty()) {
          throw std::invalid_argument("tree " + raw.tree_id + ": no unique root (both " + root +
                                      " and " + u + " lack parents)");
        }
        root = u;
      }
    }
    if (root.empty()) {
      throw std::invalid_argument("tree " + raw.tree_id + ": no root");
    }
  }

  // every user must hang off the root
  for (const auto& u : mention_order) {
    if (u == root || parent_of.count(u)) continue;
    throw std::invalid_argument("tree " + raw.tree_id + ": user " + u +
                                " is disconnected from root " + root);
  }

  // BFS from the root; storage order is parent-before-child
  DiffusionTree tree;
  tree.tree_id = raw.tree_id;
  tree.content_id = raw.content_id;
  std::map<std::string, int> index;
  std::vector<std::string> queue{root};
  std::size_t head = 0;
  while (head < queue.size()) {
    std::string u = queue[head++];
    TreeNode node;
    node.user_id = u;
    node.parent = index.count(u) ? -2 : -1;  // placeholder, fixed below
    index[u] = tree.size();
    tree.nodes.push_back(node);
    for (const auto& ch : children_of[u]) queue.push_back(ch);
  }
  if (tree.size() != static_cast<int>(mention_order.size())) {
    throw std::invalid_argument("tree " + raw.tree_id + ": disconnected users present");
  }
  for (auto& node : tree.nodes) {
    auto it = parent_of.find(node.user_id);
    node.parent = it == parent_of.end() ? -1 : index.at(it->second);
  }
  tree.recompute_derived();
  tree.validate();
  return tree;
}

void read_exact(std::ifstream& in, void* dst, std::size_t n, const std::string& path) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw std::invalid_argument(path + ": truncated embedding file");
  }
}

}  // namespace

int UserRecord::distinct_categories() const {
  int n = 0;
  for (const auto& c : categories) {
    if (c.has_value() && *c > 0.0) ++n;
  }
  return n;
}

Vec UserRecord::category_distribution() const {
  Vec d(kNumCategories, 0.0);
  double total = 0.0;
  for (int i = 0; i < kNumCategories; ++i) {
    double v = categories[static_cast<std::size_t>(i)].value_or(0.0);
    d[static_cast<std::size_t>(i)] = v;
    total += v;
  }
  if (total <= 0.0) {
    for (auto& v : d) v = 1.0 / kNumCategories;
  } else {
    for (auto& v : d) v /= total;
  }
  return d;
}

const UserRecord& Corpus::user(const std::string& id) const {
  auto it = user_index.find(id);
  if (it == user_index.end()) throw std::invalid_argument("unknown user_id " + id);
  return users[static_cast<std::size_t>(it->second)];
}

const Vec& Corpus::embedding(const std::string& content_id) const {
  auto it = embedding_index.find(content_id);
  if (it == embedding_index.end()) throw std::invalid_argument("unknown content_id " + content_id);
  return embeddings[static_cast<std::size_t>(it->second)].second;
}

std::vector<DiffusionTree> load_edge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open edge file " + path);
  std::map<std::string, RawTree> by_id;
  std::vector<std::string> order;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() < 3 || fields.size() > 4 || fields[0].empty()) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": malformed edge row");
    }
    if (!by_id.count(fields[0])) order.push_back(fields[0]);
    RawTree& raw = by_id[fields[0]];
    raw.tree_id = fields[0];
    if (fields[1] == "ROOT") {
      if (fields.size() != 4 || fields[2].empty()) {
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": ROOT row needs tree_id, ROOT, user, content_id");
      }
      if (raw.has_root_line) {
        throw std::invalid_argument("tree " + raw.tree_id + ": multiple ROOT rows");
      }
      raw.has_root_line = true;
      raw.root_user = fields[2];
      raw.content_id = fields[3];
    } else {
      if (fields.size() != 3 || fields[1].empty() || fields[2].empty()) {
        throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": malformed edge row");
      }
      raw.edges.emplace_back(fields[2], fields[1]);  // (child, parent)
    }
  }
  std::vector<DiffusionTree> trees;
  trees.reserve(order.size());
  for (const auto& id : order) trees.push_back(build_tree(by_id.at(id)));
  return trees;
}

void save_edge_file(const std::string& path, const std::vector<DiffusionTree>& trees) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write edge file " + path);
  for (const auto& t : trees) {
    out << t.tree_id << "\tROOT\t" << t.nodes[0].user_id << '\t' << t.content_id << '\n';
    for (int i = 1; i < t.size(); ++i) {
      const auto& n = t.nodes[static_cast<std::size_t>(i)];
      out << t.tree_id << '\t' << t.nodes[static_cast<std::size_t>(n.parent)].user_id << '\t'
          << n.user_id << '\n';
    }
  }
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

std::vector<UserRecord> load_user_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open user file " + path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": missing header");
  ++line_no;
  std::vector<UserRecord> users;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 1 + kNumActivity + kNumCategories) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(1 + kNumActivity + kNumCategories) +
                                  " fields, got " + std::to_string(fields.size()));
    }
    UserRecord u;
    u.user_id = fields[0];
    if (u.user_id.empty()) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": empty user_id");
    }
    auto parse_field = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      double v = parse_number(s, path, line_no);
      if (v < 0.0) {
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": negative count " + s);
      }
      return v;
    };
    for (int i = 0; i < kNumActivity; ++i) {
      u.activity[static_cast<std::size_t>(i)] = parse_field(fields[static_cast<std::size_t>(1 + i)]);
    }
    for (int i = 0; i < kNumCategories; ++i) {
      u.categories[static_cast<std::size_t>(i)] =
          parse_field(fields[static_cast<std::size_t>(1 + kNumActivity + i)]);
    }
    users.push_back(std::move(u));
  }
  return users;
}

void save_user_file(const std::string& path, const std::vector<UserRecord>& users) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write user file " + path);
  out << "user_id\tn_pins\tn_followers\tn_followings\tn_likes";
  for (int i = 0; i < kNumCategories; ++i) out << "\tcat" << i;
  out << '\n';
  for (const auto& u : users) {
    out << u.user_id;
    for (const auto& a : u.activity) out << '\t' << (a ? format_count(*a) : "");
    for (const auto& c : u.categories) out << '\t' << (c ? format_count(*c) : "");
    out << '\n';
  }
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

std::vector<std::pair<std::string, Vec>> load_embedding_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open embedding file " + path);
  char magic[4];
  read_exact(in, magic, 4, path);
  if (std::memcmp(magic, "EMB1", 4) != 0) {
    throw std::invalid_argument(path + ": bad magic, expected EMB1");
  }
  std::uint32_t count = 0, dim = 0;
  read_exact(in, &count, 4, path);
  read_exact(in, &dim, 4, path);
  std::vector<std::pair<std::string, Vec>> embeddings;
  embeddings.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t len = 0;
    read_exact(in, &len, 4, path);
    std::string id(len, '\0');
    read_exact(in, id.data(), len, path);
    std::vector<float> raw(dim);
    read_exact(in, raw.data(), sizeof(float) * dim, path);
    Vec v(dim);
    for (std::uint32_t d = 0; d < dim; ++d) v[d] = raw[d];
    embeddings.emplace_back(std::move(id), std::move(v));
  }
  return embeddings;
}

void save_embedding_file(const std::string& path,
                         const std::vector<std::pair<std::string, Vec>>& embeddings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write embedding file " + path);
  out.write("EMB1", 4);
  std::uint32_t count = static_cast<std::uint32_t>(embeddings.size());
  std::uint32_t dim = embeddings.empty() ? 0 : static_cast<std::uint32_t>(embeddings[0].second.size());
  out.write(reinterpret_cast<const char*>(&count), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  for (const auto& [id, v] : embeddings) {
    if (v.size() != dim) {
      throw std::invalid_argument("embedding for " + id + " has dim " + std::to_string(v.size()) +
                                  ", expected " + std::to_string(dim));
    }
    std::uint32_t len = static_cast<std::uint32_t>(id.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(id.data(), len);
    std::vector<float> raw(v.begin(), v.end());
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(sizeof(float) * raw.size()));
  }
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

Corpus load_corpus(const std::string& edges_path, const std::string& users_path,
                   const std::string& embeddings_path) {
  Corpus c;
  c.trees = load_edge_file(edges_path);
  c.users = load_user_file(users_path);
  for (int i = 0; i < static_cast<int>(c.users.size()); ++i) {
    if (!c.user_index.emplace(c.users[static_cast<std::size_t>(i)].user_id, i).second) {
      throw std::invalid_argument("duplicate user_id " + c.users[static_cast<std::size_t>(i)].user_id);
    }
  }
  c.embeddings = load_embedding_file(embeddings_path);
  for (int i = 0; i < static_cast<int>(c.embeddings.size()); ++i) {
    if (!c.embedding_index.emplace(c.embeddings[static_cast<std::size_t>(i)].first, i).second) {
      throw std::invalid_argument("duplicate content_id " +
                                  c.embeddings[static_cast<std::size_t>(i)].first);
    }
  }
  for (const auto& t : c.trees) {
    for (const auto& n : t.nodes) {
      if (!c.user_index.count(n.user_id)) {
        throw std::invalid_argument("tree " + t.tree_id + ": unknown user_id " + n.user_id);
      }
    }
    if (t.content_id.empty()) {
      throw std::invalid_argument("tree " + t.tree_id + ": missing content_id (no ROOT row)");
    }
    if (!c.embedding_index.count(t.content_id)) {
      throw std::invalid_argument("tree " + t.tree_id + ": no embedding for content " +
                                  t.content_id);
    }
  }
  return c;
}

}  // namespace cascade
