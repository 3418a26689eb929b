#include "cascade/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cascade {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad seed for " + key + ": '" + v + "'");
  }
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "workdir") workdir = value;
  else if (key == "edges") edges = value;
  else if (key == "users") users = value;
  else if (key == "embeddings") embeddings = value;
  else if (key == "k") k = to_int(key, value);
  else if (key == "hidden") hidden = to_int(key, value);
  else if (key == "head") head = to_int(key, value);
  else if (key == "embed_dim") embed_dim = to_int(key, value);
  else if (key == "variant") variant = value;
  else if (key == "seed") seed = to_u64(key, value);
  else if (key == "lr_initial") lr_initial = to_double(key, value);
  else if (key == "lr_reduced") lr_reduced = to_double(key, value);
  else if (key == "plateau_patience") plateau_patience = to_int(key, value);
  else if (key == "max_epochs") max_epochs = to_int(key, value);
  else if (key == "batch_size") batch_size = to_int(key, value);
  else if (key == "dropout") dropout = to_double(key, value);
  else if (key == "clip") clip = to_double(key, value);
  else if (key == "terminal_threshold") terminal_threshold = to_double(key, value);
  else if (key == "prototype_threshold") prototype_threshold = to_double(key, value);
  else if (key == "max_depth") max_depth = to_int(key, value);
  else if (key == "max_size") max_size = to_int(key, value);
  else if (key == "max_width") max_width = to_int(key, value);
  else if (key == "synth_trees") synth_trees = to_int(key, value);
  else if (key == "synth_users") synth_users = to_int(key, value);
  else if (key == "synth_topics") synth_topics = to_int(key, value);
  else if (key == "synth_missing_rate") synth_missing_rate = to_double(key, value);
  else if (key == "synth_parent_weight") synth_parent_weight = to_double(key, value);
  else if (key == "synth_root_weight") synth_root_weight = to_double(key, value);
  else if (key == "synth_topic_weight") synth_topic_weight = to_double(key, value);
  else if (key == "synth_budget_base") synth_budget_base = to_double(key, value);
  else if (key == "synth_budget_root") synth_budget_root = to_double(key, value);
  else if (key == "synth_budget_topic") synth_budget_topic = to_double(key, value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  out << "workdir=" << workdir << '\n'
      << "edges=" << edges << '\n'
      << "users=" << users << '\n'
      << "embeddings=" << embeddings << '\n'
      << "k=" << k << '\n'
      << "hidden=" << hidden << '\n'
      << "head=" << head << '\n'
      << "embed_dim=" << embed_dim << '\n'
      << "variant=" << variant << '\n'
      << "seed=" << seed << '\n'
      << "lr_initial=" << lr_initial << '\n'
      << "lr_reduced=" << lr_reduced << '\n'
      << "plateau_patience=" << plateau_patience << '\n'
      << "max_epochs=" << max_epochs << '\n'
      << "batch_size=" << batch_size << '\n'
      << "dropout=" << dropout << '\n'
      << "clip=" << clip << '\n'
      << "terminal_threshold=" << terminal_threshold << '\n'
      << "prototype_threshold=" << prototype_threshold << '\n'
      << "max_depth=" << max_depth << '\n'
      << "max_size=" << max_size << '\n'
      << "max_width=" << max_width << '\n'
      << "synth_trees=" << synth_trees << '\n'
      << "synth_users=" << synth_users << '\n'
      << "synth_topics=" << synth_topics << '\n'
      << "synth_missing_rate=" << synth_missing_rate << '\n'
      << "synth_parent_weight=" << synth_parent_weight << '\n'
      << "synth_root_weight=" << synth_root_weight << '\n'
      << "synth_topic_weight=" << synth_topic_weight << '\n'
      << "synth_budget_base=" << synth_budget_base << '\n'
      << "synth_budget_root=" << synth_budget_root << '\n'
      << "synth_budget_topic=" << synth_budget_topic << '\n';
  return out.str();
}

std::string RunConfig::edges_path() const {
  return edges.empty() ? workdir + "/edges.tsv" : edges;
}
std::string RunConfig::users_path() const {
  return users.empty() ? workdir + "/users.tsv" : users;
}
std::string RunConfig::embeddings_path() const {
  return embeddings.empty() ? workdir + "/embeddings.bin" : embeddings;
}
std::string RunConfig::prototypes_path() const { return workdir + "/prototypes.pro1"; }
std::string RunConfig::checkpoint_path(const std::string& variant_name) const {
  return workdir + "/checkpoint_" + variant_name + ".dlm1";
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.lr_initial = lr_initial;
  t.lr_reduced = lr_reduced;
  t.plateau_patience = plateau_patience;
  t.max_epochs = max_epochs;
  t.batch_size = batch_size;
  t.dropout = dropout;
  t.clip = clip;
  t.seed = seed;
  return t;
}

SynthParams RunConfig::synth_params() const {
  SynthParams p;
  p.k = k;
  p.n_topics = synth_topics;
  p.n_users = synth_users;
  p.embed_dim = embed_dim;
  p.parent_weight = synth_parent_weight;
  p.root_weight = synth_root_weight;
  p.topic_weight = synth_topic_weight;
  p.budget_base = synth_budget_base;
  p.budget_root_span = synth_budget_root;
  p.budget_topic_span = synth_budget_topic;
  p.missing_rate = synth_missing_rate;
  return p;
}

TreeCaps RunConfig::caps() const {
  TreeCaps c;
  c.max_depth = max_depth;
  c.max_size = max_size;
  c.max_width = max_width;
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": expected key=value, got '" + t + "'");
    }
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

void save_config_file(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write config file " + path);
  out << cfg.serialize();
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

}  // namespace cascade
