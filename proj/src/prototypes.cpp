#include "cascade/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include "cascade/rng.hpp"

namespace cascade {

namespace {

double sq_dist(const Vec& a, const double* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void read_exact(std::ifstream& in, void* dst, std::size_t n, const std::string& path) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw std::invalid_argument(path + ": truncated prototype file");
  }
}

}  // namespace

NormalizationStats fit_normalization(const std::vector<const UserRecord*>& training_users) {
  if (training_users.empty()) {
    throw std::invalid_argument("fit_normalization: no training users");
  }
  NormalizationStats st;
  // per-field means over present values (fallback 0 when a field is missing everywhere)
  for (int a = 0; a < kNumActivity; ++a) {
    double sum = 0.0;
    int n = 0;
    for (const auto* u : training_users) {
      if (u->activity[a]) {
        sum += *u->activity[a];
        ++n;
      }
    }
    st.activity_mean[a] = n > 0 ? sum / n : 0.0;
  }
  for (int c = 0; c < kNumCategories; ++c) {
    double sum = 0.0;
    int n = 0;
    for (const auto* u : training_users) {
      if (u->categories[c]) {
        sum += *u->categories[c];
        ++n;
      }
    }
    st.category_mean[c] = n > 0 ? sum / n : 0.0;
  }
  for (int a = 0; a < kNumActivity; ++a) {
    double mx = 0.0;
    for (const auto* u : training_users) {
      double v = u->activity[a] ? *u->activity[a] : st.activity_mean[a];
      mx = std::max(mx, std::log1p(v));
    }
    st.log_max[a] = mx;
  }
  return st;
}

Vec build_feature(const UserRecord& user, const NormalizationStats& norm) {
  Vec f(kSocialDim, 0.0);
  for (int a = 0; a < kNumActivity; ++a) {
    double raw = user.activity[a] ? *user.activity[a] : norm.activity_mean[a];
    double v = std::log1p(raw);
    double scaled = norm.log_max[a] > 0.0 ? v / norm.log_max[a] : 0.0;
    f[a] = std::clamp(scaled, 0.0, 1.0);
  }
  double total = 0.0;
  std::array<double, kNumCategories> counts{};
  for (int c = 0; c < kNumCategories; ++c) {
    counts[c] = user.categories[c] ? *user.categories[c] : norm.category_mean[c];
    total += counts[c];
  }
  for (int c = 0; c < kNumCategories; ++c) {
    double prop = total > 0.0 ? counts[c] / total : 1.0 / kNumCategories;
    f[kNumActivity + c] = prop / 4.0;
  }
  return f;
}

KMeansResult kmeans(const std::vector<Vec>& points, int k, std::uint64_t seed, int max_iters) {
  if (k < 2) throw std::invalid_argument("kmeans: k must be >= 2");
  if (points.empty()) throw std::invalid_argument("kmeans: no points");
  const std::size_t dim = points[0].size();
  for (const auto& pt : points) {
    if (pt.size() != dim) throw std::invalid_argument("kmeans: inconsistent point dims");
  }
  {
    std::set<Vec> distinct(points.begin(), points.end());
    if (static_cast<int>(distinct.size()) < k) {
      throw std::invalid_argument("kmeans: only " + std::to_string(distinct.size()) +
                                  " distinct points for k=" + std::to_string(k));
    }
  }
  const int n = static_cast<int>(points.size());
  KMeansResult res;
  res.centroids = Matrix(static_cast<std::size_t>(k), dim);
  res.assignment.assign(n, -1);

  // farthest-point seeding: random first pick, then max-min-distance
  Rng rng(seed, "kmeans");
  std::vector<int> chosen{rng.uniform_int(n)};
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(chosen.size()) < k) {
    const Vec& last = points[chosen.back()];
    int best = -1;
    double best_d = -1.0;
    for (int i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], sq_dist(points[i], last.data(), dim));
      if (min_dist[i] > best_d) {
        best_d = min_dist[i];
        best = i;
      }
    }
    chosen.push_back(best);
  }
  for (int c = 0; c < k; ++c) {
    std::copy(points[chosen[c]].begin(), points[chosen[c]].end(),
              res.centroids.data.begin() + c * static_cast<int>(dim));
  }

  std::vector<int> counts(k, 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    // assignment step; ties go to the lowest centroid id
    bool changed = false;
    double objective = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(points[i], &res.centroids.data[0], dim);
      for (int c = 1; c < k; ++c) {
        double d = sq_dist(points[i], &res.centroids.data[static_cast<std::size_t>(c) * dim], dim);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      objective += best_d;
      if (res.assignment[i] != best) {
        res.assignment[i] = best;
        changed = true;
      }
    }
    res.objective_trace.push_back(objective);
    res.iterations = iter + 1;
    if (!changed) break;

    // update step
    std::fill(res.centroids.data.begin(), res.centroids.data.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      int c = res.assignment[i];
      counts[c]++;
      for (std::size_t d = 0; d < dim; ++d) {
        res.centroids.data[static_cast<std::size_t>(c) * dim + d] += points[i][d];
      }
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t d = 0; d < dim; ++d) {
          res.centroids.data[static_cast<std::size_t>(c) * dim + d] /= counts[c];
        }
      }
    }
    // empty-cluster repair: steal the point farthest from its own centroid
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      int worst = -1;
      double worst_d = -1.0;
      for (int i = 0; i < n; ++i) {
        double d = sq_dist(points[i],
                           &res.centroids.data[static_cast<std::size_t>(res.assignment[i]) * dim],
                           dim);
        if (d > worst_d) {
          worst_d = d;
          worst = i;
        }
      }
      std::copy(points[worst].begin(), points[worst].end(),
                res.centroids.data.begin() + static_cast<std::size_t>(c) * dim);
      res.assignment[worst] = c;
      counts[c] = 1;
    }
  }
  return res;
}

Vec PrototypeModel::centroid_feature(int proto) const {
  Vec f(kSocialDim);
  for (int d = 0; d < kSocialDim; ++d) f[d] = centroids(proto, d);
  return f;
}

Vec PrototypeModel::centroid_category_distribution(int proto) const {
  Vec d(kNumCategories, 0.0);
  double total = 0.0;
  for (int c = 0; c < kNumCategories; ++c) {
    d[c] = std::max(0.0, centroids(proto, kNumActivity + c));
    total += d[c];
  }
  if (total <= 0.0) {
    for (auto& v : d) v = 1.0 / kNumCategories;
  } else {
    for (auto& v : d) v /= total;
  }
  return d;
}

PrototypeModel fit_prototypes(const std::vector<const UserRecord*>& training_users, int k,
                              std::uint64_t seed, int max_iters) {
  PrototypeModel model;
  model.norm = fit_normalization(training_users);
  std::vector<Vec> feats;
  feats.reserve(training_users.size());
  for (const auto* u : training_users) feats.push_back(build_feature(*u, model.norm));
  KMeansResult km = kmeans(feats, k, seed, max_iters);
  model.k = k;
  model.centroids = std::move(km.centroids);
  return model;
}

int map_feature(const PrototypeModel& model, const Vec& feature) {
  if (feature.size() != model.centroids.cols) {
    throw std::invalid_argument("map_feature: feature dim " + std::to_string(feature.size()) +
                                " vs centroid dim " + std::to_string(model.centroids.cols));
  }
  int best = 0;
  double best_d = sq_dist(feature, &model.centroids.data[0], model.centroids.cols);
  for (int c = 1; c < model.k; ++c) {
    double d = sq_dist(feature,
                       &model.centroids.data[static_cast<std::size_t>(c) * model.centroids.cols],
                       model.centroids.cols);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

int map_user(const PrototypeModel& model, const UserRecord& user) {
  return map_feature(model, build_feature(user, model.norm));
}

void save_prototype_model(const std::string& path, const PrototypeModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write prototype file " + path);
  out.write("PRO1", 4);
  std::uint32_t k = static_cast<std::uint32_t>(model.k);
  std::uint32_t dim = static_cast<std::uint32_t>(model.centroids.cols);
  out.write(reinterpret_cast<const char*>(&k), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(model.centroids.data.data()),
            static_cast<std::streamsize>(sizeof(double) * model.centroids.data.size()));
  out.write(reinterpret_cast<const char*>(model.norm.log_max.data()),
            sizeof(double) * kNumActivity);
  out.write(reinterpret_cast<const char*>(model.norm.activity_mean.data()),
            sizeof(double) * kNumActivity);
  out.write(reinterpret_cast<const char*>(model.norm.category_mean.data()),
            sizeof(double) * kNumCategories);
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

PrototypeModel load_prototype_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open prototype file " + path);
  char magic[4];
  read_exact(in, magic, 4, path);
  if (std::memcmp(magic, "PRO1", 4) != 0) {
    throw std::invalid_argument(path + ": bad magic, expected PRO1");
  }
  std::uint32_t k = 0, dim = 0;
  read_exact(in, &k, 4, path);
  read_exact(in, &dim, 4, path);
  PrototypeModel model;
  model.k = static_cast<int>(k);
  model.centroids = Matrix(k, dim);
  read_exact(in, model.centroids.data.data(), sizeof(double) * model.centroids.data.size(), path);
  read_exact(in, model.norm.log_max.data(), sizeof(double) * kNumActivity, path);
  read_exact(in, model.norm.activity_mean.data(), sizeof(double) * kNumActivity, path);
  read_exact(in, model.norm.category_mean.data(), sizeof(double) * kNumCategories, path);
  return model;
}

}  // namespace cascade
