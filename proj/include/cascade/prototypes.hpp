#pragma once

#include <array>
#include <string>
#include <vector>

#include "cascade/corpus.hpp"
#include "cascade/matrix.hpp"

namespace cascade {

// Fitted on the training split only. Activity counts are log1p-transformed
// and divided by the training maximum of the transform; raw per-field means
// back missing-value fill at inference time.
struct NormalizationStats {
  std::array<double, kNumActivity> log_max{};
  std::array<double, kNumActivity> activity_mean{};
  std::array<double, kNumCategories> category_mean{};
};

NormalizationStats fit_normalization(const std::vector<const UserRecord*>& training_users);

// 42-D social feature: 4 activity entries in [0,1] (clamped for users past
// the training range), then the 38-category distribution divided by 4.
Vec build_feature(const UserRecord& user, const NormalizationStats& norm);

struct KMeansResult {
  Matrix centroids;             // k x dim
  std::vector<int> assignment;  // per input point
  std::vector<double> objective_trace;  // within-cluster sum of squares per iteration
  int iterations = 0;
};

// Lloyd iterations with farthest-point seeding from the given seed. Empty
// clusters are re-seeded at the point farthest from its assigned centroid.
KMeansResult kmeans(const std::vector<Vec>& points, int k, std::uint64_t seed,
                    int max_iters = 100);

struct PrototypeModel {
  int k = 0;
  Matrix centroids;  // k x kSocialDim
  NormalizationStats norm;

  Vec centroid_feature(int proto) const;
  // Centroid category block renormalized to sum 1 (undoes the /4 scaling).
  Vec centroid_category_distribution(int proto) const;
};

PrototypeModel fit_prototypes(const std::vector<const UserRecord*>& training_users, int k,
                              std::uint64_t seed, int max_iters = 100);

// Nearest centroid by Euclidean distance; ties break to the lowest id.
int map_feature(const PrototypeModel& model, const Vec& feature);
int map_user(const PrototypeModel& model, const UserRecord& user);

// "PRO1" binary format: magic, LE u32 {k, dim}, k*dim f64 centroids,
// 4 f64 log maxima, 4 f64 activity means, 38 f64 category means.
void save_prototype_model(const std::string& path, const PrototypeModel& model);
PrototypeModel load_prototype_model(const std::string& path);

}  // namespace cascade
