#pragma once

#include <vector>

#include "cascade/matrix.hpp"
#include "cascade/tree.hpp"

namespace cascade {

// Per-class balancing weights: wp = Nn/(Nn+Np), wn = Np/(Nn+Np).
struct ClassWeights {
  Vec wp, wn;
};

ClassWeights class_weights_from_counts(const Vec& n_pos, const Vec& n_neg);
// Counts taken over all given node targets; k+1 classes.
ClassWeights class_weights(const std::vector<NodeTarget>& targets, int k);

struct BceResult {
  double loss = 0.0;
  std::vector<Vec> dprobs;  // dL/d(prob), per instance; empty unless requested
};

// Weighted multi-class binary cross entropy with the 1/m normalization
// inside each class term; m is the number of node instances passed in.
// Probabilities are clamped to [eps, 1-eps], eps = 1e-12, before the logs.
BceResult weighted_bce(const std::vector<Vec>& probs, const std::vector<NodeTarget>& targets,
                       const ClassWeights& weights, bool want_grad);

}  // namespace cascade
