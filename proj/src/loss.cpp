#include "cascade/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cascade {

namespace {
constexpr double kEps = 1e-12;
}

ClassWeights class_weights_from_counts(const Vec& n_pos, const Vec& n_neg) {
  if (n_pos.size() != n_neg.size() || n_pos.empty()) {
    throw std::invalid_argument("class_weights: count vectors must be non-empty and equal length");
  }
  ClassWeights w;
  w.wp.resize(n_pos.size());
  w.wn.resize(n_pos.size());
  for (std::size_t u = 0; u < n_pos.size(); ++u) {
    double total = n_pos[u] + n_neg[u];
    if (total <= 0.0) {
      // class never observed; the zero-positive limit of the formula
      w.wp[u] = 1.0;
      w.wn[u] = 0.0;
    } else {
      w.wp[u] = n_neg[u] / total;
      w.wn[u] = n_pos[u] / total;
    }
  }
  return w;
}

ClassWeights class_weights(const std::vector<NodeTarget>& targets, int k) {
  if (targets.empty()) throw std::invalid_argument("class_weights: empty target set");
  const std::size_t classes = static_cast<std::size_t>(k) + 1;
  Vec n_pos(classes, 0.0), n_neg(classes, 0.0);
  for (const auto& t : targets) {
    if (t.size() != classes) {
      throw std::invalid_argument("class_weights: target has " + std::to_string(t.size()) +
                                  " classes, expected " + std::to_string(classes));
    }
    for (std::size_t u = 0; u < classes; ++u) {
      if (t[u] > 1) throw std::invalid_argument("class_weights: target not in {0,1}");
      (t[u] ? n_pos[u] : n_neg[u]) += 1.0;
    }
  }
  return class_weights_from_counts(n_pos, n_neg);
}

BceResult weighted_bce(const std::vector<Vec>& probs, const std::vector<NodeTarget>& targets,
                       const ClassWeights& weights, bool want_grad) {
  if (probs.empty() || probs.size() != targets.size()) {
    throw std::invalid_argument("weighted_bce: need matching non-empty probs/targets");
  }
  const std::size_t classes = weights.wp.size();
  const double m = static_cast<double>(probs.size());
  BceResult res;
  if (want_grad) res.dprobs.assign(probs.size(), Vec(classes, 0.0));
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i].size() != classes || targets[i].size() != classes) {
      throw std::invalid_argument("weighted_bce: instance " + std::to_string(i) +
                                  " has wrong class count");
    }
    for (std::size_t u = 0; u < classes; ++u) {
      if (targets[i][u] > 1) throw std::invalid_argument("weighted_bce: target not in {0,1}");
      double o = std::clamp(probs[i][u], kEps, 1.0 - kEps);
      double t = targets[i][u];
      res.loss -= (weights.wp[u] * t * std::log(o) + weights.wn[u] * (1.0 - t) * std::log(1.0 - o)) / m;
      if (want_grad) {
        res.dprobs[i][u] = -(weights.wp[u] * t / o - weights.wn[u] * (1.0 - t) / (1.0 - o)) / m;
      }
    }
  }
  return res;
}

}  // namespace cascade
