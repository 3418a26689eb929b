#include "cascade/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace cascade {

namespace {

constexpr double kImproveRel = 1e-4;

double loss_over(const ModelParams& params, const std::vector<TreeSample>& samples,
                 const ClassWeights& weights, Rng& rng) {
  std::size_t m = 0;
  for (const auto& s : samples) m += s.tree->nodes.size();
  if (m == 0) throw std::invalid_argument("loss_over: empty sample set");
  // Eq. 2 over the whole set: accumulate per-tree sums, then divide by m.
  // weighted_bce normalizes by its own instance count, so scale back.
  double total = 0.0;
  for (const auto& s : samples) {
    TreeCache cache = tree_forward(params, *s.tree, s.inputs, s.embedding, Mode::Eval, 0.0, rng);
    std::vector<Vec> probs;
    probs.reserve(cache.nodes.size());
    for (const auto& nc : cache.nodes) probs.push_back(nc.probs);
    BceResult r = weighted_bce(probs, s.targets, weights, false);
    total += r.loss * static_cast<double>(probs.size());
  }
  return total / static_cast<double>(m);
}

}  // namespace

void sgd_step(ModelParams& params, const ModelParams& grads, double lr, double clip_threshold) {
  double norm_sq = 0.0;
  auto gblocks = grads.block_refs();
  auto pblocks = params.block_refs();
  if (gblocks.size() != pblocks.size()) {
    throw std::invalid_argument("sgd_step: parameter/gradient shape mismatch");
  }
  for (std::size_t bi = 0; bi < gblocks.size(); ++bi) {
    if (gblocks[bi].vec->size() != pblocks[bi].vec->size()) {
      throw std::invalid_argument("sgd_step: block " + std::string(gblocks[bi].name) +
                                  " shape mismatch");
    }
    for (double g : *gblocks[bi].vec) norm_sq += g * g;
  }
  if (!std::isfinite(norm_sq)) {
    throw std::runtime_error("sgd_step: non-finite gradient, step rejected");
  }
  double norm = std::sqrt(norm_sq);
  double scale = (clip_threshold > 0.0 && norm > clip_threshold) ? clip_threshold / norm : 1.0;
  for (std::size_t bi = 0; bi < gblocks.size(); ++bi) {
    const Vec& g = *gblocks[bi].vec;
    Vec& p = *pblocks[bi].vec;
    for (std::size_t j = 0; j < g.size(); ++j) p[j] -= lr * scale * g[j];
  }
  params.step += 1;
}

double dataset_loss(const ModelParams& params, const std::vector<TreeSample>& samples,
                    const ClassWeights& weights) {
  Rng rng(0, "unused");
  return loss_over(params, samples, weights, rng);
}

TrainResult train_model(Variant variant, const ModelDims& dims,
                        const std::vector<TreeSample>& train_set,
                        const std::vector<TreeSample>& val_set, const ClassWeights& weights,
                        const TrainConfig& cfg) {
  if (cfg.lr_initial <= cfg.lr_reduced || cfg.lr_reduced <= 0.0) {
    throw std::invalid_argument("train: need lr_initial > lr_reduced > 0");
  }
  TrainResult result;
  result.params = ModelParams::make(variant, dims);
  result.params.init_weights(cfg.seed);
  if (variant == Variant::RandomWeights || cfg.max_epochs == 0) {
    return result;
  }
  if (train_set.empty() || val_set.empty()) {
    throw std::invalid_argument("train: empty train or validation set");
  }

  ModelParams params = result.params;
  ModelParams best = params;
  double best_val = std::numeric_limits<double>::infinity();
  double lr = cfg.lr_initial;
  int stale_epochs = 0;
  bool reduced = false;

  Rng order_rng(cfg.seed, "batch-order");
  Rng dropout_rng(cfg.seed, "dropout");
  std::vector<int> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    order_rng.shuffle(order);
    double epoch_loss_sum = 0.0;
    std::size_t epoch_nodes = 0;
    bool aborted = false;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::size_t m = 0;
      for (std::size_t bi = start; bi < end; ++bi) {
        m += train_set[static_cast<std::size_t>(order[bi])].tree->nodes.size();
      }
      ModelParams grads = params.zeros_like();
      double batch_loss = 0.0;
      // per-class sums use 1/m with m = nodes in this batch, so run the
      // per-tree losses at their own 1/m_tree and rescale
      for (std::size_t bi = start; bi < end; ++bi) {
        const TreeSample& s = train_set[static_cast<std::size_t>(order[bi])];
        TreeCache cache =
            tree_forward(params, *s.tree, s.inputs, s.embedding, Mode::Train, cfg.dropout,
                         dropout_rng);
        std::vector<Vec> probs;
        probs.reserve(cache.nodes.size());
        for (const auto& nc : cache.nodes) probs.push_back(nc.probs);
        BceResult r = weighted_bce(probs, s.targets, weights, true);
        double tree_scale = static_cast<double>(probs.size()) / static_cast<double>(m);
        batch_loss += r.loss * tree_scale;
        for (auto& d : r.dprobs) {
          for (auto& v : d) v *= tree_scale;
        }
        tree_backward(params, cache, r.dprobs, grads);
      }
      if (!std::isfinite(batch_loss)) {
        result.diverged = true;
        result.divergence_message = "non-finite training loss at epoch " + std::to_string(epoch);
        aborted = true;
        break;
      }
      try {
        sgd_step(params, grads, lr, cfg.clip);
      } catch (const std::runtime_error& e) {
        result.diverged = true;
        result.divergence_message = e.what();
        aborted = true;
        break;
      }
      epoch_loss_sum += batch_loss * static_cast<double>(m);
      epoch_nodes += m;
    }
    if (aborted) break;

    double train_loss = epoch_loss_sum / static_cast<double>(epoch_nodes);
    Rng unused(0, "unused");
    double val_loss = loss_over(params, val_set, weights, unused);
    auto t1 = std::chrono::steady_clock::now();
    double wall = std::chrono::duration<double>(t1 - t0).count();
    result.log.push_back({epoch, train_loss, val_loss, lr, wall});

    if (!std::isfinite(val_loss)) {
      result.diverged = true;
      result.divergence_message = "non-finite validation loss at epoch " + std::to_string(epoch);
      break;
    }

    bool improved = val_loss < best_val - kImproveRel * std::max(1.0, std::fabs(best_val));
    if (val_loss < best_val) {
      best_val = std::min(best_val, val_loss);
      best = params;
    }
    if (improved) {
      stale_epochs = 0;
    } else {
      ++stale_epochs;
      if (stale_epochs >= cfg.plateau_patience) {
        if (!reduced) {
          lr = cfg.lr_reduced;
          reduced = true;
          stale_epochs = 0;
        } else {
          break;  // second plateau
        }
      }
    }
  }
  result.params = best_val < std::numeric_limits<double>::infinity() ? best : params;
  return result;
}

void save_train_log(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write training log " + path);
  char buf[160];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%d\t%.9g\t%.9g\t%.9g\t%.3f\n", e.epoch, e.train_loss,
                  e.val_loss, e.lr, e.wall_seconds);
    out << buf;
  }
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

}  // namespace cascade
