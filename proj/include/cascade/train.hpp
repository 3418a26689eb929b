#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cascade/dataset.hpp"
#include "cascade/loss.hpp"
#include "cascade/model.hpp"

namespace cascade {

struct TrainConfig {
  double lr_initial = 0.2;
  double lr_reduced = 0.02;
  int plateau_patience = 3;   // epochs without relative improvement >= 1e-4
  int max_epochs = 60;
  int batch_size = 32;        // whole trees per batch
  double dropout = 0.5;
  double clip = 5.0;          // global gradient norm
  std::uint64_t seed = 1;
};

// theta <- theta - lr * g after global-norm clipping. Throws on a
// non-finite gradient; the step is rejected, never silently skipped.
void sgd_step(ModelParams& params, const ModelParams& grads, double lr, double clip_threshold);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  ModelParams params;  // best-validation checkpoint
  std::vector<EpochLog> log;
  bool diverged = false;
  std::string divergence_message;
};

// Epoch loop over tree minibatches with the two-plateau schedule: start at
// lr_initial, drop once to lr_reduced when validation stalls for
// plateau_patience epochs, stop at a second plateau or max_epochs.
// random_weights returns its initialization untouched.
TrainResult train_model(Variant variant, const ModelDims& dims,
                        const std::vector<TreeSample>& train_set,
                        const std::vector<TreeSample>& val_set, const ClassWeights& weights,
                        const TrainConfig& cfg);

// Full-split Eq.-2 loss in eval mode (m = all nodes in the split).
double dataset_loss(const ModelParams& params, const std::vector<TreeSample>& samples,
                    const ClassWeights& weights);

void save_train_log(const std::string& path, const std::vector<EpochLog>& log);

}  // namespace cascade
