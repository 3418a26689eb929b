#pragma once

#include <vector>

#include "cascade/model.hpp"

// Textbook chain LSTM + head, implemented independently of the library's
// tree code (plain index loops, own backward derivation). Path-shaped trees
// must match this exactly; it is the oracle, so keep it free of
// cascade::ops / cascade::matvec calls.
namespace oracle {

struct ChainResult {
  std::vector<cascade::Vec> c, h, probs;  // per step
  cascade::Vec grad;                      // in ModelParams::flatten() order
};

// Runs the sequence x_0..x_{T-1} with (c0, h0=0); c0 is the image
// projection when the variant uses one, zero otherwise. dprobs supplies the
// per-step loss gradient for the backward pass (pass an empty vector to
// skip backward).
ChainResult chain_lstm_run(const cascade::ModelParams& params,
                           const std::vector<cascade::Vec>& xs, const cascade::Vec& embedding,
                           const std::vector<cascade::Vec>& dprobs);

}  // namespace oracle
