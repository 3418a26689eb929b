#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cascade/matrix.hpp"
#include "cascade/ops.hpp"
#include "cascade/tree.hpp"

namespace cascade {

enum class Variant : std::uint32_t {
  Full = 0,          // image -> c0 projection, social features as input
  SocialOnly = 1,    // c0 = 0
  ImageOnly = 2,     // c0 = 0, the content embedding is the per-step input
  Fc = 3,            // memoryless 3-layer baseline on [social, image]
  RandomWeights = 4  // Full architecture, initialization weights, never trained
};

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

struct ModelDims {
  int hidden = 256;       // LSTM state size H
  int head = 128;         // hidden width F of the prediction head
  int embed = 16;         // content embedding dim D
  int k = 100;            // prototype classes; the model emits k+1 probabilities
  int social = kSocialDim;
};

bool is_lstm_variant(Variant v);
bool uses_image_projection(Variant v);
int model_input_dim(Variant v, const ModelDims& d);

// Named view of one parameter tensor. fan_in is the matrix column count,
// 0 for bias vectors.
struct BlockRef {
  const char* name;
  Vec* vec;
  std::size_t fan_in;
};
struct ConstBlockRef {
  const char* name;
  const Vec* vec;
  std::size_t fan_in;
};

// Gate order f, i, o, c everywhere (storage, checkpoints, flattening).
enum Gate { GateF = 0, GateI = 1, GateO = 2, GateC = 3 };

struct ModelParams {
  Variant variant = Variant::Full;
  ModelDims dims;
  std::uint64_t step = 0;

  std::array<Matrix, 4> Wx, Wh;
  std::array<Vec, 4> b;
  Matrix Wimg;
  Vec bimg;
  Matrix W1;
  Vec b1;
  Matrix W2;
  Vec b2;

  // FC baseline: FC -> relu -> dropout -> FC -> relu -> dropout -> FC -> sigmoid
  Matrix Wa;
  Vec ba;
  Matrix Wb;
  Vec bb;
  Matrix Wc;
  Vec bc;

  static ModelParams make(Variant v, const ModelDims& dims);
  // Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] per matrix; biases zero.
  void init_weights(std::uint64_t seed);

  std::vector<BlockRef> block_refs();
  std::vector<ConstBlockRef> block_refs() const;
  ModelParams zeros_like() const;
  std::size_t parameter_count() const;
  Vec flatten() const;
  void unflatten(const Vec& theta);
  bool finite() const;
};

// Per-node forward cache; everything the backward pass needs.
struct NodeCache {
  Vec x;
  Vec f, i, o, g, c, tanh_c, h;
  Vec hdrop_mask, hdrop, z1, a1drop_mask, a1drop;
  Vec fz1, fa1drop_mask, fa1drop, fz2, fa2drop_mask, fa2drop;  // FC baseline
  Vec probs;
};

struct TreeCache {
  const DiffusionTree* tree = nullptr;
  Vec c0;
  Vec embedding;
  std::vector<NodeCache> nodes;
  Mode mode = Mode::Eval;
};

// Image features become the initial root parent memory through an FC layer;
// variants without the projection start from zero memory. h0 is all zero.
Vec init_root(const Vec& embedding, const ModelParams& params);

// The five parent-child transition equations: forget/input/output gates,
// candidate, memory update, hidden state.
void cell_step(const Vec& x, const Vec& c_parent, const Vec& h_parent, const ModelParams& params,
               NodeCache& out);

// dropout -> FC -> relu -> dropout -> FC -> sigmoid
void head_forward(const Vec& h, const ModelParams& params, Mode mode, double dropout_rate,
                  Rng& rng, NodeCache& out);

// Forward over a whole tree in a parent-before-child order. inputs[i] is
// node i's input vector (social feature, embedding, or concat per variant).
TreeCache tree_forward(const ModelParams& params, const DiffusionTree& tree,
                       const std::vector<Vec>& inputs, const Vec& embedding, Mode mode,
                       double dropout_rate, Rng& rng);

// Reverse traversal; each parent accumulates the sum of its children's
// (dc, dh) plus its own head gradient. Parameter grads accumulate into
// `grads` (same shapes as params).
void tree_backward(const ModelParams& params, const TreeCache& cache,
                   const std::vector<Vec>& dprobs, ModelParams& grads);

// "DLM1": magic, LE u32 {H, F, D, k, variant}, parameter blocks as f32 in
// block order, trailing u64 step counter.
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace cascade
