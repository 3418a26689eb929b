#include "oracles/chain_lstm.hpp"

#include <cmath>
#include <stdexcept>

namespace oracle {

using cascade::Matrix;
using cascade::ModelParams;
using cascade::Vec;

namespace {

double sgm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec mat_x(const Matrix& W, const Vec& v) {
  Vec out(W.rows, 0.0);
  for (std::size_t r = 0; r < W.rows; ++r) {
    for (std::size_t c = 0; c < W.cols; ++c) out[r] += W(r, c) * v[c];
  }
  return out;
}

}  // namespace

ChainResult chain_lstm_run(const ModelParams& params, const std::vector<Vec>& xs,
                           const Vec& embedding, const std::vector<Vec>& dprobs) {
  if (!cascade::is_lstm_variant(params.variant)) {
    throw std::invalid_argument("chain oracle: lstm variants only");
  }
  const std::size_t T = xs.size();
  const std::size_t H = static_cast<std::size_t>(params.dims.hidden);
  const std::size_t F = static_cast<std::size_t>(params.dims.head);
  const std::size_t out_dim = static_cast<std::size_t>(params.dims.k) + 1;
  const bool project = cascade::uses_image_projection(params.variant);

  Vec c0(H, 0.0);
  if (project) {
    for (std::size_t r = 0; r < H; ++r) {
      double acc = params.bimg[r];
      for (std::size_t d = 0; d < embedding.size(); ++d) acc += params.Wimg(r, d) * embedding[d];
      c0[r] = acc;
    }
  }

  ChainResult res;
  res.c.resize(T);
  res.h.resize(T);
  res.probs.resize(T);
  // caches for backward
  std::vector<Vec> f(T), i(T), o(T), g(T), z1(T), a1(T);

  Vec h_prev(H, 0.0);
  Vec c_prev = c0;
  for (std::size_t t = 0; t < T; ++t) {
    auto gate = [&](int gi, bool is_tanh) {
      Vec z = mat_x(params.Wx[gi], xs[t]);
      Vec zh = mat_x(params.Wh[gi], h_prev);
      Vec a(H);
      for (std::size_t r = 0; r < H; ++r) {
        double pre = z[r] + zh[r] + params.b[gi][r];
        a[r] = is_tanh ? std::tanh(pre) : sgm(pre);
      }
      return a;
    };
    f[t] = gate(cascade::GateF, false);
    i[t] = gate(cascade::GateI, false);
    o[t] = gate(cascade::GateO, false);
    g[t] = gate(cascade::GateC, true);
    res.c[t].resize(H);
    res.h[t].resize(H);
    for (std::size_t r = 0; r < H; ++r) {
      res.c[t][r] = f[t][r] * c_prev[r] + i[t][r] * g[t][r];
      res.h[t][r] = o[t][r] * std::tanh(res.c[t][r]);
    }
    // head: FC -> relu -> FC -> sigmoid (no dropout at eval)
    z1[t] = mat_x(params.W1, res.h[t]);
    a1[t].resize(F);
    for (std::size_t r = 0; r < F; ++r) {
      z1[t][r] += params.b1[r];
      a1[t][r] = z1[t][r] > 0.0 ? z1[t][r] : 0.0;
    }
    Vec z2 = mat_x(params.W2, a1[t]);
    res.probs[t].resize(out_dim);
    for (std::size_t r = 0; r < out_dim; ++r) res.probs[t][r] = sgm(z2[r] + params.b2[r]);
    h_prev = res.h[t];
    c_prev = res.c[t];
  }

  if (dprobs.empty()) return res;
  if (dprobs.size() != T) throw std::invalid_argument("chain oracle: dprobs size mismatch");

  ModelParams grads = ModelParams::make(params.variant, params.dims);
  const Vec zero_h(H, 0.0);
  Vec dh_next(H, 0.0), dc_next(H, 0.0);  // gradients flowing from step t+1
  for (std::size_t t = T; t-- > 0;) {
    const Vec& c_in = t == 0 ? c0 : res.c[t - 1];
    const Vec& h_in = t == 0 ? zero_h : res.h[t - 1];

    // head backward
    Vec dz2(out_dim);
    for (std::size_t r = 0; r < out_dim; ++r) {
      double p = res.probs[t][r];
      dz2[r] = dprobs[t][r] * p * (1.0 - p);
    }
    Vec da1(F, 0.0);
    for (std::size_t r = 0; r < out_dim; ++r) {
      for (std::size_t c = 0; c < F; ++c) {
        grads.W2(r, c) += dz2[r] * a1[t][c];
        da1[c] += params.W2(r, c) * dz2[r];
      }
      grads.b2[r] += dz2[r];
    }
    Vec dh(H, 0.0);
    for (std::size_t r = 0; r < F; ++r) {
      double dz1r = z1[t][r] > 0.0 ? da1[r] : 0.0;
      for (std::size_t c = 0; c < H; ++c) {
        grads.W1(r, c) += dz1r * res.h[t][c];
        dh[c] += params.W1(r, c) * dz1r;
      }
      grads.b1[r] += dz1r;
    }
    for (std::size_t r = 0; r < H; ++r) dh[r] += dh_next[r];

    // cell backward
    Vec dc(H);
    for (std::size_t r = 0; r < H; ++r) {
      double tc = std::tanh(res.c[t][r]);
      dc[r] = dc_next[r] + dh[r] * o[t][r] * (1.0 - tc * tc);
    }
    Vec dpre[4];
    for (auto& v : dpre) v.resize(H);
    Vec dc_prev(H), dh_prev(H, 0.0);
    for (std::size_t r = 0; r < H; ++r) {
      double tc = std::tanh(res.c[t][r]);
      double d_o = dh[r] * tc;
      double d_f = dc[r] * c_in[r];
      double d_i = dc[r] * g[t][r];
      double d_g = dc[r] * i[t][r];
      dc_prev[r] = dc[r] * f[t][r];
      dpre[cascade::GateF][r] = d_f * f[t][r] * (1.0 - f[t][r]);
      dpre[cascade::GateI][r] = d_i * i[t][r] * (1.0 - i[t][r]);
      dpre[cascade::GateO][r] = d_o * o[t][r] * (1.0 - o[t][r]);
      dpre[cascade::GateC][r] = d_g * (1.0 - g[t][r] * g[t][r]);
    }
    for (int gi = 0; gi < 4; ++gi) {
      for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t c = 0; c < xs[t].size(); ++c) {
          grads.Wx[gi](r, c) += dpre[gi][r] * xs[t][c];
        }
        for (std::size_t c = 0; c < H; ++c) {
          grads.Wh[gi](r, c) += dpre[gi][r] * h_in[c];
          dh_prev[c] += params.Wh[gi](r, c) * dpre[gi][r];
        }
        grads.b[gi][r] += dpre[gi][r];
      }
    }
    dh_next = dh_prev;
    dc_next = dc_prev;
  }
  if (project) {
    for (std::size_t r = 0; r < H; ++r) {
      for (std::size_t d = 0; d < embedding.size(); ++d) {
        grads.Wimg(r, d) += dc_next[r] * embedding[d];
      }
      grads.bimg[r] += dc_next[r];
    }
  }
  res.grad = grads.flatten();
  return res;
}

}  // namespace oracle
