#include "cascade/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cascade {

namespace {

template <class Self, class Ref>
std::vector<Ref> collect_blocks(Self& p) {
  std::vector<Ref> refs;
  auto mat = [&](const char* name, auto& m) { refs.push_back(Ref{name, &m.data, m.cols}); };
  auto bias = [&](const char* name, auto& v) { refs.push_back(Ref{name, &v, 0}); };
  if (is_lstm_variant(p.variant)) {
    static const char* wx_names[4] = {"Wxf", "Wxi", "Wxo", "Wxc"};
    static const char* wh_names[4] = {"Whf", "Whi", "Who", "Whc"};
    static const char* b_names[4] = {"bf", "bi", "bo", "bc"};
    for (int g : {GateF, GateI, GateO, GateC}) {
      mat(wx_names[g], p.Wx[g]);
      mat(wh_names[g], p.Wh[g]);
      bias(b_names[g], p.b[g]);
    }
    mat("Wimg", p.Wimg);
    bias("bimg", p.bimg);
    mat("W1", p.W1);
    bias("b1", p.b1);
    mat("W2", p.W2);
    bias("b2", p.b2);
  } else {
    mat("Wa", p.Wa);
    bias("ba", p.ba);
    mat("Wb", p.Wb);
    bias("bb", p.bb);
    mat("Wc", p.Wc);
    bias("bc", p.bc);
  }
  return refs;
}

void read_exact(std::ifstream& in, void* dst, std::size_t n, const std::string& path) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw std::invalid_argument(path + ": truncated checkpoint");
  }
}

void fc_node_forward(const Vec& x, const ModelParams& p, Mode mode, double rate, Rng& rng,
                     NodeCache& nc) {
  nc.x = x;
  nc.fz1 = affine(x, p.Wa, p.ba);
  Vec a1 = relu(nc.fz1);
  auto d1 = dropout(a1, rate, mode, rng);
  nc.fa1drop_mask = std::move(d1.mask);
  nc.fa1drop = std::move(d1.y);
  nc.fz2 = affine(nc.fa1drop, p.Wb, p.bb);
  Vec a2 = relu(nc.fz2);
  auto d2 = dropout(a2, rate, mode, rng);
  nc.fa2drop_mask = std::move(d2.mask);
  nc.fa2drop = std::move(d2.y);
  nc.probs = sigmoid(affine(nc.fa2drop, p.Wc, p.bc));
}

void fc_node_backward(const NodeCache& nc, const ModelParams& p, const Vec& dprobs,
                      ModelParams& g) {
  Vec dz3 = sigmoid_backward(nc.probs, dprobs);
  Vec da2drop(p.Wc.cols, 0.0);
  affine_backward_acc(nc.fa2drop, p.Wc, dz3, da2drop, g.Wc, g.bc);
  Vec da2 = dropout_backward(nc.fa2drop_mask, da2drop);
  Vec dz2 = relu_backward(nc.fz2, da2);
  Vec da1drop(p.Wb.cols, 0.0);
  affine_backward_acc(nc.fa1drop, p.Wb, dz2, da1drop, g.Wb, g.bb);
  Vec da1 = dropout_backward(nc.fa1drop_mask, da1drop);
  Vec dz1 = relu_backward(nc.fz1, da1);
  Vec dx(p.Wa.cols, 0.0);
  affine_backward_acc(nc.x, p.Wa, dz1, dx, g.Wa, g.ba);
}

}  // namespace

Variant parse_variant(const std::string& name) {
  if (name == "full") return Variant::Full;
  if (name == "social_only") return Variant::SocialOnly;
  if (name == "image_only") return Variant::ImageOnly;
  if (name == "fc") return Variant::Fc;
  if (name == "random_weights") return Variant::RandomWeights;
  throw std::invalid_argument("unknown variant '" + name +
                              "' (expected full|social_only|image_only|fc|random_weights)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::SocialOnly: return "social_only";
    case Variant::ImageOnly: return "image_only";
    case Variant::Fc: return "fc";
    case Variant::RandomWeights: return "random_weights";
  }
  throw std::invalid_argument("bad variant tag");
}

bool is_lstm_variant(Variant v) { return v != Variant::Fc; }

bool uses_image_projection(Variant v) {
  return v == Variant::Full || v == Variant::RandomWeights;
}

int model_input_dim(Variant v, const ModelDims& d) {
  switch (v) {
    case Variant::ImageOnly: return d.embed;
    case Variant::Fc: return d.social + d.embed;
    default: return d.social;
  }
}

ModelParams ModelParams::make(Variant v, const ModelDims& dims) {
  ModelParams p;
  p.variant = v;
  p.dims = dims;
  const std::size_t H = static_cast<std::size_t>(dims.hidden);
  const std::size_t F = static_cast<std::size_t>(dims.head);
  const std::size_t D = static_cast<std::size_t>(dims.embed);
  const std::size_t out = static_cast<std::size_t>(dims.k) + 1;
  const std::size_t in = static_cast<std::size_t>(model_input_dim(v, dims));
  if (is_lstm_variant(v)) {
    for (int g = 0; g < 4; ++g) {
      p.Wx[g] = Matrix(H, in);
      p.Wh[g] = Matrix(H, H);
      p.b[g] = Vec(H, 0.0);
    }
    p.Wimg = Matrix(H, D);
    p.bimg = Vec(H, 0.0);
    p.W1 = Matrix(F, H);
    p.b1 = Vec(F, 0.0);
    p.W2 = Matrix(out, F);
    p.b2 = Vec(out, 0.0);
  } else {
    p.Wa = Matrix(H, in);
    p.ba = Vec(H, 0.0);
    p.Wb = Matrix(F, H);
    p.bb = Vec(F, 0.0);
    p.Wc = Matrix(out, F);
    p.bc = Vec(out, 0.0);
  }
  return p;
}

void ModelParams::init_weights(std::uint64_t seed) {
  Rng rng(seed, "init");
  for (auto& ref : block_refs()) {
    if (ref.fan_in == 0) continue;  // biases stay zero
    double bound = 1.0 / std::sqrt(static_cast<double>(ref.fan_in));
    for (auto& w : *ref.vec) w = rng.uniform(-bound, bound);
  }
}

std::vector<BlockRef> ModelParams::block_refs() {
  return collect_blocks<ModelParams, BlockRef>(*this);
}

std::vector<ConstBlockRef> ModelParams::block_refs() const {
  return collect_blocks<const ModelParams, ConstBlockRef>(*this);
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = make(variant, dims);
  z.step = 0;
  return z;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& ref : block_refs()) n += ref.vec->size();
  return n;
}

Vec ModelParams::flatten() const {
  Vec theta;
  theta.reserve(parameter_count());
  for (const auto& ref : block_refs()) theta.insert(theta.end(), ref.vec->begin(), ref.vec->end());
  return theta;
}

void ModelParams::unflatten(const Vec& theta) {
  std::size_t pos = 0;
  for (auto& ref : block_refs()) {
    if (pos + ref.vec->size() > theta.size()) {
      throw std::invalid_argument("unflatten: vector too short");
    }
    std::copy(theta.begin() + static_cast<std::ptrdiff_t>(pos),
              theta.begin() + static_cast<std::ptrdiff_t>(pos + ref.vec->size()),
              ref.vec->begin());
    pos += ref.vec->size();
  }
  if (pos != theta.size()) throw std::invalid_argument("unflatten: vector too long");
}

bool ModelParams::finite() const {
  for (const auto& ref : block_refs()) {
    if (!all_finite(*ref.vec)) return false;
  }
  return true;
}

Vec init_root(const Vec& embedding, const ModelParams& params) {
  if (!uses_image_projection(params.variant)) {
    return Vec(static_cast<std::size_t>(params.dims.hidden), 0.0);
  }
  if (embedding.size() != static_cast<std::size_t>(params.dims.embed)) {
    throw std::invalid_argument("init_root: embedding dim " + std::to_string(embedding.size()) +
                                ", model expects " + std::to_string(params.dims.embed));
  }
  return affine(embedding, params.Wimg, params.bimg);
}

void cell_step(const Vec& x, const Vec& c_parent, const Vec& h_parent, const ModelParams& params,
               NodeCache& out) {
  out.x = x;
  // gate preactivations: Wx x + Wh h_p + b
  auto gate_pre = [&](int g) {
    Vec z = affine(x, params.Wx[g], params.b[g]);
    Vec hterm = matvec(params.Wh[g], h_parent);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] += hterm[j];
    return z;
  };
  out.f = sigmoid(gate_pre(GateF));
  out.i = sigmoid(gate_pre(GateI));
  out.o = sigmoid(gate_pre(GateO));
  out.g = tanhv(gate_pre(GateC));
  const std::size_t H = out.f.size();
  out.c.resize(H);
  for (std::size_t j = 0; j < H; ++j) out.c[j] = out.f[j] * c_parent[j] + out.i[j] * out.g[j];
  out.tanh_c = tanhv(out.c);
  out.h.resize(H);
  for (std::size_t j = 0; j < H; ++j) out.h[j] = out.o[j] * out.tanh_c[j];
}

void head_forward(const Vec& h, const ModelParams& params, Mode mode, double dropout_rate,
                  Rng& rng, NodeCache& out) {
  auto d1 = dropout(h, dropout_rate, mode, rng);
  out.hdrop_mask = std::move(d1.mask);
  out.hdrop = std::move(d1.y);
  out.z1 = affine(out.hdrop, params.W1, params.b1);
  Vec a1 = relu(out.z1);
  auto d2 = dropout(a1, dropout_rate, mode, rng);
  out.a1drop_mask = std::move(d2.mask);
  out.a1drop = std::move(d2.y);
  out.probs = sigmoid(affine(out.a1drop, params.W2, params.b2));
}

TreeCache tree_forward(const ModelParams& params, const DiffusionTree& tree,
                       const std::vector<Vec>& inputs, const Vec& embedding, Mode mode,
                       double dropout_rate, Rng& rng) {
  tree.validate();
  if (inputs.size() != tree.nodes.size()) {
    throw std::invalid_argument("tree_forward: " + std::to_string(inputs.size()) +
                                " inputs for " + std::to_string(tree.nodes.size()) + " nodes");
  }
  TreeCache cache;
  cache.tree = &tree;
  cache.embedding = embedding;
  cache.mode = mode;
  cache.nodes.resize(tree.nodes.size());
  if (params.variant == Variant::Fc) {
    for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
      fc_node_forward(inputs[n], params, mode, dropout_rate, rng, cache.nodes[n]);
    }
    return cache;
  }
  cache.c0 = init_root(embedding, params);
  const Vec h0(static_cast<std::size_t>(params.dims.hidden), 0.0);
  for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
    int parent = tree.nodes[n].parent;
    const Vec& c_p = parent < 0 ? cache.c0 : cache.nodes[static_cast<std::size_t>(parent)].c;
    const Vec& h_p = parent < 0 ? h0 : cache.nodes[static_cast<std::size_t>(parent)].h;
    cell_step(inputs[n], c_p, h_p, params, cache.nodes[n]);
    head_forward(cache.nodes[n].h, params, mode, dropout_rate, rng, cache.nodes[n]);
  }
  return cache;
}

void tree_backward(const ModelParams& params, const TreeCache& cache,
                   const std::vector<Vec>& dprobs, ModelParams& grads) {
  if (cache.tree == nullptr || dprobs.size() != cache.nodes.size()) {
    throw std::invalid_argument("tree_backward: cache/gradient mismatch");
  }
  if (grads.variant != params.variant) {
    throw std::invalid_argument("tree_backward: grads built for a different variant");
  }
  const auto& tree = *cache.tree;
  if (params.variant == Variant::Fc) {
    for (std::size_t n = 0; n < cache.nodes.size(); ++n) {
      fc_node_backward(cache.nodes[n], params, dprobs[n], grads);
    }
    return;
  }
  const std::size_t H = static_cast<std::size_t>(params.dims.hidden);
  const Vec h0(H, 0.0);
  std::vector<Vec> dh(cache.nodes.size(), Vec(H, 0.0));
  std::vector<Vec> dc(cache.nodes.size(), Vec(H, 0.0));
  Vec dc0(H, 0.0);

  for (std::size_t idx = cache.nodes.size(); idx-- > 0;) {
    const NodeCache& nc = cache.nodes[idx];
    int parent = tree.nodes[idx].parent;
    const Vec& c_p = parent < 0 ? cache.c0 : cache.nodes[static_cast<std::size_t>(parent)].c;
    const Vec& h_p = parent < 0 ? h0 : cache.nodes[static_cast<std::size_t>(parent)].h;

    // head
    Vec dz2 = sigmoid_backward(nc.probs, dprobs[idx]);
    Vec da1drop(params.W2.cols, 0.0);
    affine_backward_acc(nc.a1drop, params.W2, dz2, da1drop, grads.W2, grads.b2);
    Vec da1 = dropout_backward(nc.a1drop_mask, da1drop);
    Vec dz1 = relu_backward(nc.z1, da1);
    Vec dhdrop(params.W1.cols, 0.0);
    affine_backward_acc(nc.hdrop, params.W1, dz1, dhdrop, grads.W1, grads.b1);
    Vec dh_total = dropout_backward(nc.hdrop_mask, dhdrop);
    axpy(1.0, dh[idx], dh_total);  // children's contributions

    // cell
    Vec dtanh_c(H), do_(H);
    for (std::size_t j = 0; j < H; ++j) {
      do_[j] = dh_total[j] * nc.tanh_c[j];
      dtanh_c[j] = dh_total[j] * nc.o[j];
    }
    Vec dc_total = dc[idx];
    for (std::size_t j = 0; j < H; ++j) {
      dc_total[j] += dtanh_c[j] * (1.0 - nc.tanh_c[j] * nc.tanh_c[j]);
    }
    Vec df(H), di(H), dg(H), dc_parent(H);
    for (std::size_t j = 0; j < H; ++j) {
      df[j] = dc_total[j] * c_p[j];
      di[j] = dc_total[j] * nc.g[j];
      dg[j] = dc_total[j] * nc.i[j];
      dc_parent[j] = dc_total[j] * nc.f[j];
    }
    Vec dpre[4] = {sigmoid_backward(nc.f, df), sigmoid_backward(nc.i, di),
                   sigmoid_backward(nc.o, do_), tanhv_backward(nc.g, dg)};
    Vec dh_parent(H, 0.0);
    for (int g = 0; g < 4; ++g) {
      add_outer(grads.Wx[g], dpre[g], nc.x);
      add_outer(grads.Wh[g], dpre[g], h_p);
      axpy(1.0, dpre[g], grads.b[g]);
      Vec dhp = matvec_t(params.Wh[g], dpre[g]);
      axpy(1.0, dhp, dh_parent);
    }
    if (parent < 0) {
      axpy(1.0, dc_parent, dc0);  // dh into constant h0 is dropped
    } else {
      axpy(1.0, dh_parent, dh[static_cast<std::size_t>(parent)]);
      axpy(1.0, dc_parent, dc[static_cast<std::size_t>(parent)]);
    }
  }
  if (uses_image_projection(params.variant)) {
    add_outer(grads.Wimg, dc0, cache.embedding);
    axpy(1.0, dc0, grads.bimg);
  }
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
  if (is_lstm_variant(params.variant) && params.dims.social != kSocialDim) {
    throw std::invalid_argument("save_checkpoint: nonstandard social dim " +
                                std::to_string(params.dims.social));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write checkpoint " + path);
  out.write("DLM1", 4);
  std::uint32_t header[5] = {
      static_cast<std::uint32_t>(params.dims.hidden), static_cast<std::uint32_t>(params.dims.head),
      static_cast<std::uint32_t>(params.dims.embed), static_cast<std::uint32_t>(params.dims.k),
      static_cast<std::uint32_t>(params.variant)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const auto& ref : params.block_refs()) {
    std::vector<float> raw(ref.vec->begin(), ref.vec->end());
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(sizeof(float) * raw.size()));
  }
  out.write(reinterpret_cast<const char*>(&params.step), sizeof(params.step));
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open checkpoint " + path);
  char magic[4];
  read_exact(in, magic, 4, path);
  if (std::memcmp(magic, "DLM1", 4) != 0) {
    throw std::invalid_argument(path + ": bad magic, expected DLM1");
  }
  std::uint32_t header[5];
  read_exact(in, header, sizeof(header), path);
  if (header[4] > 4) throw std::invalid_argument(path + ": unknown variant tag");
  ModelDims dims;
  dims.hidden = static_cast<int>(header[0]);
  dims.head = static_cast<int>(header[1]);
  dims.embed = static_cast<int>(header[2]);
  dims.k = static_cast<int>(header[3]);
  ModelParams params = ModelParams::make(static_cast<Variant>(header[4]), dims);
  for (auto& ref : params.block_refs()) {
    std::vector<float> raw(ref.vec->size());
    read_exact(in, raw.data(), sizeof(float) * raw.size(), path);
    std::copy(raw.begin(), raw.end(), ref.vec->begin());
  }
  read_exact(in, &params.step, sizeof(params.step), path);
  return params;
}

}  // namespace cascade
