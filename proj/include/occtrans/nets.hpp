#pragma once

#include <span>
#include <string>

#include "occtrans/rng.hpp"
#include "occtrans/tape.hpp"

namespace occtrans {

// Architecture descriptor. One struct covers all five roles; unused fields
// stay zero. Shapes and counts derive from this alone, so checkpoints are
// self-describing.
struct NetSpec {
  std::string role;           // encoder | regular-encoder | decoder | generator | critic
  int dim = 2;                // 2 or 3
  int n = 0;                  // input raster extent (encoder roles)
  int k = 0;                  // latent grid extent per axis
  int m = 0;                  // latent channels
  std::vector<int> channels;  // encoder stage output channels
  std::vector<int> hidden;    // decoder hidden widths
  int layers = 0;             // generator/critic conv layers
  int hidden_channels = 0;    // generator/critic conv width
  int kernel = 0;             // conv kernel extent
  double slope = 0.02;        // leaky-relu slope

  int depth() const { return static_cast<int>(channels.size()); }
};

NetSpec make_encoder_spec(int dim, int n, int k, int m);
NetSpec make_regular_encoder_spec(int dim, int n, int k, int m);
NetSpec make_decoder_spec(int dim, int m);
NetSpec make_generator_spec(int dim, int k, int m);
NetSpec make_critic_spec(int dim, int k, int m);

// interleaved weight/bias shapes, in forward order
std::vector<Shape> param_shapes(const NetSpec& spec);
std::int64_t param_count(const NetSpec& spec);

Shape latent_shape(const NetSpec& spec);  // (k,k,m) or (k,k,k,m)

template <class T>
std::vector<Array<T>> init_params(const NetSpec& spec, Rng rng) {
  std::vector<Array<T>> out;
  for (const Shape& s : param_shapes(spec)) {
    // weight shapes end in Cout; fan-in is everything before it.
    // biases reuse their weight's fan-in (they directly follow it).
    std::int64_t fan_in = 1;
    if (s.size() >= 2)
      for (size_t i = 0; i + 1 < s.size(); ++i) fan_in *= s[i];
    else
      fan_in = out.empty() ? 1 : numel(out.back().shape()) / s[0];
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::vector<T> d(static_cast<size_t>(numel(s)));
    for (auto& v : d) v = static_cast<T>(rng.uniform(-bound, bound));
    out.push_back(Array<T>(s, std::move(d)));
  }
  return out;
}

template <class T>
std::vector<Var> bind_params(Tape<T>& tp, const std::vector<Array<T>>& params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tp.input(p));
  return vars;
}

namespace detail {
template <class T>
Var conv_any(Tape<T>& tp, Var x, Var w, int dim, int stride, int pad) {
  return dim == 2 ? tp.conv2d(x, w, stride, pad) : tp.conv3d(x, w, stride, pad);
}
template <class T>
Var bias_add(Tape<T>& tp, Var x, Var b) {
  return tp.add(x, tp.broadcast(b, tp.shape(x)));
}
}  // namespace detail

// grids (B,n,n,1) or (B,n,n,n,1) -> latent batch (B,k..,m), codes in (0,1)
template <class T>
Var net_encode(Tape<T>& tp, const NetSpec& spec, std::span<const Var> params, Var x) {
  require(spec.role == "encoder", "net_encode wants an encoder spec");
  const Shape in = tp.shape(x);
  require(static_cast<int>(in.size()) == spec.dim + 2, "encoder input rank mismatch");
  for (int a = 1; a <= spec.dim; ++a)
    if (in[static_cast<size_t>(a)] != spec.n)
      fail("encoder expects extent ", std::to_string(spec.n), ", got ", shape_str(in));
  require(in.back() == 1, "encoder expects a single input channel");
  require(params.size() == param_shapes(spec).size(), "encoder param count mismatch");
  size_t pi = 0;
  for (int stage = 0; stage < spec.depth(); ++stage) {
    x = detail::conv_any(tp, x, params[pi], spec.dim, 2, 1);
    x = detail::bias_add(tp, x, params[pi + 1]);
    x = tp.leaky_relu(x, spec.slope);
    pi += 2;
  }
  x = detail::conv_any(tp, x, params[pi], spec.dim, 1, 0);  // 1x1 projection to m
  x = detail::bias_add(tp, x, params[pi + 1]);
  // Bounded codes; an unbounded projection lets latent scale and first
  // decoder layer drift inversely without bound during joint training.
  return tp.sigmoid(x);
}

// grids -> flat codes (B,m) in (0,1): GAP taps on the last four stages + linear maps
template <class T>
Var net_encode_regular(Tape<T>& tp, const NetSpec& spec, std::span<const Var> params, Var x) {
  require(spec.role == "regular-encoder", "net_encode_regular wants a regular-encoder spec");
  require(spec.m % 4 == 0, "m must be divisible by 4");
  require(spec.depth() >= 4, "regular encoder needs at least 4 stages");
  const Shape in = tp.shape(x);
  require(static_cast<int>(in.size()) == spec.dim + 2, "encoder input rank mismatch");
  const int B = in[0];
  size_t pi = 0;
  std::vector<Var> stage_outs;
  for (int stage = 0; stage < spec.depth(); ++stage) {
    x = detail::conv_any(tp, x, params[pi], spec.dim, 2, 1);
    x = detail::bias_add(tp, x, params[pi + 1]);
    x = tp.leaky_relu(x, spec.slope);
    stage_outs.push_back(x);
    pi += 2;
  }
  std::vector<Var> subcodes;
  for (int t = spec.depth() - 4; t < spec.depth(); ++t) {
    Var s = stage_outs[static_cast<size_t>(t)];
    const Shape ss = tp.shape(s);
    Shape pooled = ss;
    std::int64_t cells = 1;
    for (size_t a = 1; a + 1 < pooled.size(); ++a) {
      cells *= pooled[a];
      pooled[a] = 1;
    }
    Var gap = tp.reshape(tp.sum_to(s, pooled), {B, ss.back()});
    gap = tp.scale(gap, 1.0 / static_cast<double>(cells));
    subcodes.push_back(detail::bias_add(tp, tp.matmul(gap, params[pi]), params[pi + 1]));
    pi += 2;
  }
  return tp.sigmoid(tp.concat(std::span<const Var>(subcodes), 1));
}

// rows (N, m+dim) -> occupancy estimates (N,1)
template <class T>
Var net_decode(Tape<T>& tp, const NetSpec& spec, std::span<const Var> params, Var x) {
  require(spec.role == "decoder", "net_decode wants a decoder spec");
  require(tp.shape(x).size() == 2 && tp.shape(x)[1] == spec.m + spec.dim,
          "decoder input must be (N, m+dim)");
  size_t pi = 0;
  for (size_t h = 0; h < spec.hidden.size(); ++h) {
    x = detail::bias_add(tp, tp.matmul(x, params[pi]), params[pi + 1]);
    x = tp.leaky_relu(x, spec.slope);
    pi += 2;
  }
  x = detail::bias_add(tp, tp.matmul(x, params[pi]), params[pi + 1]);
  return tp.sigmoid(x);
}

// single-shape latent (k..,m) sampled at pts (P,dim), then decoded
template <class T>
Var decode_field(Tape<T>& tp, const NetSpec& dec, std::span<const Var> dec_params, Var latent,
                 Var pts) {
  Var codes = dec.dim == 2 ? tp.bilinear_sample(latent, pts) : tp.trilinear_sample(latent, pts);
  return net_decode(tp, dec, dec_params, tp.concat({codes, pts}, 1));
}

// flat code (1,m) shared by all pts (P,dim), then decoded
template <class T>
Var decode_field_regular(Tape<T>& tp, const NetSpec& dec, std::span<const Var> dec_params,
                         Var code, Var pts) {
  const int P = tp.shape(pts)[0];
  Var codes = tp.broadcast(code, {P, tp.shape(code)[1]});
  return net_decode(tp, dec, dec_params, tp.concat({codes, pts}, 1));
}

// latent batch (B,k..,m) -> same shape
template <class T>
Var net_generate(Tape<T>& tp, const NetSpec& spec, std::span<const Var> params, Var z) {
  require(spec.role == "generator", "net_generate wants a generator spec");
  const Shape zs = tp.shape(z);
  require(static_cast<int>(zs.size()) == spec.dim + 2 && zs.back() == spec.m,
          "generator input must be a latent batch");
  for (int a = 1; a <= spec.dim; ++a) require(zs[static_cast<size_t>(a)] == spec.k, "latent extent mismatch");
  const int pad = (spec.kernel - 1) / 2;
  size_t pi = 0;
  Var x = z;
  for (int l = 0; l < spec.layers; ++l) {
    x = detail::conv_any(tp, x, params[pi], spec.dim, 1, pad);
    x = detail::bias_add(tp, x, params[pi + 1]);
    if (l + 1 < spec.layers) x = tp.leaky_relu(x, spec.slope);
    pi += 2;
  }
  return x;
}

// latent batch (B,k..,m) -> per-cell scores (B,k..,1)
template <class T>
Var net_critic(Tape<T>& tp, const NetSpec& spec, std::span<const Var> params, Var z) {
  require(spec.role == "critic", "net_critic wants a critic spec");
  const Shape zs = tp.shape(z);
  require(static_cast<int>(zs.size()) == spec.dim + 2 && zs.back() == spec.m,
          "critic input must be a latent batch");
  for (int a = 1; a <= spec.dim; ++a) require(zs[static_cast<size_t>(a)] == spec.k, "latent extent mismatch");
  const int pad = (spec.kernel - 1) / 2;
  size_t pi = 0;
  Var x = z;
  for (int l = 0; l < spec.layers; ++l) {
    x = detail::conv_any(tp, x, params[pi], spec.dim, 1, pad);
    x = detail::bias_add(tp, x, params[pi + 1]);
    if (l + 1 < spec.layers) x = tp.leaky_relu(x, spec.slope);
    pi += 2;
  }
  return x;
}

}  // namespace occtrans
