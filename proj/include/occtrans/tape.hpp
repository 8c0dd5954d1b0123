#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>

#include "occtrans/array.hpp"
#include "occtrans/kernels.hpp"

namespace occtrans {

// Reverse-mode differentiable-array engine.
//
// The tape is an append-only graph of eagerly evaluated nodes. A backward
// pass is recorded as ordinary nodes on the same tape, so gradients are
// themselves differentiable (needed to backprop through a critic's gradient
// norm). Values are immutable; replaying the tape with fresh inputs
// recomputes every node in creation order and is bit-reproducible.

enum class Op : std::uint8_t {
  Input,
  Const,
  Add,
  Sub,
  Mul,
  Div,
  Affine,  // a*x + b, elementwise with scalar a,b
  MatmulNN,
  MatmulTN,
  MatmulNT,
  Im2col2d,
  Col2im2d,
  Im2col3d,
  Col2im3d,
  LeakyRelu,
  LeakyReluMask,  // value: d(leaky_relu)/dx; derivative defined as zero
  Sigmoid,
  Abs,
  Sign,  // derivative defined as zero
  Square,
  Sqrt,
  Sum,
  Mean,
  SumTo,
  Broadcast,
  Reshape,
  Concat,
  Slice,
  BilinearGather,
  BilinearScatter,
  TrilinearGather,
  TrilinearScatter,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Input: return "input";
    case Op::Const: return "const";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Affine: return "affine";
    case Op::MatmulNN: return "matmul";
    case Op::MatmulTN: return "matmul_tn";
    case Op::MatmulNT: return "matmul_nt";
    case Op::Im2col2d: return "im2col2d";
    case Op::Col2im2d: return "col2im2d";
    case Op::Im2col3d: return "im2col3d";
    case Op::Col2im3d: return "col2im3d";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::LeakyReluMask: return "leaky_relu_mask";
    case Op::Sigmoid: return "sigmoid";
    case Op::Abs: return "abs";
    case Op::Sign: return "sign";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::SumTo: return "sum_to";
    case Op::Broadcast: return "broadcast";
    case Op::Reshape: return "reshape";
    case Op::Concat: return "concat";
    case Op::Slice: return "slice";
    case Op::BilinearGather: return "bilinear_sample";
    case Op::BilinearScatter: return "bilinear_scatter";
    case Op::TrilinearGather: return "trilinear_sample";
    case Op::TrilinearScatter: return "trilinear_scatter";
  }
  return "?";
}

struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

struct OpAttrs {
  int i0 = 0, i1 = 0, i2 = 0, i3 = 0;  // kernel extents / stride / pad / axis
  double a = 0, b = 0;                 // affine coefficients, slopes
  Shape sh;                            // target/restore shape where needed
  Shape sh2;                           // 3D kernel extents for col2im3d
};

template <class T>
class Tape {
 public:
  struct Options {
    bool check_finite = false;  // scan every computed value, throw on NaN/inf
  };

  Tape() = default;
  explicit Tape(Options opts) : opts_(opts) {}

  // ---- graph construction --------------------------------------------------

  Var input(Array<T> v, std::string name = {}) {
    return push(Op::Input, {}, {}, std::move(v), std::move(name));
  }
  Var constant(Array<T> v) { return push(Op::Const, {}, {}, std::move(v)); }
  Var constant_scalar(T v) { return constant(Array<T>::scalar(v)); }
  Var zeros_like(Var x) { return constant(Array<T>::zeros(shape(x))); }

  Var add(Var a, Var b) { return binary(Op::Add, a, b); }
  Var sub(Var a, Var b) { return binary(Op::Sub, a, b); }
  Var mul(Var a, Var b) { return binary(Op::Mul, a, b); }
  Var div(Var a, Var b) { return binary(Op::Div, a, b); }

  // a*x + b elementwise
  Var affine(Var x, double a, double b) {
    OpAttrs at;
    at.a = a;
    at.b = b;
    return push(Op::Affine, {x.id}, at);
  }
  Var neg(Var x) { return affine(x, -1.0, 0.0); }
  Var scale(Var x, double a) { return affine(x, a, 0.0); }

  Var matmul(Var a, Var b) { return matmul_any(Op::MatmulNN, a, b); }
  Var matmul_tn(Var a, Var b) { return matmul_any(Op::MatmulTN, a, b); }
  Var matmul_nt(Var a, Var b) { return matmul_any(Op::MatmulNT, a, b); }

  Var leaky_relu(Var x, double slope) {
    OpAttrs at;
    at.a = slope;
    return push(Op::LeakyRelu, {x.id}, at);
  }
  Var sigmoid(Var x) { return push(Op::Sigmoid, {x.id}, {}); }
  Var abs(Var x) { return push(Op::Abs, {x.id}, {}); }
  Var square(Var x) { return push(Op::Square, {x.id}, {}); }
  Var sqrt(Var x) { return push(Op::Sqrt, {x.id}, {}); }

  Var sum(Var x) { return push(Op::Sum, {x.id}, {}); }
  Var mean(Var x) { return push(Op::Mean, {x.id}, {}); }

  // L2 norm of the whole array (composite of square/sum/sqrt)
  Var norm2(Var x) { return sqrt(sum(square(x))); }

  Var sum_to(Var x, Shape target) {
    check_broadcastable(target, shape(x), "sum_to");
    OpAttrs at;
    at.sh = std::move(target);
    return push(Op::SumTo, {x.id}, at);
  }
  Var broadcast(Var x, Shape target) {
    check_broadcastable(shape(x), target, "broadcast");
    OpAttrs at;
    at.sh = std::move(target);
    return push(Op::Broadcast, {x.id}, at);
  }
  Var reshape(Var x, Shape target) {
    if (numel(target) != numel(shape(x)))
      fail("reshape: cannot view ", shape_str(shape(x)), " as ", shape_str(target), " (node ",
           std::to_string(x.id), ")");
    OpAttrs at;
    at.sh = std::move(target);
    return push(Op::Reshape, {x.id}, at);
  }

  Var concat(std::span<const Var> xs, int axis) {
    require(!xs.empty(), "concat: no inputs");
    std::vector<std::int32_t> ids;
    for (Var v : xs) ids.push_back(v.id);
    OpAttrs at;
    at.i0 = axis;
    return push(Op::Concat, std::move(ids), at);
  }
  Var concat(std::initializer_list<Var> xs, int axis) {
    return concat(std::span<const Var>(xs.begin(), xs.size()), axis);
  }
  Var slice(Var x, int axis, int start, int len) {
    const Shape& s = shape(x);
    require(axis >= 0 && axis < static_cast<int>(s.size()), "slice: bad axis");
    require(start >= 0 && len >= 1 && start + len <= s[axis], "slice: bad range");
    OpAttrs at;
    at.i0 = axis;
    at.i1 = start;
    at.i2 = len;
    return push(Op::Slice, {x.id}, at);
  }

  // x (B,H,W,C) * w (kh,kw,C,Co) -> (B,OH,OW,Co); composite over im2col+matmul
  Var conv2d(Var x, Var w, int stride, int pad) {
    const Shape xs = shape(x);  // by value: pushes below may reallocate nodes_
    const Shape ws = shape(w);
    if (xs.size() != 4 || ws.size() != 4 || xs[3] != ws[2])
      fail("conv2d: bad shapes ", shape_str(xs), " x ", shape_str(ws), " (node ",
           std::to_string(x.id), ")");
    const int oh = static_cast<int>(kern::conv_out_extent(xs[1], ws[0], stride, pad));
    const int ow = static_cast<int>(kern::conv_out_extent(xs[2], ws[1], stride, pad));
    require(oh >= 1 && ow >= 1, "conv2d: kernel larger than padded input");
    OpAttrs at;
    at.i0 = ws[0];
    at.i1 = ws[1];
    at.i2 = stride;
    at.i3 = pad;
    Var cols = push(Op::Im2col2d, {x.id}, at);
    Var wmat = reshape(w, {ws[0] * ws[1] * ws[2], ws[3]});
    Var out = matmul(cols, wmat);
    return reshape(out, {xs[0], oh, ow, ws[3]});
  }

  // x (B,D,H,W,C) * w (kd,kh,kw,C,Co) -> (B,OD,OH,OW,Co)
  Var conv3d(Var x, Var w, int stride, int pad) {
    const Shape xs = shape(x);
    const Shape ws = shape(w);
    if (xs.size() != 5 || ws.size() != 5 || xs[4] != ws[3])
      fail("conv3d: bad shapes ", shape_str(xs), " x ", shape_str(ws), " (node ",
           std::to_string(x.id), ")");
    const int od = static_cast<int>(kern::conv_out_extent(xs[1], ws[0], stride, pad));
    const int oh = static_cast<int>(kern::conv_out_extent(xs[2], ws[1], stride, pad));
    const int ow = static_cast<int>(kern::conv_out_extent(xs[3], ws[2], stride, pad));
    require(od >= 1 && oh >= 1 && ow >= 1, "conv3d: kernel larger than padded input");
    OpAttrs at;
    at.i2 = stride;
    at.i3 = pad;
    at.sh = {ws[0], ws[1], ws[2]};
    Var cols = push(Op::Im2col3d, {x.id}, at);
    Var wmat = reshape(w, {ws[0] * ws[1] * ws[2] * ws[3], ws[4]});
    Var out = matmul(cols, wmat);
    return reshape(out, {xs[0], od, oh, ow, ws[4]});
  }

  // grid (gh,gw,C), pts (P,2) -> (P,C); pts treated as non-differentiable
  Var bilinear_sample(Var grid, Var pts) {
    const Shape& gs = shape(grid);
    const Shape& ps = shape(pts);
    if (gs.size() != 3 || ps.size() != 2 || ps[1] != 2)
      fail("bilinear_sample: bad shapes ", shape_str(gs), ", ", shape_str(ps));
    return push(Op::BilinearGather, {grid.id, pts.id}, {});
  }
  // grid (gd,gh,gw,C), pts (P,3) -> (P,C)
  Var trilinear_sample(Var grid, Var pts) {
    const Shape& gs = shape(grid);
    const Shape& ps = shape(pts);
    if (gs.size() != 4 || ps.size() != 2 || ps[1] != 3)
      fail("trilinear_sample: bad shapes ", shape_str(gs), ", ", shape_str(ps));
    return push(Op::TrilinearGather, {grid.id, pts.id}, {});
  }

  // x (N,F) * w (F,O) + b (O)
  Var linear(Var x, Var w, Var b) {
    Var y = matmul(x, w);
    return add(y, broadcast(b, shape(y)));
  }

  // ---- access ---------------------------------------------------------------

  const Array<T>& value(Var v) const { return node(v.id).value; }
  const Shape& shape(Var v) const { return node(v.id).value.shape(); }
  size_t size() const { return nodes_.size(); }
  void truncate(size_t n) {
    require(n <= nodes_.size(), "truncate: growing not allowed");
    nodes_.resize(n);
  }
  void clear() { nodes_.clear(); }
  std::int64_t clamp_events() const { return clamp_events_; }

  // ---- differentiation -------------------------------------------------------

  // Reverse pass recorded as graph nodes; result vars usable in further losses.
  std::vector<Var> gradient_vars(Var out, std::span<const Var> wrt) {
    require(out.valid() && out.id < static_cast<std::int32_t>(nodes_.size()), "gradient: bad node");
    if (numel(shape(out)) != 1)
      fail("gradient: output must be scalar, node ", std::to_string(out.id), " has shape ",
           shape_str(shape(out)));
    std::vector<std::int32_t> adj(out.id + 1, -1);
    adj[out.id] = constant(Array<T>::full(shape(out), T(1))).id;
    for (std::int32_t id = out.id; id >= 0; --id) {
      if (adj[id] < 0) continue;
      emit_vjp(id, Var{adj[id]}, adj);
    }
    std::vector<Var> grads;
    grads.reserve(wrt.size());
    for (Var w : wrt) {
      require(w.valid(), "gradient: invalid wrt var");
      if (w.id <= out.id && adj[w.id] >= 0) {
        grads.push_back(Var{adj[w.id]});
      } else {
        unreachable_wrt_ += 1;
        std::fprintf(stderr, "warning: node %d does not reach output %d; gradient is zero\n",
                     w.id, out.id);
        grads.push_back(constant(Array<T>::zeros(shape(w))));
      }
    }
    return grads;
  }
  std::vector<Var> gradient_vars(Var out, std::initializer_list<Var> wrt) {
    return gradient_vars(out, std::span<const Var>(wrt.begin(), wrt.size()));
  }

  // Plain numeric gradients; backward nodes are dropped afterwards.
  std::vector<Array<T>> gradient(Var out, std::span<const Var> wrt) {
    const size_t mark = nodes_.size();
    std::vector<Var> gv = gradient_vars(out, wrt);
    std::vector<Array<T>> res;
    res.reserve(gv.size());
    for (Var g : gv) res.push_back(value(g));
    truncate(mark);
    return res;
  }
  std::vector<Array<T>> gradient(Var out, std::initializer_list<Var> wrt) {
    return gradient(out, std::span<const Var>(wrt.begin(), wrt.size()));
  }

  std::int64_t unreachable_wrt_events() const { return unreachable_wrt_; }

  // ---- replay -----------------------------------------------------------------

  // Recompute every node in order with new values bound to the given inputs.
  void replay(std::span<const std::pair<Var, Array<T>>> bindings) {
    std::unordered_map<std::int32_t, const Array<T>*> bound;
    for (const auto& [v, a] : bindings) {
      require(v.valid() && v.id < static_cast<std::int32_t>(nodes_.size()), "replay: bad var");
      require(node(v.id).op == Op::Input, "replay: can only rebind inputs");
      if (!same_shape(a.shape(), node(v.id).value.shape()))
        fail("replay: shape mismatch for node ", std::to_string(v.id));
      bound[v.id] = &a;
    }
    for (std::int32_t id = 0; id < static_cast<std::int32_t>(nodes_.size()); ++id) {
      Node& n = nodes_[id];
      if (n.op == Op::Input) {
        auto it = bound.find(id);
        if (it != bound.end()) n.value = *it->second;
        continue;
      }
      if (n.op == Op::Const) continue;
      n.value = eval(n.op, n.attrs, n.parents);
      check_value(n.value, id, n.op);
    }
  }

  // Plain-text edge list for debugging.
  std::string dump_edges() const {
    std::ostringstream os;
    for (size_t i = 0; i < nodes_.size(); ++i) {
      os << i << " " << op_name(nodes_[i].op) << " " << shape_str(nodes_[i].value.shape());
      if (!nodes_[i].name.empty()) os << " \"" << nodes_[i].name << "\"";
      for (auto p : nodes_[i].parents) os << " <- " << p;
      os << "\n";
    }
    return os.str();
  }

 private:
  struct Node {
    Op op;
    std::vector<std::int32_t> parents;
    OpAttrs attrs;
    Array<T> value;
    std::string name;
  };

  Options opts_;
  std::vector<Node> nodes_;
  std::int64_t clamp_events_ = 0;
  std::int64_t unreachable_wrt_ = 0;

  const Node& node(std::int32_t id) const {
    require(id >= 0 && id < static_cast<std::int32_t>(nodes_.size()), "bad node id");
    return nodes_[static_cast<size_t>(id)];
  }

  Var push(Op op, std::vector<std::int32_t> parents, OpAttrs attrs, Array<T> precomputed = {},
           std::string name = {}) {
    Node n{op, std::move(parents), std::move(attrs), std::move(precomputed), std::move(name)};
    if (n.value.empty()) n.value = eval(n.op, n.attrs, n.parents);
    const auto id = static_cast<std::int32_t>(nodes_.size());
    check_value(n.value, id, n.op);
    nodes_.push_back(std::move(n));
    return Var{id};
  }

  void check_value(const Array<T>& v, std::int32_t id, Op op) const {
    if (opts_.check_finite && !v.finite())
      throw NumericError("non-finite value at node " + std::to_string(id) + " (" + op_name(op) +
                         ")");
  }

  Var binary(Op op, Var a, Var b) {
    if (!same_shape(shape(a), shape(b)))
      fail(op_name(op), ": shape mismatch ", shape_str(shape(a)), " vs ", shape_str(shape(b)),
           " (nodes ", std::to_string(a.id), ", ", std::to_string(b.id), ")");
    return push(op, {a.id, b.id}, {});
  }

  Var matmul_any(Op op, Var a, Var b) {
    const Shape& as = shape(a);
    const Shape& bs = shape(b);
    bool ok = as.size() == 2 && bs.size() == 2;
    if (ok) {
      if (op == Op::MatmulNN) ok = as[1] == bs[0];
      if (op == Op::MatmulTN) ok = as[0] == bs[0];
      if (op == Op::MatmulNT) ok = as[1] == bs[1];
    }
    if (!ok)
      fail(op_name(op), ": shape mismatch ", shape_str(as), " vs ", shape_str(bs), " (nodes ",
           std::to_string(a.id), ", ", std::to_string(b.id), ")");
    return push(op, {a.id, b.id}, {});
  }

  static void check_broadcastable(const Shape& small, const Shape& big, const char* what) {
    if (small.size() > big.size()) fail(what, ": rank grows ", shape_str(small), " vs ", shape_str(big));
    const size_t off = big.size() - small.size();
    for (size_t i = 0; i < small.size(); ++i)
      if (small[i] != 1 && small[i] != big[off + i])
        fail(what, ": incompatible ", shape_str(small), " -> ", shape_str(big));
  }

  // ---- forward evaluation ----------------------------------------------------

  Array<T> eval(Op op, const OpAttrs& at, const std::vector<std::int32_t>& ps) {
    switch (op) {
      case Op::Input:
      case Op::Const:
        fail("eval on leaf");
      case Op::Add:
        return zip(ps, [](T a, T b) { return a + b; });
      case Op::Sub:
        return zip(ps, [](T a, T b) { return a - b; });
      case Op::Mul:
        return zip(ps, [](T a, T b) { return a * b; });
      case Op::Div:
        return zip(ps, [](T a, T b) { return a / b; });
      case Op::Affine: {
        const T a = static_cast<T>(at.a), b = static_cast<T>(at.b);
        return map(ps, [a, b](T x) { return a * x + b; });
      }
      case Op::LeakyRelu: {
        const T s = static_cast<T>(at.a);
        return map(ps, [s](T x) { return x > T(0) ? x : s * x; });
      }
      case Op::LeakyReluMask: {
        const T s = static_cast<T>(at.a);
        return map(ps, [s](T x) { return x > T(0) ? T(1) : s; });
      }
      case Op::Sigmoid:
        return map(ps, [](T x) { return T(1) / (T(1) + std::exp(-x)); });
      case Op::Abs:
        return map(ps, [](T x) { return std::abs(x); });
      case Op::Sign:
        return map(ps, [](T x) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
      case Op::Square:
        return map(ps, [](T x) { return x * x; });
      case Op::Sqrt:
        return map(ps, [](T x) { return std::sqrt(x); });
      case Op::MatmulNN:
      case Op::MatmulTN:
      case Op::MatmulNT:
        return eval_matmul(op, ps);
      case Op::Sum: {
        const Array<T>& x = val(ps[0]);
        return Array<T>::scalar(kern::reduce_sum(x.ptr(), x.size()));
      }
      case Op::Mean: {
        const Array<T>& x = val(ps[0]);
        return Array<T>::scalar(kern::reduce_sum(x.ptr(), x.size()) /
                                static_cast<T>(x.size()));
      }
      case Op::SumTo:
        return eval_sum_to(val(ps[0]), at.sh);
      case Op::Broadcast:
        return eval_broadcast(val(ps[0]), at.sh);
      case Op::Reshape:
        return val(ps[0]).reshaped(at.sh);
      case Op::Concat:
        return eval_concat(ps, at.i0);
      case Op::Slice:
        return eval_slice(val(ps[0]), at.i0, at.i1, at.i2);
      case Op::Im2col2d:
      case Op::Col2im2d:
      case Op::Im2col3d:
      case Op::Col2im3d:
        return eval_cols(op, at, ps);
      case Op::BilinearGather:
      case Op::BilinearScatter:
      case Op::TrilinearGather:
      case Op::TrilinearScatter:
        return eval_interp(op, at, ps);
    }
    fail("unhandled op");
  }

  const Array<T>& val(std::int32_t id) const { return nodes_[static_cast<size_t>(id)].value; }

  template <class F>
  Array<T> map(const std::vector<std::int32_t>& ps, F f) {
    const Array<T>& x = val(ps[0]);
    std::vector<T> out(static_cast<size_t>(x.size()));
    const T* p = x.ptr();
    for (size_t i = 0; i < out.size(); ++i) out[i] = f(p[i]);
    return Array<T>(x.shape(), std::move(out));
  }

  template <class F>
  Array<T> zip(const std::vector<std::int32_t>& ps, F f) {
    const Array<T>& a = val(ps[0]);
    const Array<T>& b = val(ps[1]);
    std::vector<T> out(static_cast<size_t>(a.size()));
    const T* pa = a.ptr();
    const T* pb = b.ptr();
    for (size_t i = 0; i < out.size(); ++i) out[i] = f(pa[i], pb[i]);
    return Array<T>(a.shape(), std::move(out));
  }

  Array<T> eval_matmul(Op op, const std::vector<std::int32_t>& ps) {
    const Array<T>& a = val(ps[0]);
    const Array<T>& b = val(ps[1]);
    const auto& as = a.shape();
    const auto& bs = b.shape();
    std::int64_t m, k, n;
    if (op == Op::MatmulNN) {
      m = as[0], k = as[1], n = bs[1];
    } else if (op == Op::MatmulTN) {
      m = as[1], k = as[0], n = bs[1];
    } else {
      m = as[0], k = as[1], n = bs[0];
    }
    std::vector<T> out(static_cast<size_t>(m * n));
    if (op == Op::MatmulNN) kern::gemm_nn(a.ptr(), b.ptr(), out.data(), m, k, n);
    if (op == Op::MatmulTN) kern::gemm_tn(a.ptr(), b.ptr(), out.data(), k, m, n);
    if (op == Op::MatmulNT) kern::gemm_nt(a.ptr(), b.ptr(), out.data(), m, k, n);
    return Array<T>({static_cast<int>(m), static_cast<int>(n)}, std::move(out));
  }

  Array<T> eval_sum_to(const Array<T>& x, const Shape& target) {
    const Shape& xs = x.shape();
    const size_t off = xs.size() - target.size();
    // odometer walk over x in row-major order; fixed accumulation order
    std::vector<std::int64_t> ostride(xs.size(), 0);
    std::int64_t acc = 1;
    for (size_t i = target.size(); i-- > 0;) {
      ostride[off + i] = (target[i] == 1) ? 0 : acc;
      acc *= target[i];
    }
    std::vector<T> out(static_cast<size_t>(numel(target)), T(0));
    std::vector<std::int64_t> idx(xs.size(), 0);
    const T* p = x.ptr();
    std::int64_t oi = 0;
    for (std::int64_t i = 0; i < x.size(); ++i) {
      out[static_cast<size_t>(oi)] += p[i];
      for (size_t d = xs.size(); d-- > 0;) {
        idx[d]++;
        oi += ostride[d];
        if (idx[d] < xs[d]) break;
        oi -= ostride[d] * xs[d];
        idx[d] = 0;
        if (d == 0) break;
      }
    }
    return Array<T>(target, std::move(out));
  }

  Array<T> eval_broadcast(const Array<T>& x, const Shape& target) {
    const Shape& xs = x.shape();
    const size_t off = target.size() - xs.size();
    std::vector<std::int64_t> sstride(target.size(), 0);
    std::int64_t acc = 1;
    for (size_t i = xs.size(); i-- > 0;) {
      sstride[off + i] = (xs[i] == 1) ? 0 : acc;
      acc *= xs[i];
    }
    std::vector<T> out(static_cast<size_t>(numel(target)));
    std::vector<std::int64_t> idx(target.size(), 0);
    const T* p = x.ptr();
    std::int64_t si = 0;
    for (size_t i = 0; i < out.size(); ++i) {
      out[i] = p[si];
      for (size_t d = target.size(); d-- > 0;) {
        idx[d]++;
        si += sstride[d];
        if (idx[d] < target[d]) break;
        si -= sstride[d] * target[d];
        idx[d] = 0;
        if (d == 0) break;
      }
    }
    return Array<T>(target, std::move(out));
  }

  Array<T> eval_concat(const std::vector<std::int32_t>& ps, int axis) {
    const Shape& first = val(ps[0]).shape();
    require(axis >= 0 && axis < static_cast<int>(first.size()), "concat: bad axis");
    Shape out_shape = first;
    std::int64_t axis_total = 0;
    for (auto id : ps) {
      const Shape& s = val(id).shape();
      if (s.size() != first.size()) fail("concat: rank mismatch");
      for (size_t d = 0; d < s.size(); ++d)
        if (d != static_cast<size_t>(axis) && s[d] != first[d])
          fail("concat: shape mismatch ", shape_str(s), " vs ", shape_str(first), " (node ",
               std::to_string(id), ")");
      axis_total += s[axis];
    }
    out_shape[axis] = static_cast<int>(axis_total);
    std::int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= first[d];
    for (size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
    std::vector<T> out(static_cast<size_t>(numel(out_shape)));
    const std::int64_t out_row = axis_total * inner;
    std::int64_t offset = 0;
    for (auto id : ps) {
      const Array<T>& x = val(id);
      const std::int64_t rows = x.shape()[axis] * inner;
      const T* p = x.ptr();
      for (std::int64_t o = 0; o < outer; ++o)
        std::copy(p + o * rows, p + (o + 1) * rows, out.data() + o * out_row + offset);
      offset += rows;
    }
    return Array<T>(out_shape, std::move(out));
  }

  Array<T> eval_slice(const Array<T>& x, int axis, int start, int len) {
    const Shape& xs = x.shape();
    Shape out_shape = xs;
    out_shape[axis] = len;
    std::int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= xs[d];
    for (size_t d = axis + 1; d < xs.size(); ++d) inner *= xs[d];
    std::vector<T> out(static_cast<size_t>(numel(out_shape)));
    const T* p = x.ptr();
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy(p + (o * xs[axis] + start) * inner, p + (o * xs[axis] + start + len) * inner,
                out.data() + o * len * inner);
    return Array<T>(out_shape, std::move(out));
  }

  Array<T> eval_cols(Op op, const OpAttrs& at, const std::vector<std::int32_t>& ps) {
    const Array<T>& x = val(ps[0]);
    const Shape& xs = (op == Op::Col2im2d || op == Op::Col2im3d) ? at.sh : x.shape();
    if (op == Op::Im2col2d || op == Op::Col2im2d) {
      const std::int64_t b = xs[0], h = xs[1], w = xs[2], c = xs[3];
      const std::int64_t oh = kern::conv_out_extent(h, at.i0, at.i2, at.i3);
      const std::int64_t ow = kern::conv_out_extent(w, at.i1, at.i2, at.i3);
      if (op == Op::Im2col2d) {
        std::vector<T> out(static_cast<size_t>(b * oh * ow * at.i0 * at.i1 * c));
        kern::im2col2d(x.ptr(), out.data(), b, h, w, c, at.i0, at.i1, at.i2, at.i3);
        return Array<T>({static_cast<int>(b * oh * ow), static_cast<int>(at.i0 * at.i1 * c)},
                        std::move(out));
      }
      std::vector<T> out(static_cast<size_t>(numel(xs)));
      kern::col2im2d(x.ptr(), out.data(), b, h, w, c, at.i0, at.i1, at.i2, at.i3);
      return Array<T>(xs, std::move(out));
    }
    // 3D: im2col keeps kernel extents in sh; col2im keeps image shape in sh
    // and kernel extents in sh2
    const Shape& ker = (op == Op::Im2col3d) ? at.sh : at.sh2;
    const std::int64_t b = xs[0], d = xs[1], h = xs[2], w = xs[3], c = xs[4];
    const std::int64_t k0 = ker[0], k1 = ker[1], k2 = ker[2];
    if (op == Op::Im2col3d) {
      const std::int64_t od = kern::conv_out_extent(d, k0, at.i2, at.i3);
      const std::int64_t oh = kern::conv_out_extent(h, k1, at.i2, at.i3);
      const std::int64_t ow = kern::conv_out_extent(w, k2, at.i2, at.i3);
      std::vector<T> out(static_cast<size_t>(b * od * oh * ow * k0 * k1 * k2 * c));
      kern::im2col3d(x.ptr(), out.data(), b, d, h, w, c, k0, k1, k2, at.i2, at.i3);
      return Array<T>({static_cast<int>(b * od * oh * ow), static_cast<int>(k0 * k1 * k2 * c)},
                      std::move(out));
    }
    std::vector<T> out(static_cast<size_t>(numel(xs)));
    kern::col2im3d(x.ptr(), out.data(), b, d, h, w, c, k0, k1, k2, at.i2, at.i3);
    return Array<T>(xs, std::move(out));
  }

  Array<T> eval_interp(Op op, const OpAttrs& at, const std::vector<std::int32_t>& ps) {
    const Array<T>& a = val(ps[0]);
    const Array<T>& pts = val(ps[1]);
    const std::int64_t np = pts.shape()[0];
    if (op == Op::BilinearGather) {
      const auto& gs = a.shape();
      std::vector<T> out(static_cast<size_t>(np * gs[2]));
      kern::bilinear_gather(a.ptr(), pts.ptr(), out.data(), gs[0], gs[1], gs[2], np,
                            &clamp_events_);
      return Array<T>({static_cast<int>(np), gs[2]}, std::move(out));
    }
    if (op == Op::BilinearScatter) {
      const Shape& gs = at.sh;
      std::vector<T> out(static_cast<size_t>(numel(gs)));
      kern::bilinear_scatter(a.ptr(), pts.ptr(), out.data(), gs[0], gs[1], gs[2], np,
                             &clamp_events_);
      return Array<T>(gs, std::move(out));
    }
    if (op == Op::TrilinearGather) {
      const auto& gs = a.shape();
      std::vector<T> out(static_cast<size_t>(np * gs[3]));
      kern::trilinear_gather(a.ptr(), pts.ptr(), out.data(), gs[0], gs[1], gs[2], gs[3], np,
                             &clamp_events_);
      return Array<T>({static_cast<int>(np), gs[3]}, std::move(out));
    }
    const Shape& gs = at.sh;
    std::vector<T> out(static_cast<size_t>(numel(gs)));
    kern::trilinear_scatter(a.ptr(), pts.ptr(), out.data(), gs[0], gs[1], gs[2], gs[3], np,
                            &clamp_events_);
    return Array<T>(gs, std::move(out));
  }

  // ---- reverse rules ----------------------------------------------------------
  // Each rule appends ordinary tape nodes, so the backward pass is itself
  // differentiable. Ops whose true derivative is piecewise-constant (masks,
  // sign) contribute zero second derivative by definition.

  void accumulate(std::vector<std::int32_t>& adj, std::int32_t parent, Var g) {
    if (adj[parent] < 0)
      adj[parent] = g.id;
    else
      adj[parent] = add(Var{adj[parent]}, g).id;
  }

  void emit_vjp(std::int32_t id, Var g, std::vector<std::int32_t>& adj) {
    // copies: pushes below may reallocate nodes_
    const Op op = nodes_[static_cast<size_t>(id)].op;
    const std::vector<std::int32_t> ps = nodes_[static_cast<size_t>(id)].parents;
    const OpAttrs attrs = nodes_[static_cast<size_t>(id)].attrs;
    switch (op) {
      case Op::Input:
      case Op::Const:
      case Op::LeakyReluMask:
      case Op::Sign:
        return;
      case Op::Add:
        accumulate(adj, ps[0], g);
        accumulate(adj, ps[1], g);
        return;
      case Op::Sub:
        accumulate(adj, ps[0], g);
        accumulate(adj, ps[1], neg(g));
        return;
      case Op::Mul:
        accumulate(adj, ps[0], mul(g, Var{ps[1]}));
        accumulate(adj, ps[1], mul(g, Var{ps[0]}));
        return;
      case Op::Div: {
        Var b{ps[1]};
        accumulate(adj, ps[0], div(g, b));
        accumulate(adj, ps[1], neg(div(mul(g, Var{ps[0]}), mul(b, b))));
        return;
      }
      case Op::Affine:
        accumulate(adj, ps[0], scale(g, attrs.a));
        return;
      case Op::MatmulNN:
        accumulate(adj, ps[0], matmul_nt(g, Var{ps[1]}));
        accumulate(adj, ps[1], matmul_tn(Var{ps[0]}, g));
        return;
      case Op::MatmulTN:
        accumulate(adj, ps[0], matmul_nt(Var{ps[1]}, g));
        accumulate(adj, ps[1], matmul(Var{ps[0]}, g));
        return;
      case Op::MatmulNT:
        accumulate(adj, ps[0], matmul(g, Var{ps[1]}));
        accumulate(adj, ps[1], matmul_tn(g, Var{ps[0]}));
        return;
      case Op::LeakyRelu: {
        OpAttrs at;
        at.a = attrs.a;
        Var mask = push(Op::LeakyReluMask, {ps[0]}, at);
        accumulate(adj, ps[0], mul(g, mask));
        return;
      }
      case Op::Sigmoid: {
        Var y{id};
        accumulate(adj, ps[0], mul(g, mul(y, affine(y, -1.0, 1.0))));
        return;
      }
      case Op::Abs: {
        Var sgn = push(Op::Sign, {ps[0]}, {});
        accumulate(adj, ps[0], mul(g, sgn));
        return;
      }
      case Op::Square:
        accumulate(adj, ps[0], mul(g, affine(Var{ps[0]}, 2.0, 0.0)));
        return;
      case Op::Sqrt:
        accumulate(adj, ps[0], scale(div(g, Var{id}), 0.5));
        return;
      case Op::Sum:
        accumulate(adj, ps[0], broadcast(g, val(ps[0]).shape()));
        return;
      case Op::Mean:
        accumulate(adj, ps[0],
                   broadcast(scale(g, 1.0 / static_cast<double>(val(ps[0]).size())),
                             val(ps[0]).shape()));
        return;
      case Op::SumTo:
        accumulate(adj, ps[0], broadcast(g, val(ps[0]).shape()));
        return;
      case Op::Broadcast:
        accumulate(adj, ps[0], sum_to(g, val(ps[0]).shape()));
        return;
      case Op::Reshape:
        accumulate(adj, ps[0], reshape(g, val(ps[0]).shape()));
        return;
      case Op::Concat: {
        int offset = 0;
        for (auto pid : ps) {
          const int len = val(pid).shape()[attrs.i0];
          accumulate(adj, pid, slice(g, attrs.i0, offset, len));
          offset += len;
        }
        return;
      }
      case Op::Slice: {
        // pad g back to the parent extent with zero blocks
        const Shape xs = val(ps[0]).shape();
        const int axis = attrs.i0, start = attrs.i1, len = attrs.i2;
        std::vector<Var> parts;
        if (start > 0) {
          Shape s = xs;
          s[axis] = start;
          parts.push_back(constant(Array<T>::zeros(s)));
        }
        parts.push_back(g);
        if (start + len < xs[axis]) {
          Shape s = xs;
          s[axis] = xs[axis] - start - len;
          parts.push_back(constant(Array<T>::zeros(s)));
        }
        accumulate(adj, ps[0],
                   parts.size() == 1 ? parts[0] : concat(std::span<const Var>(parts), axis));
        return;
      }
      case Op::Im2col2d: {
        OpAttrs at = attrs;
        at.sh = val(ps[0]).shape();
        accumulate(adj, ps[0], push(Op::Col2im2d, {g.id}, at));
        return;
      }
      case Op::Col2im2d: {
        OpAttrs at = attrs;
        at.sh.clear();
        accumulate(adj, ps[0], push(Op::Im2col2d, {g.id}, at));
        return;
      }
      case Op::Im2col3d: {
        OpAttrs at = attrs;
        at.sh2 = attrs.sh;
        at.sh = val(ps[0]).shape();
        accumulate(adj, ps[0], push(Op::Col2im3d, {g.id}, at));
        return;
      }
      case Op::Col2im3d: {
        OpAttrs at = attrs;
        at.sh = attrs.sh2;
        at.sh2.clear();
        accumulate(adj, ps[0], push(Op::Im2col3d, {g.id}, at));
        return;
      }
      case Op::BilinearGather: {
        OpAttrs at;
        at.sh = val(ps[0]).shape();
        accumulate(adj, ps[0], push(Op::BilinearScatter, {g.id, ps[1]}, at));
        return;
      }
      case Op::BilinearScatter:
        accumulate(adj, ps[0], push(Op::BilinearGather, {g.id, ps[1]}, {}));
        return;
      case Op::TrilinearGather: {
        OpAttrs at;
        at.sh = val(ps[0]).shape();
        accumulate(adj, ps[0], push(Op::TrilinearScatter, {g.id, ps[1]}, at));
        return;
      }
      case Op::TrilinearScatter:
        accumulate(adj, ps[0], push(Op::TrilinearGather, {g.id, ps[1]}, {}));
        return;
    }
  }
};

}  // namespace occtrans
