#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>

#include "occtrans/core.hpp"

// Dense kernels behind the tape ops. All loops use a fixed summation order
// per output element, so results are bit-reproducible for a given build.

namespace occtrans::kern {

using std::int64_t;

// C(M,N) = A(M,K) * B(K,N)
template <class T>
void gemm_nn(const T* __restrict a, const T* __restrict b, T* __restrict c, int64_t m, int64_t k,
             int64_t n) {
  std::fill(c, c + m * n, T(0));
  constexpr int64_t kc = 240;
  for (int64_t k0 = 0; k0 < k; k0 += kc) {
    const int64_t k1 = std::min(k, k0 + kc);
    for (int64_t i = 0; i < m; ++i) {
      const T* __restrict ai = a + i * k;
      T* __restrict ci = c + i * n;
      for (int64_t kk = k0; kk < k1; ++kk) {
        const T av = ai[kk];
        const T* __restrict bk = b + kk * n;
        for (int64_t j = 0; j < n; ++j) ci[j] += av * bk[j];
      }
    }
  }
}

// C(M,N) = A(K,M)^T * B(K,N)
template <class T>
void gemm_tn(const T* __restrict a, const T* __restrict b, T* __restrict c, int64_t k, int64_t m,
             int64_t n) {
  std::fill(c, c + m * n, T(0));
  constexpr int64_t mc = 48;  // C row tile kept hot while streaming A,B
  for (int64_t i0 = 0; i0 < m; i0 += mc) {
    const int64_t i1 = std::min(m, i0 + mc);
    for (int64_t kk = 0; kk < k; ++kk) {
      const T* __restrict ak = a + kk * m;
      const T* __restrict bk = b + kk * n;
      for (int64_t i = i0; i < i1; ++i) {
        const T av = ak[i];
        T* __restrict ci = c + i * n;
        for (int64_t j = 0; j < n; ++j) ci[j] += av * bk[j];
      }
    }
  }
}

// C(M,N) = A(M,K) * B(N,K)^T  (dot products over rows; lane-split accumulators)
template <class T>
void gemm_nt(const T* __restrict a, const T* __restrict b, T* __restrict c, int64_t m, int64_t k,
             int64_t n) {
  constexpr int64_t L = 16;
  for (int64_t i = 0; i < m; ++i) {
    const T* __restrict ai = a + i * k;
    for (int64_t j = 0; j < n; ++j) {
      const T* __restrict bj = b + j * k;
      T lanes[L] = {};
      int64_t kk = 0;
      for (; kk + L <= k; kk += L)
        for (int64_t l = 0; l < L; ++l) lanes[l] += ai[kk + l] * bj[kk + l];
      T tail = T(0);
      for (; kk < k; ++kk) tail += ai[kk] * bj[kk];
      T s = T(0);
      for (int64_t l = 0; l < L; ++l) s += lanes[l];
      c[i * n + j] = s + tail;
    }
  }
}

// Lane-split sum; deterministic fixed order, vectorizes without -ffast-math.
template <class T>
T reduce_sum(const T* __restrict x, int64_t n) {
  constexpr int64_t L = 16;
  T lanes[L] = {};
  int64_t i = 0;
  for (; i + L <= n; i += L)
    for (int64_t l = 0; l < L; ++l) lanes[l] += x[i + l];
  T tail = T(0);
  for (; i < n; ++i) tail += x[i];
  T s = T(0);
  for (int64_t l = 0; l < L; ++l) s += lanes[l];
  return s + tail;
}

// ---- im2col / col2im -------------------------------------------------------
// Layout is channels-last: x is (B,H,W,C); the patch matrix is
// (B*OH*OW, kh*kw*C) with columns ordered (dy, dx, c). Padding is zero-fill.

inline int64_t conv_out_extent(int64_t in, int64_t k, int64_t stride, int64_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

template <class T>
void im2col2d(const T* __restrict x, T* __restrict out, int64_t b, int64_t h, int64_t w, int64_t ch,
              int64_t kh, int64_t kw, int64_t stride, int64_t pad) {
  const int64_t oh = conv_out_extent(h, kh, stride, pad);
  const int64_t ow = conv_out_extent(w, kw, stride, pad);
  const int64_t row_len = kh * kw * ch;
  for (int64_t bi = 0; bi < b; ++bi) {
    const T* xb = x + bi * h * w * ch;
    for (int64_t oy = 0; oy < oh; ++oy) {
      for (int64_t ox = 0; ox < ow; ++ox) {
        T* row = out + ((bi * oh + oy) * ow + ox) * row_len;
        for (int64_t dy = 0; dy < kh; ++dy) {
          const int64_t iy = oy * stride + dy - pad;
          for (int64_t dx = 0; dx < kw; ++dx) {
            const int64_t ix = ox * stride + dx - pad;
            T* dst = row + (dy * kw + dx) * ch;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
              std::fill(dst, dst + ch, T(0));
            } else {
              const T* src = xb + (iy * w + ix) * ch;
              std::copy(src, src + ch, dst);
            }
          }
        }
      }
    }
  }
}

template <class T>
void col2im2d(const T* __restrict cols, T* __restrict x, int64_t b, int64_t h, int64_t w,
              int64_t ch, int64_t kh, int64_t kw, int64_t stride, int64_t pad) {
  const int64_t oh = conv_out_extent(h, kh, stride, pad);
  const int64_t ow = conv_out_extent(w, kw, stride, pad);
  const int64_t row_len = kh * kw * ch;
  std::fill(x, x + b * h * w * ch, T(0));
  for (int64_t bi = 0; bi < b; ++bi) {
    T* xb = x + bi * h * w * ch;
    for (int64_t oy = 0; oy < oh; ++oy) {
      for (int64_t ox = 0; ox < ow; ++ox) {
        const T* row = cols + ((bi * oh + oy) * ow + ox) * row_len;
        for (int64_t dy = 0; dy < kh; ++dy) {
          const int64_t iy = oy * stride + dy - pad;
          if (iy < 0 || iy >= h) continue;
          for (int64_t dx = 0; dx < kw; ++dx) {
            const int64_t ix = ox * stride + dx - pad;
            if (ix < 0 || ix >= w) continue;
            const T* src = row + (dy * kw + dx) * ch;
            T* dst = xb + (iy * w + ix) * ch;
            for (int64_t cc = 0; cc < ch; ++cc) dst[cc] += src[cc];
          }
        }
      }
    }
  }
}

template <class T>
void im2col3d(const T* __restrict x, T* __restrict out, int64_t b, int64_t d, int64_t h, int64_t w,
              int64_t ch, int64_t kd, int64_t kh, int64_t kw, int64_t stride, int64_t pad) {
  const int64_t od = conv_out_extent(d, kd, stride, pad);
  const int64_t oh = conv_out_extent(h, kh, stride, pad);
  const int64_t ow = conv_out_extent(w, kw, stride, pad);
  const int64_t row_len = kd * kh * kw * ch;
  for (int64_t bi = 0; bi < b; ++bi) {
    const T* xb = x + bi * d * h * w * ch;
    for (int64_t oz = 0; oz < od; ++oz)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          T* row = out + (((bi * od + oz) * oh + oy) * ow + ox) * row_len;
          for (int64_t dz = 0; dz < kd; ++dz) {
            const int64_t iz = oz * stride + dz - pad;
            for (int64_t dy = 0; dy < kh; ++dy) {
              const int64_t iy = oy * stride + dy - pad;
              for (int64_t dx = 0; dx < kw; ++dx) {
                const int64_t ix = ox * stride + dx - pad;
                T* dst = row + ((dz * kh + dy) * kw + dx) * ch;
                if (iz < 0 || iz >= d || iy < 0 || iy >= h || ix < 0 || ix >= w) {
                  std::fill(dst, dst + ch, T(0));
                } else {
                  const T* src = xb + ((iz * h + iy) * w + ix) * ch;
                  std::copy(src, src + ch, dst);
                }
              }
            }
          }
        }
  }
}

template <class T>
void col2im3d(const T* __restrict cols, T* __restrict x, int64_t b, int64_t d, int64_t h, int64_t w,
              int64_t ch, int64_t kd, int64_t kh, int64_t kw, int64_t stride, int64_t pad) {
  const int64_t od = conv_out_extent(d, kd, stride, pad);
  const int64_t oh = conv_out_extent(h, kh, stride, pad);
  const int64_t ow = conv_out_extent(w, kw, stride, pad);
  const int64_t row_len = kd * kh * kw * ch;
  std::fill(x, x + b * d * h * w * ch, T(0));
  for (int64_t bi = 0; bi < b; ++bi) {
    T* xb = x + bi * d * h * w * ch;
    for (int64_t oz = 0; oz < od; ++oz)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          const T* row = cols + (((bi * od + oz) * oh + oy) * ow + ox) * row_len;
          for (int64_t dz = 0; dz < kd; ++dz) {
            const int64_t iz = oz * stride + dz - pad;
            if (iz < 0 || iz >= d) continue;
            for (int64_t dy = 0; dy < kh; ++dy) {
              const int64_t iy = oy * stride + dy - pad;
              if (iy < 0 || iy >= h) continue;
              for (int64_t dx = 0; dx < kw; ++dx) {
                const int64_t ix = ox * stride + dx - pad;
                if (ix < 0 || ix >= w) continue;
                const T* src = row + ((dz * kh + dy) * kw + dx) * ch;
                T* dst = xb + ((iz * h + iy) * w + ix) * ch;
                for (int64_t cc = 0; cc < ch; ++cc) dst[cc] += src[cc];
              }
            }
          }
        }
  }
}

// ---- grid interpolation ----------------------------------------------------
// Cell centers of a g-wide axis sit at (i+0.5)/g in [0,1]. Queries between the
// outermost centers and the domain boundary clamp to the edge cell; queries
// outside [0,1] clamp too and bump *clamp_events.

struct AxisWeights {
  int64_t lo;
  double t;  // blend toward lo+1
};

inline AxisWeights axis_weights(double coord, int64_t extent, int64_t* clamp_events) {
  if (coord < 0.0 || coord > 1.0) ++(*clamp_events);
  double u = coord * static_cast<double>(extent) - 0.5;
  if (u < 0.0) u = 0.0;
  const double umax = static_cast<double>(extent - 1);
  if (u > umax) u = umax;
  int64_t lo = static_cast<int64_t>(u);
  if (lo > extent - 2) lo = extent - 2;
  if (extent == 1) return {0, 0.0};
  return {lo, u - static_cast<double>(lo)};
}

// grid (gh,gw,C), pts (P,2) as (x,y) in [0,1]^2 -> out (P,C)
template <class T, class P>
void bilinear_gather(const T* __restrict grid, const P* __restrict pts, T* __restrict out,
                     int64_t gh, int64_t gw, int64_t ch, int64_t np, int64_t* clamp_events) {
  for (int64_t i = 0; i < np; ++i) {
    const auto wx = axis_weights(static_cast<double>(pts[2 * i]), gw, clamp_events);
    const auto wy = axis_weights(static_cast<double>(pts[2 * i + 1]), gh, clamp_events);
    const int64_t x1 = std::min(wx.lo + 1, gw - 1), y1 = std::min(wy.lo + 1, gh - 1);
    const T w00 = static_cast<T>((1 - wy.t) * (1 - wx.t));
    const T w01 = static_cast<T>((1 - wy.t) * wx.t);
    const T w10 = static_cast<T>(wy.t * (1 - wx.t));
    const T w11 = static_cast<T>(wy.t * wx.t);
    const T* g00 = grid + (wy.lo * gw + wx.lo) * ch;
    const T* g01 = grid + (wy.lo * gw + x1) * ch;
    const T* g10 = grid + (y1 * gw + wx.lo) * ch;
    const T* g11 = grid + (y1 * gw + x1) * ch;
    T* o = out + i * ch;
    for (int64_t c = 0; c < ch; ++c) o[c] = w00 * g00[c] + w01 * g01[c] + w10 * g10[c] + w11 * g11[c];
  }
}

template <class T, class P>
void bilinear_scatter(const T* __restrict vals, const P* __restrict pts, T* __restrict grid,
                      int64_t gh, int64_t gw, int64_t ch, int64_t np, int64_t* clamp_events) {
  std::fill(grid, grid + gh * gw * ch, T(0));
  for (int64_t i = 0; i < np; ++i) {
    const auto wx = axis_weights(static_cast<double>(pts[2 * i]), gw, clamp_events);
    const auto wy = axis_weights(static_cast<double>(pts[2 * i + 1]), gh, clamp_events);
    const int64_t x1 = std::min(wx.lo + 1, gw - 1), y1 = std::min(wy.lo + 1, gh - 1);
    const T w[4] = {static_cast<T>((1 - wy.t) * (1 - wx.t)), static_cast<T>((1 - wy.t) * wx.t),
                    static_cast<T>(wy.t * (1 - wx.t)), static_cast<T>(wy.t * wx.t)};
    T* g[4] = {grid + (wy.lo * gw + wx.lo) * ch, grid + (wy.lo * gw + x1) * ch,
               grid + (y1 * gw + wx.lo) * ch, grid + (y1 * gw + x1) * ch};
    const T* v = vals + i * ch;
    for (int64_t q = 0; q < 4; ++q)
      for (int64_t c = 0; c < ch; ++c) g[q][c] += w[q] * v[c];
  }
}

// grid (gd,gh,gw,C), pts (P,3) as (x,y,z) -> out (P,C)
template <class T, class P>
void trilinear_gather(const T* __restrict grid, const P* __restrict pts, T* __restrict out,
                      int64_t gd, int64_t gh, int64_t gw, int64_t ch, int64_t np,
                      int64_t* clamp_events) {
  for (int64_t i = 0; i < np; ++i) {
    const auto wx = axis_weights(static_cast<double>(pts[3 * i]), gw, clamp_events);
    const auto wy = axis_weights(static_cast<double>(pts[3 * i + 1]), gh, clamp_events);
    const auto wz = axis_weights(static_cast<double>(pts[3 * i + 2]), gd, clamp_events);
    const int64_t x1 = std::min(wx.lo + 1, gw - 1), y1 = std::min(wy.lo + 1, gh - 1),
                  z1 = std::min(wz.lo + 1, gd - 1);
    T* o = out + i * ch;
    std::fill(o, o + ch, T(0));
    for (int64_t dz = 0; dz < 2; ++dz) {
      const double fz = dz ? wz.t : 1 - wz.t;
      const int64_t z = dz ? z1 : wz.lo;
      for (int64_t dy = 0; dy < 2; ++dy) {
        const double fy = dy ? wy.t : 1 - wy.t;
        const int64_t y = dy ? y1 : wy.lo;
        for (int64_t dx = 0; dx < 2; ++dx) {
          const T f = static_cast<T>(fz * fy * (dx ? wx.t : 1 - wx.t));
          const T* g = grid + ((z * gh + y) * gw + (dx ? x1 : wx.lo)) * ch;
          for (int64_t c = 0; c < ch; ++c) o[c] += f * g[c];
        }
      }
    }
  }
}

template <class T, class P>
void trilinear_scatter(const T* __restrict vals, const P* __restrict pts, T* __restrict grid,
                       int64_t gd, int64_t gh, int64_t gw, int64_t ch, int64_t np,
                       int64_t* clamp_events) {
  std::fill(grid, grid + gd * gh * gw * ch, T(0));
  for (int64_t i = 0; i < np; ++i) {
    const auto wx = axis_weights(static_cast<double>(pts[3 * i]), gw, clamp_events);
    const auto wy = axis_weights(static_cast<double>(pts[3 * i + 1]), gh, clamp_events);
    const auto wz = axis_weights(static_cast<double>(pts[3 * i + 2]), gd, clamp_events);
    const int64_t x1 = std::min(wx.lo + 1, gw - 1), y1 = std::min(wy.lo + 1, gh - 1),
                  z1 = std::min(wz.lo + 1, gd - 1);
    const T* v = vals + i * ch;
    for (int64_t dz = 0; dz < 2; ++dz) {
      const double fz = dz ? wz.t : 1 - wz.t;
      const int64_t z = dz ? z1 : wz.lo;
      for (int64_t dy = 0; dy < 2; ++dy) {
        const double fy = dy ? wy.t : 1 - wy.t;
        const int64_t y = dy ? y1 : wy.lo;
        for (int64_t dx = 0; dx < 2; ++dx) {
          const T f = static_cast<T>(fz * fy * (dx ? wx.t : 1 - wx.t));
          T* g = grid + ((z * gh + y) * gw + (dx ? x1 : wx.lo)) * ch;
          for (int64_t c = 0; c < ch; ++c) g[c] += f * v[c];
        }
      }
    }
  }
}

}  // namespace occtrans::kern
