#pragma once

#include <cmath>
#include <cstdio>

#include "occtrans/array.hpp"

namespace occtrans {

// Adam with bias correction. One slot of first/second moments per parameter
// tensor; a non-finite gradient skips that tensor's update for the step and
// bumps a counter instead of poisoning the moments.
template <class T>
class Adam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  Adam() = default;
  explicit Adam(const std::vector<Array<T>>& params) {
    slots_.reserve(params.size());
    for (const auto& p : params)
      slots_.push_back(Slot{std::vector<T>(static_cast<size_t>(p.size()), T(0)),
                            std::vector<T>(static_cast<size_t>(p.size()), T(0))});
  }

  std::vector<Array<T>> step(const std::vector<Array<T>>& params,
                             const std::vector<Array<T>>& grads, double lr) {
    require(params.size() == slots_.size() && grads.size() == slots_.size(),
            "adam: group count mismatch");
    t_ += 1;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    std::vector<Array<T>> out;
    out.reserve(params.size());
    for (size_t gi = 0; gi < params.size(); ++gi) {
      const Array<T>& p = params[gi];
      const Array<T>& g = grads[gi];
      if (!same_shape(p.shape(), g.shape()))
        fail("adam: group ", std::to_string(gi), " shape mismatch ", shape_str(p.shape()), " vs ",
             shape_str(g.shape()));
      if (!g.finite()) {
        skipped_ += 1;
        std::fprintf(stderr, "warning: non-finite gradient, skipping update of group %zu\n", gi);
        out.push_back(p);
        continue;
      }
      Slot& s = slots_[gi];
      std::vector<T> np(static_cast<size_t>(p.size()));
      const T* pp = p.ptr();
      const T* gp = g.ptr();
      for (size_t i = 0; i < np.size(); ++i) {
        s.m[i] = static_cast<T>(beta1 * s.m[i] + (1.0 - beta1) * gp[i]);
        s.v[i] = static_cast<T>(beta2 * s.v[i] + (1.0 - beta2) * gp[i] * gp[i]);
        const double mh = s.m[i] / c1;
        const double vh = s.v[i] / c2;
        np[i] = static_cast<T>(pp[i] - lr * mh / (std::sqrt(vh) + eps));
      }
      out.push_back(Array<T>(p.shape(), std::move(np)));
    }
    return out;
  }

  std::int64_t timestep() const { return t_; }
  std::int64_t skipped_groups() const { return skipped_; }

  // moments exposed flat for checkpointing
  size_t groups() const { return slots_.size(); }
  const std::vector<T>& moment1(size_t gi) const { return slots_[gi].m; }
  const std::vector<T>& moment2(size_t gi) const { return slots_[gi].v; }
  void restore(size_t gi, std::vector<T> m, std::vector<T> v) {
    require(gi < slots_.size() && m.size() == slots_[gi].m.size() &&
                v.size() == slots_[gi].v.size(),
            "adam: bad restore");
    slots_[gi].m = std::move(m);
    slots_[gi].v = std::move(v);
  }
  void set_timestep(std::int64_t t) { t_ = t; }

 private:
  struct Slot {
    std::vector<T> m, v;
  };
  std::vector<Slot> slots_;
  std::int64_t t_ = 0;
  std::int64_t skipped_ = 0;
};

}  // namespace occtrans
