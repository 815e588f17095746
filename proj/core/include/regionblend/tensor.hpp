#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "regionblend/errors.hpp"

namespace regionblend {

// Rank-4 real array, NCHW layout. Holds latents, feature maps and weights
// (weights reuse the same storage with their own shape conventions).
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<float> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), v(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0f) {}

  size_t size() const { return v.size(); }
  float* data() { return v.data(); }
  const float* data() const { return v.data(); }

  float& at(int in, int ic, int iy, int ix) {
    return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  const float& at(int in, int ic, int iy, int ix) const {
    return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
  }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  void require_same_shape(const Tensor& o, const char* what) const {
    if (!same_shape(o)) throw ShapeError(what);
  }

  void fill(float x) { std::fill(v.begin(), v.end(), x); }

  bool has_nan() const {
    for (float x : v)
      if (std::isnan(x) || std::isinf(x)) return true;
    return false;
  }

  float max_abs_diff(const Tensor& o) const {
    require_same_shape(o, "max_abs_diff");
    float m = 0.0f;
    for (size_t i = 0; i < v.size(); ++i) m = std::max(m, std::fabs(v[i] - o.v[i]));
    return m;
  }

  double mean_abs_diff(const Tensor& o) const {
    require_same_shape(o, "mean_abs_diff");
    double s = 0.0;
    for (size_t i = 0; i < v.size(); ++i) s += std::fabs(double(v[i]) - double(o.v[i]));
    return v.empty() ? 0.0 : s / double(v.size());
  }
};

inline Tensor zeros_like(const Tensor& t) { return Tensor(t.n, t.c, t.h, t.w); }

}  // namespace regionblend
