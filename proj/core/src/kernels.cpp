#include "regionblend/kernels.hpp"

#include <cmath>
#include <cstring>

namespace regionblend::kern {

void matmul(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(float) * size_t(m) * n);
  for (int i = 0; i < m; ++i) {
    const float* __restrict ai = a + size_t(i) * k;
    float* __restrict ci = c + size_t(i) * n;
    for (int p = 0; p < k; ++p) {
      const float av = ai[p];
      const float* __restrict bp = b + size_t(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_bt(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
  // Transpose b up front so the inner loop streams contiguous rows.
  std::vector<float> bt(size_t(k) * n);
  for (int j = 0; j < n; ++j)
    for (int p = 0; p < k; ++p) bt[size_t(p) * n + j] = b[size_t(j) * k + p];
  matmul(a, bt.data(), c, m, k, n, accumulate);
}

void matmul_at(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(float) * size_t(k) * n);
  for (int i = 0; i < m; ++i) {
    const float* __restrict ai = a + size_t(i) * k;
    const float* __restrict bi = b + size_t(i) * n;
    for (int p = 0; p < k; ++p) {
      const float av = ai[p];
      float* __restrict cp = c + size_t(p) * n;
      for (int j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

void softmax_rows(float* x, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    float* xi = x + size_t(i) * cols;
    float mx = xi[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, xi[j]);
    float sum = 0.0f;
    for (int j = 0; j < cols; ++j) {
      xi[j] = std::exp(xi[j] - mx);
      sum += xi[j];
    }
    const float inv = 1.0f / sum;
    for (int j = 0; j < cols; ++j) xi[j] *= inv;
  }
}

namespace {

// Lowers one image of x into a (ic*kh*kw, oh*ow) patch matrix so the
// convolution itself runs as a single long-row matmul.
void im2col(const Tensor& x, int in, int kh, int kw, int stride, int pad, int oh, int ow,
            std::vector<float>& col) {
  col.resize(size_t(x.c) * kh * kw * oh * ow);
  float* __restrict dst = col.data();
  for (int i = 0; i < x.c; ++i) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= x.h) {
            std::memset(dst, 0, sizeof(float) * ow);
            dst += ow;
            continue;
          }
          const float* __restrict xrow = &x.at(in, i, iy, 0);
          if (stride == 1) {
            const int x0 = std::max(0, pad - kx);
            const int x1 = std::min(ow, x.w + pad - kx);
            const int off = kx - pad;
            for (int ox = 0; ox < x0; ++ox) dst[ox] = 0.0f;
            for (int ox = x0; ox < x1; ++ox) dst[ox] = xrow[ox + off];
            for (int ox = x1; ox < ow; ++ox) dst[ox] = 0.0f;
          } else {
            std::memset(dst, 0, sizeof(float) * ow);
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride + kx - pad;
              if (ix >= 0 && ix < x.w) dst[ox] = xrow[ix];
            }
          }
          dst += ow;
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const std::vector<float>& b, int stride, int pad) {
  const int oc = w.n, ic = w.c, kh = w.h, kw = w.w;
  if (x.c != ic) throw ShapeError("conv2d: channel mismatch");
  const int oh = (x.h + 2 * pad - kh) / stride + 1;
  const int ow = (x.w + 2 * pad - kw) / stride + 1;
  Tensor y(x.n, oc, oh, ow);

  const int k = ic * kh * kw;
  const int span = oh * ow;
  std::vector<float> col;
  for (int in = 0; in < x.n; ++in) {
    im2col(x, in, kh, kw, stride, pad, oh, ow, col);
    float* ybase = &y.at(in, 0, 0, 0);
    for (int o = 0; o < oc; ++o) {
      float* __restrict yrow = ybase + size_t(o) * span;
      for (int s = 0; s < span; ++s) yrow[s] = b[o];
    }
    matmul(&w.at(0, 0, 0, 0), col.data(), ybase, oc, k, span, /*accumulate=*/true);
  }
  return y;
}

void conv2d_backward(const Tensor& x, const Tensor& w, int stride, int pad, const Tensor& gy,
                     Tensor& gx, Tensor& gw, std::vector<float>& gb) {
  const int oc = w.n, ic = w.c, kh = w.h, kw = w.w;
  const int oh = gy.h, ow = gy.w;
  if (!gx.same_shape(x)) gx = zeros_like(x);
  if (!gw.same_shape(w)) gw = zeros_like(w);
  if (gb.size() != size_t(oc)) gb.assign(oc, 0.0f);

  for (int in = 0; in < x.n; ++in) {
    for (int o = 0; o < oc; ++o) {
      for (int oy = 0; oy < oh; ++oy) {
        const float* grow = &gy.at(in, o, oy, 0);
        for (int ox = 0; ox < ow; ++ox) gb[o] += grow[ox];
      }
      for (int i = 0; i < ic; ++i) {
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            float acc = 0.0f;
            const float wv = w.at(o, i, ky, kx);
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= x.h) continue;
              const float* xrow = &x.at(in, i, iy, 0);
              float* gxrow = &gx.at(in, i, iy, 0);
              const float* grow = &gy.at(in, o, oy, 0);
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= x.w) continue;
                acc += grow[ox] * xrow[ix];
                gxrow[ix] += grow[ox] * wv;
              }
            }
            gw.at(o, i, ky, kx) += acc;
          }
        }
      }
    }
  }
}

Tensor group_norm(const Tensor& x, int groups, const std::vector<float>& gamma,
                  const std::vector<float>& beta, GroupNormCache* cache) {
  if (x.c % groups != 0) throw ShapeError("group_norm: channels not divisible by groups");
  const int cpg = x.c / groups;
  const int spatial = x.h * x.w;
  const double eps = 1e-5;
  Tensor y = zeros_like(x);
  if (cache) {
    cache->mean.assign(size_t(x.n) * groups, 0.0f);
    cache->inv_std.assign(size_t(x.n) * groups, 0.0f);
  }

  for (int in = 0; in < x.n; ++in) {
    for (int g = 0; g < groups; ++g) {
      double sum = 0.0, sq = 0.0;
      for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
        const float* row = &x.at(in, c, 0, 0);
        for (int s = 0; s < spatial; ++s) {
          sum += row[s];
          sq += double(row[s]) * row[s];
        }
      }
      const double count = double(cpg) * spatial;
      const double mean = sum / count;
      const double var = sq / count - mean * mean;
      const double inv_std = 1.0 / std::sqrt(var + eps);
      if (cache) {
        cache->mean[size_t(in) * groups + g] = float(mean);
        cache->inv_std[size_t(in) * groups + g] = float(inv_std);
      }
      for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
        const float gm = gamma[c], bt = beta[c];
        const float* row = &x.at(in, c, 0, 0);
        float* out = &y.at(in, c, 0, 0);
        const float mu = float(mean), is = float(inv_std);
        for (int s = 0; s < spatial; ++s) out[s] = gm * (row[s] - mu) * is + bt;
      }
    }
  }
  return y;
}

void group_norm_backward(const Tensor& x, int groups, const std::vector<float>& gamma,
                         const GroupNormCache& cache, const Tensor& gy, Tensor& gx,
                         std::vector<float>& ggamma, std::vector<float>& gbeta) {
  const int cpg = x.c / groups;
  const int spatial = x.h * x.w;
  if (!gx.same_shape(x)) gx = zeros_like(x);
  if (ggamma.size() != size_t(x.c)) ggamma.assign(x.c, 0.0f);
  if (gbeta.size() != size_t(x.c)) gbeta.assign(x.c, 0.0f);

  for (int in = 0; in < x.n; ++in) {
    for (int g = 0; g < groups; ++g) {
      const float mu = cache.mean[size_t(in) * groups + g];
      const float is = cache.inv_std[size_t(in) * groups + g];
      const double count = double(cpg) * spatial;

      // d/dxhat and the two reduction terms of the normalization gradient.
      double sum_gxh = 0.0, sum_gxh_xh = 0.0;
      for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
        const float* xrow = &x.at(in, c, 0, 0);
        const float* grow = &gy.at(in, c, 0, 0);
        for (int s = 0; s < spatial; ++s) {
          const double xh = (xrow[s] - mu) * is;
          const double gxh = double(grow[s]) * gamma[c];
          sum_gxh += gxh;
          sum_gxh_xh += gxh * xh;
          ggamma[c] += float(grow[s] * xh);
          gbeta[c] += grow[s];
        }
      }
      for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
        const float* xrow = &x.at(in, c, 0, 0);
        const float* grow = &gy.at(in, c, 0, 0);
        float* gxrow = &gx.at(in, c, 0, 0);
        for (int s = 0; s < spatial; ++s) {
          const double xh = (xrow[s] - mu) * is;
          const double gxh = double(grow[s]) * gamma[c];
          gxrow[s] += float(is * (gxh - sum_gxh / count - xh * sum_gxh_xh / count));
        }
      }
    }
  }
}

Tensor silu(const Tensor& x) {
  Tensor y = zeros_like(x);
  for (size_t i = 0; i < x.size(); ++i) {
    const float s = 1.0f / (1.0f + std::exp(-x.v[i]));
    y.v[i] = x.v[i] * s;
  }
  return y;
}

void silu_backward(const Tensor& x, const Tensor& gy, Tensor& gx) {
  if (!gx.same_shape(x)) gx = zeros_like(x);
  for (size_t i = 0; i < x.size(); ++i) {
    const float s = 1.0f / (1.0f + std::exp(-x.v[i]));
    gx.v[i] += gy.v[i] * s * (1.0f + x.v[i] * (1.0f - s));
  }
}

Tensor upsample2(const Tensor& x) {
  Tensor y(x.n, x.c, x.h * 2, x.w * 2);
  for (int in = 0; in < x.n; ++in)
    for (int c = 0; c < x.c; ++c)
      for (int iy = 0; iy < y.h; ++iy) {
        const float* src = &x.at(in, c, iy / 2, 0);
        float* dst = &y.at(in, c, iy, 0);
        for (int ix = 0; ix < y.w; ++ix) dst[ix] = src[ix / 2];
      }
  return y;
}

void upsample2_backward(const Tensor& gy, Tensor& gx) {
  if (gx.size() == 0) gx = Tensor(gy.n, gy.c, gy.h / 2, gy.w / 2);
  for (int in = 0; in < gy.n; ++in)
    for (int c = 0; c < gy.c; ++c)
      for (int iy = 0; iy < gy.h; ++iy) {
        const float* src = &gy.at(in, c, iy, 0);
        float* dst = &gx.at(in, c, iy / 2, 0);
        for (int ix = 0; ix < gy.w; ++ix) dst[ix / 2] += src[ix];
      }
  return;
}

}  // namespace regionblend::kern
