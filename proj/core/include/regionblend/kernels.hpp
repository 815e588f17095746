#pragma once

#include <vector>

#include "regionblend/tensor.hpp"

namespace regionblend::kern {

// C[m x n] = A[m x k] * B[k x n], row-major. accumulate=true adds into C.
void matmul(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate = false);

// C[m x n] = A[m x k] * B^T where B is [n x k].
void matmul_bt(const float* a, const float* b, float* c, int m, int k, int n,
               bool accumulate = false);

// C[k x n] += A^T * B with A [m x k], B [m x n]. Used for weight gradients.
void matmul_at(const float* a, const float* b, float* c, int m, int k, int n,
               bool accumulate = true);

// In-place row-wise softmax on a [rows x cols] matrix.
void softmax_rows(float* x, int rows, int cols);

// 3x3 or 1x1 convolution, zero padding, square stride. Weight layout
// (out_c, in_c, kh, kw); bias per output channel.
Tensor conv2d(const Tensor& x, const Tensor& w, const std::vector<float>& b, int stride, int pad);
void conv2d_backward(const Tensor& x, const Tensor& w, int stride, int pad, const Tensor& gy,
                     Tensor& gx, Tensor& gw, std::vector<float>& gb);

// GroupNorm over channel groups; gamma/beta per channel. Caches per-(n,group)
// mean and inverse stddev for the backward pass.
struct GroupNormCache {
  std::vector<float> mean, inv_std;
};
Tensor group_norm(const Tensor& x, int groups, const std::vector<float>& gamma,
                  const std::vector<float>& beta, GroupNormCache* cache = nullptr);
void group_norm_backward(const Tensor& x, int groups, const std::vector<float>& gamma,
                         const GroupNormCache& cache, const Tensor& gy, Tensor& gx,
                         std::vector<float>& ggamma, std::vector<float>& gbeta);

Tensor silu(const Tensor& x);
void silu_backward(const Tensor& x, const Tensor& gy, Tensor& gx);

// Nearest-neighbour 2x upsample.
Tensor upsample2(const Tensor& x);
void upsample2_backward(const Tensor& gy, Tensor& gx);

}  // namespace regionblend::kern
