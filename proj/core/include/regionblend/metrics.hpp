#pragma once

#include "regionblend/region.hpp"

namespace regionblend {

struct MetricReport {
  double mae = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;
};

// Mean absolute difference on the [0, 1] scale (inputs are in [-1, 1]).
double mae(const ImageBuffer& a, const ImageBuffer& b);

// Single-scale SSIM, 8x8 sliding windows, k1=0.01, k2=0.03, dynamic range 1,
// averaged over channels.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

// PSNR on the [0, 1] scale; +infinity for identical images.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

MetricReport compare(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace regionblend
