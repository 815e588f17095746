#include "regionblend/metrics.hpp"

#include <cmath>
#include <limits>

namespace regionblend {

namespace {
void require_same(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (a.h != b.h || a.w != b.w) throw ShapeError(what);
}
double to_unit(float x) { return (double(x) + 1.0) / 2.0; }
}  // namespace

double mae(const ImageBuffer& a, const ImageBuffer& b) {
  require_same(a, b, "mae: shape mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) s += std::fabs(to_unit(a.v[i]) - to_unit(b.v[i]));
  return a.v.empty() ? 0.0 : s / double(a.v.size());
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  require_same(a, b, "ssim: shape mismatch");
  const int win = 8;
  if (a.h < win || a.w < win) throw ShapeError("ssim: image smaller than window");
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;  // k1, k2 with L = 1

  double total = 0.0;
  long windows = 0;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y + win <= a.h; ++y) {
      for (int x = 0; x + win <= a.w; ++x) {
        double ma = 0.0, mb = 0.0;
        for (int dy = 0; dy < win; ++dy)
          for (int dx = 0; dx < win; ++dx) {
            ma += to_unit(a.at(c, y + dy, x + dx));
            mb += to_unit(b.at(c, y + dy, x + dx));
          }
        const double n = win * win;
        ma /= n;
        mb /= n;
        double va = 0.0, vb = 0.0, cov = 0.0;
        for (int dy = 0; dy < win; ++dy)
          for (int dx = 0; dx < win; ++dx) {
            const double da = to_unit(a.at(c, y + dy, x + dx)) - ma;
            const double db = to_unit(b.at(c, y + dy, x + dx)) - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
          }
        va /= n - 1;
        vb /= n - 1;
        cov /= n - 1;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++windows;
      }
    }
  }
  return total / double(windows);
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  require_same(a, b, "psnr: shape mismatch");
  double mse = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    const double d = to_unit(a.v[i]) - to_unit(b.v[i]);
    mse += d * d;
  }
  mse /= double(a.v.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

MetricReport compare(const ImageBuffer& a, const ImageBuffer& b) {
  return MetricReport{mae(a, b), ssim(a, b), psnr(a, b)};
}

}  // namespace regionblend
