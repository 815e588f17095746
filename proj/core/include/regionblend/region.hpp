#pragma once

#include <cstdint>
#include <vector>

#include "regionblend/tensor.hpp"

namespace regionblend {

// RGB image, CHW float storage, values in [-1, 1].
struct ImageBuffer {
  int h = 0, w = 0;
  std::vector<float> v;  // 3 * h * w

  ImageBuffer() = default;
  ImageBuffer(int h_, int w_) : h(h_), w(w_), v(size_t(3) * h_ * w_, 0.0f) {}

  float& at(int c, int y, int x) { return v[(size_t(c) * h + y) * w + x]; }
  const float& at(int c, int y, int x) const { return v[(size_t(c) * h + y) * w + x]; }

  Tensor to_latent() const;  // identity codec: (1, 3, h, w)
  static ImageBuffer from_latent(const Tensor& z, bool clamp = true);
};

struct Mask {
  int h = 0, w = 0;
  std::vector<uint8_t> v;  // 0 or 1

  Mask() = default;
  Mask(int h_, int w_) : h(h_), w(w_), v(size_t(h_) * w_, 0) {}

  uint8_t& at(int y, int x) { return v[size_t(y) * w + x]; }
  uint8_t at(int y, int x) const { return v[size_t(y) * w + x]; }
  size_t count() const;
};

// Editable region R, aligned subject mask S (S subset of R), and the gap
// M = R and-not S, at image resolution and at latent resolution.
struct MaskSet {
  Mask region, subject, gap;              // image resolution
  Mask region_lat, subject_lat, gap_lat;  // latent resolution

  void validate() const;  // throws on any broken mask-algebra invariant
};

// Pixel box within the scene; the reference subject is scaled to fit inside
// it, preserving aspect ratio, and centered.
struct CollageSpec {
  int x = 0, y = 0, w = 0, h = 0;
};

struct CollageResult {
  ImageBuffer collage;
  MaskSet masks;
};

// Pastes the tight crop of ref under ref_mask into the target box of the
// scene (nearest-neighbour resampling) and derives the mask set.
CollageResult make_collage(const ImageBuffer& scene, const ImageBuffer& ref, const Mask& ref_mask,
                           const CollageSpec& spec);

// Multi-region variant: one collage, masks composed by union.
CollageResult make_collage_multi(const ImageBuffer& scene, const std::vector<ImageBuffer>& refs,
                                 const std::vector<Mask>& ref_masks,
                                 const std::vector<CollageSpec>& specs);

// z^e = M * eps + (1 - M) * z with eps ~ N(0, I) drawn from the seeded
// generator; mask broadcast over channels.
Tensor fuse_latent(const Tensor& z, const Mask& gap_mask, uint64_t noise_seed);

// copy_mask * z_e + (1 - copy_mask) * z_f, pointwise.
Tensor step_latent_copy(const Tensor& z_e, const Tensor& z_f, const Mask& copy_mask);

// Area-downsample then threshold at 0.5. factor 1 returns a copy.
Mask downsample_mask(const Mask& m, int factor);

}  // namespace regionblend
