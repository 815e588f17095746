#include <doctest.h>

#include <cmath>

#include "regionblend/region.hpp"
#include "regionblend/rng.hpp"

using namespace regionblend;

namespace {

ImageBuffer flat_image(int h, int w, float r, float g, float b) {
  ImageBuffer img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(0, y, x) = r;
      img.at(1, y, x) = g;
      img.at(2, y, x) = b;
    }
  return img;
}

Mask full_mask(int h, int w) {
  Mask m(h, w);
  for (auto& v : m.v) v = 1;
  return m;
}

}  // namespace

TEST_CASE("collage: full-box subject at scale 1 pastes pixel-for-pixel") {
  ImageBuffer scene = flat_image(32, 32, -0.5f, 0.0f, 0.5f);
  ImageBuffer ref = flat_image(16, 16, 0.9f, -0.9f, 0.1f);
  Mask ref_mask = full_mask(16, 16);
  CollageSpec box{8, 8, 16, 16};

  CollageResult r = make_collage(scene, ref, ref_mask, box);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const bool inside = x >= 8 && x < 24 && y >= 8 && y < 24;
      CHECK(r.masks.region.at(y, x) == (inside ? 1 : 0));
      CHECK(r.masks.subject.at(y, x) == (inside ? 1 : 0));
      CHECK(r.masks.gap.at(y, x) == 0);  // S = R leaves no gap
      for (int c = 0; c < 3; ++c) {
        const float expect = inside ? ref.at(c, 0, 0) : scene.at(c, y, x);
        CHECK(r.collage.at(c, y, x) == expect);
      }
    }
  r.masks.validate();
}

TEST_CASE("collage: gap count equals region minus subject") {
  ImageBuffer scene = flat_image(32, 32, 0.0f, 0.0f, 0.0f);
  ImageBuffer ref = flat_image(16, 16, 0.5f, 0.5f, 0.5f);
  // Subject covers the left half of the reference.
  Mask ref_mask(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 8; ++x) ref_mask.at(y, x) = 1;

  CollageResult r = make_collage(scene, ref, ref_mask, CollageSpec{8, 8, 16, 16});
  CHECK(r.masks.gap.count() == r.masks.region.count() - r.masks.subject.count());
  r.masks.validate();
}

TEST_CASE("collage: disc subject rasterizes to the independent oracle") {
  ImageBuffer scene = flat_image(32, 32, 0.0f, 0.0f, 0.0f);
  // Disc of radius 6 centered at pixel-center (7.5, 7.5); its tight crop is
  // 12x12, so a 12x12 target box pastes it 1:1 and the subject mask must
  // match a direct point-in-circle test in scene coordinates.
  ImageBuffer ref = flat_image(16, 16, -1.0f, -1.0f, -1.0f);
  Mask ref_mask(16, 16);
  const double radius = 6.0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const double dx = x - 7.5, dy = y - 7.5;
      if (dx * dx + dy * dy <= radius * radius) {
        ref_mask.at(y, x) = 1;
        ref.at(0, y, x) = 0.8f;
      }
    }

  CollageSpec box{10, 10, 12, 12};
  CollageResult r = make_collage(scene, ref, ref_mask, box);
  size_t oracle_count = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const double dx = x - 15.5, dy = y - 15.5;  // disc center after the paste
      const bool in_box = x >= box.x && x < box.x + box.w && y >= box.y && y < box.y + box.h;
      const bool in_disc = in_box && dx * dx + dy * dy <= radius * radius;
      CHECK(r.masks.subject.at(y, x) == (in_disc ? 1 : 0));
      CHECK(r.masks.gap.at(y, x) == ((in_box && !in_disc) ? 1 : 0));
      if (in_disc) ++oracle_count;
    }
  CHECK(r.masks.subject.count() == oracle_count);
  r.masks.validate();
}

TEST_CASE("collage: zero-area box is rejected") {
  ImageBuffer scene = flat_image(32, 32, 0, 0, 0);
  ImageBuffer ref = flat_image(8, 8, 0, 0, 0);
  CHECK_THROWS_AS(make_collage(scene, ref, full_mask(8, 8), CollageSpec{4, 4, 0, 8}), ConfigError);
}

TEST_CASE("mask algebra: validate rejects a subject outside the region") {
  MaskSet ms;
  ms.region = Mask(8, 8);
  ms.subject = Mask(8, 8);
  ms.gap = Mask(8, 8);
  ms.region_lat = ms.region;
  ms.subject_lat = ms.subject;
  ms.gap_lat = ms.gap;
  ms.subject.at(3, 3) = 1;  // S not contained in R
  CHECK_THROWS(ms.validate());
}

TEST_CASE("fuse_latent: mask zero is the identity") {
  Rng rng(31);
  Tensor z(1, 3, 8, 8);
  for (auto& x : z.v) x = float(rng.normal());
  Mask gap(8, 8);
  Tensor out = fuse_latent(z, gap, 5);
  CHECK(out.max_abs_diff(z) == 0.0f);
}

TEST_CASE("fuse_latent: mask one replaces everything with unit noise") {
  Tensor z(1, 3, 32, 32);
  z.fill(9.0f);
  Mask gap = full_mask(32, 32);
  Tensor out = fuse_latent(z, gap, 5);
  double sum = 0.0, sq = 0.0;
  for (float x : out.v) {
    sum += x;
    sq += double(x) * x;
  }
  const double n = double(out.size());
  const double mean = sum / n;
  CHECK(std::fabs(mean) < 0.05);
  CHECK(std::fabs(sq / n - mean * mean - 1.0) < 0.1);
}

TEST_CASE("fuse_latent: a single masked pixel changes only its channels") {
  Rng rng(32);
  Tensor z(1, 3, 8, 8);
  for (auto& x : z.v) x = float(rng.normal());
  Mask gap(8, 8);
  gap.at(2, 5) = 1;
  Tensor out = fuse_latent(z, gap, 6);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        if (y == 2 && x == 5)
          CHECK(out.at(0, c, y, x) != z.at(0, c, y, x));
        else
          CHECK(out.at(0, c, y, x) == z.at(0, c, y, x));
      }
}

TEST_CASE("fuse_latent: seeded draws are reproducible") {
  Tensor z(1, 3, 8, 8);
  Mask gap = full_mask(8, 8);
  Tensor a = fuse_latent(z, gap, 77);
  Tensor b = fuse_latent(z, gap, 77);
  Tensor c = fuse_latent(z, gap, 78);
  CHECK(a.max_abs_diff(b) == 0.0f);
  CHECK(a.max_abs_diff(c) > 0.0f);
}

TEST_CASE("step_latent_copy: pointwise select between the two latents") {
  Rng rng(33);
  Tensor ze(1, 3, 8, 8), zf(1, 3, 8, 8);
  for (auto& x : ze.v) x = float(rng.normal());
  for (auto& x : zf.v) x = float(rng.normal());

  Mask ones = full_mask(8, 8);
  CHECK(step_latent_copy(ze, zf, ones).max_abs_diff(ze) == 0.0f);

  Mask zeros(8, 8);
  CHECK(step_latent_copy(ze, zf, zeros).max_abs_diff(zf) == 0.0f);

  Mask half(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 4; ++x) half.at(y, x) = 1;
  Tensor mixed = step_latent_copy(ze, zf, half);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        CHECK(mixed.at(0, c, y, x) == (x < 4 ? ze : zf).at(0, c, y, x));

  CHECK(step_latent_copy(ze, ze, half).max_abs_diff(ze) == 0.0f);  // idempotent on equal inputs
}

TEST_CASE("downsample_mask: factor 1 copies, factor 2 area-thresholds") {
  Mask m(4, 4);
  m.at(0, 0) = m.at(0, 1) = m.at(1, 0) = 1;  // 3/4 of the top-left block
  m.at(2, 2) = 1;                            // 1/4 of the bottom-right block
  Mask copy = downsample_mask(m, 1);
  CHECK(copy.count() == m.count());
  Mask half = downsample_mask(m, 2);
  CHECK(half.h == 2);
  CHECK(half.at(0, 0) == 1);
  CHECK(half.at(1, 1) == 0);
}

TEST_CASE("identity codec: to_latent and from_latent invert each other") {
  ImageBuffer img = flat_image(8, 8, -0.25f, 0.5f, 1.0f);
  Tensor z = img.to_latent();
  CHECK(z.c == 3);
  CHECK(z.h == 8);
  ImageBuffer back = ImageBuffer::from_latent(z);
  for (size_t i = 0; i < img.v.size(); ++i) CHECK(back.v[i] == img.v[i]);

  // Clamping applies on decode.
  z.v[0] = 4.0f;
  CHECK(ImageBuffer::from_latent(z).v[0] == 1.0f);
}
