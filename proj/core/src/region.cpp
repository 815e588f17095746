#include "regionblend/region.hpp"

#include <algorithm>
#include <cmath>

#include "regionblend/rng.hpp"

namespace regionblend {

Tensor ImageBuffer::to_latent() const {
  Tensor z(1, 3, h, w);
  z.v = v;
  return z;
}

ImageBuffer ImageBuffer::from_latent(const Tensor& z, bool clamp) {
  if (z.n != 1 || z.c != 3) throw ShapeError("from_latent: expected (1, 3, h, w)");
  ImageBuffer img(z.h, z.w);
  img.v = z.v;
  if (clamp)
    for (auto& x : img.v) x = std::clamp(x, -1.0f, 1.0f);
  return img;
}

size_t Mask::count() const {
  size_t n = 0;
  for (uint8_t x : v) n += x;
  return n;
}

void MaskSet::validate() const {
  auto check = [](const Mask& r, const Mask& s, const Mask& m) {
    if (r.h != s.h || r.w != s.w || r.h != m.h || r.w != m.w)
      throw ShapeError("mask set: resolution mismatch");
    for (size_t i = 0; i < r.v.size(); ++i) {
      if (r.v[i] > 1 || s.v[i] > 1 || m.v[i] > 1) throw ShapeError("mask set: non-binary mask");
      if (s.v[i] && !r.v[i]) throw ShapeError("mask set: subject escapes region");
      if (m.v[i] != (r.v[i] && !s.v[i] ? 1 : 0)) throw ShapeError("mask set: gap != region \\ subject");
    }
  };
  check(region, subject, gap);
  check(region_lat, subject_lat, gap_lat);
}

Mask downsample_mask(const Mask& m, int factor) {
  if (factor <= 1) return m;
  Mask out(m.h / factor, m.w / factor);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      int sum = 0;
      for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx) sum += m.at(y * factor + dy, x * factor + dx);
      out.at(y, x) = sum * 2 >= factor * factor ? 1 : 0;
    }
  return out;
}

namespace {

struct BBox {
  int x0, y0, x1, y1;  // inclusive
};

BBox tight_bbox(const Mask& m) {
  BBox b{m.w, m.h, -1, -1};
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x)
      if (m.at(y, x)) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
      }
  if (b.x1 < 0) throw ConfigError("collage: empty subject mask");
  return b;
}

void paste_subject(ImageBuffer& collage, MaskSet& masks, const ImageBuffer& ref,
                   const Mask& ref_mask, const CollageSpec& spec) {
  if (spec.w < 1 || spec.h < 1) throw ConfigError("collage: degenerate target box");
  if (spec.x < 0 || spec.y < 0 || spec.x + spec.w > collage.w || spec.y + spec.h > collage.h)
    throw ConfigError("collage: target box outside scene bounds");
  if (ref.h != ref_mask.h || ref.w != ref_mask.w)
    throw ShapeError("collage: ref/ref_mask size mismatch");

  const BBox bb = tight_bbox(ref_mask);
  const int bw = bb.x1 - bb.x0 + 1, bh = bb.y1 - bb.y0 + 1;
  const double scale = std::min(double(spec.w) / bw, double(spec.h) / bh);
  const int pw = std::max(1, int(std::floor(bw * scale)));
  const int ph = std::max(1, int(std::floor(bh * scale)));
  const int ox = spec.x + (spec.w - pw) / 2;
  const int oy = spec.y + (spec.h - ph) / 2;

  for (int y = spec.y; y < spec.y + spec.h; ++y)
    for (int x = spec.x; x < spec.x + spec.w; ++x) masks.region.at(y, x) = 1;

  for (int y = 0; y < ph; ++y) {
    const int sy = std::min(bb.y1, bb.y0 + int(std::floor((y + 0.5) * bh / double(ph))));
    for (int x = 0; x < pw; ++x) {
      const int sx = std::min(bb.x1, bb.x0 + int(std::floor((x + 0.5) * bw / double(pw))));
      if (!ref_mask.at(sy, sx)) continue;
      masks.subject.at(oy + y, ox + x) = 1;
      for (int c = 0; c < 3; ++c) collage.at(c, oy + y, ox + x) = ref.at(c, sy, sx);
    }
  }
}

}  // namespace

CollageResult make_collage_multi(const ImageBuffer& scene, const std::vector<ImageBuffer>& refs,
                                 const std::vector<Mask>& ref_masks,
                                 const std::vector<CollageSpec>& specs) {
  if (refs.empty() || refs.size() != ref_masks.size() || refs.size() != specs.size())
    throw ConfigError("collage: inconsistent region lists");

  CollageResult r;
  r.collage = scene;
  r.masks.region = Mask(scene.h, scene.w);
  r.masks.subject = Mask(scene.h, scene.w);
  r.masks.gap = Mask(scene.h, scene.w);

  for (size_t i = 0; i < refs.size(); ++i)
    paste_subject(r.collage, r.masks, refs[i], ref_masks[i], specs[i]);

  for (size_t i = 0; i < r.masks.region.v.size(); ++i)
    r.masks.gap.v[i] = (r.masks.region.v[i] && !r.masks.subject.v[i]) ? 1 : 0;

  // Identity codec: latent masks equal image masks.
  r.masks.region_lat = r.masks.region;
  r.masks.subject_lat = r.masks.subject;
  r.masks.gap_lat = r.masks.gap;
  r.masks.validate();
  return r;
}

CollageResult make_collage(const ImageBuffer& scene, const ImageBuffer& ref, const Mask& ref_mask,
                           const CollageSpec& spec) {
  return make_collage_multi(scene, {ref}, {ref_mask}, {spec});
}

Tensor fuse_latent(const Tensor& z, const Mask& gap_mask, uint64_t noise_seed) {
  if (z.h != gap_mask.h || z.w != gap_mask.w) throw ShapeError("fuse_latent: mask shape mismatch");
  Rng rng(noise_seed);
  Tensor eps = zeros_like(z);
  for (auto& x : eps.v) x = float(rng.normal());

  Tensor out = z;
  for (int n = 0; n < z.n; ++n)
    for (int c = 0; c < z.c; ++c)
      for (int y = 0; y < z.h; ++y)
        for (int x = 0; x < z.w; ++x)
          if (gap_mask.at(y, x)) out.at(n, c, y, x) = eps.at(n, c, y, x);
  return out;
}

Tensor step_latent_copy(const Tensor& z_e, const Tensor& z_f, const Mask& copy_mask) {
  z_e.require_same_shape(z_f, "step_latent_copy");
  if (z_e.h != copy_mask.h || z_e.w != copy_mask.w)
    throw ShapeError("step_latent_copy: mask shape mismatch");
  Tensor out = z_e;
  for (int n = 0; n < z_e.n; ++n)
    for (int c = 0; c < z_e.c; ++c)
      for (int y = 0; y < z_e.h; ++y)
        for (int x = 0; x < z_e.w; ++x)
          if (!copy_mask.at(y, x)) out.at(n, c, y, x) = z_f.at(n, c, y, x);
  return out;
}

}  // namespace regionblend
