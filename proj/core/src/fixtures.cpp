#include "regionblend/fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "regionblend/image_io.hpp"
#include "regionblend/rng.hpp"

namespace regionblend {

namespace {

constexpr int kSize = 32;

struct Color {
  float r, g, b;
};

Color random_color(Rng& rng) {
  return Color{float(rng.uniform(-1.0, 1.0)), float(rng.uniform(-1.0, 1.0)),
               float(rng.uniform(-1.0, 1.0))};
}

ImageBuffer gradient_image(const Color& a, const Color& b, bool horizontal) {
  ImageBuffer img(kSize, kSize);
  for (int y = 0; y < kSize; ++y)
    for (int x = 0; x < kSize; ++x) {
      const float t = float(horizontal ? x : y) / float(kSize - 1);
      img.at(0, y, x) = a.r + (b.r - a.r) * t;
      img.at(1, y, x) = a.g + (b.g - a.g) * t;
      img.at(2, y, x) = a.b + (b.b - a.b) * t;
    }
  return img;
}

ImageBuffer checkerboard_image(const Color& a, const Color& b, int cell) {
  ImageBuffer img(kSize, kSize);
  for (int y = 0; y < kSize; ++y)
    for (int x = 0; x < kSize; ++x) {
      const bool odd = ((x / cell) + (y / cell)) % 2 != 0;
      const Color& c = odd ? b : a;
      img.at(0, y, x) = c.r;
      img.at(1, y, x) = c.g;
      img.at(2, y, x) = c.b;
    }
  return img;
}

void draw_disc(ImageBuffer& img, Mask* mask, double cx, double cy, double radius, const Color& c) {
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= radius * radius) {
        img.at(0, y, x) = c.r;
        img.at(1, y, x) = c.g;
        img.at(2, y, x) = c.b;
        if (mask) mask->at(y, x) = 1;
      }
    }
}

void draw_square(ImageBuffer& img, Mask* mask, int x0, int y0, int side, const Color& c) {
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) {
      img.at(0, y, x) = c.r;
      img.at(1, y, x) = c.g;
      img.at(2, y, x) = c.b;
      if (mask) mask->at(y, x) = 1;
    }
}

}  // namespace

std::vector<ImageBuffer> make_recon_fixtures(uint64_t seed) {
  Rng rng(seed);
  std::vector<ImageBuffer> out;
  for (int i = 0; i < 20; ++i) {
    const Color a = random_color(rng), b = random_color(rng);
    ImageBuffer img;
    switch (i % 4) {
      case 0:
        img = gradient_image(a, b, i % 8 < 4);
        break;
      case 1:
        img = checkerboard_image(a, b, 2 + (i / 4) % 3 * 2);
        break;
      case 2:
        img = gradient_image(a, b, true);
        draw_disc(img, nullptr, rng.uniform(8, 24), rng.uniform(8, 24), rng.uniform(4, 9),
                  random_color(rng));
        break;
      default:
        img = gradient_image(a, b, false);
        draw_square(img, nullptr, int(rng.below(20)), int(rng.below(20)), 6 + int(rng.below(6)),
                    random_color(rng));
        break;
    }
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<CustomizeFixture> make_customize_fixtures(uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<CustomizeFixture> out;

  // 0: disc subject on a gradient scene
  {
    CustomizeFixture f;
    f.name = "disc";
    f.scene = gradient_image(random_color(rng), random_color(rng), true);
    ImageBuffer ref = checkerboard_image(random_color(rng), random_color(rng), 4);
    Mask ref_mask(kSize, kSize);
    draw_disc(ref, &ref_mask, 16.0, 16.0, 6.0, random_color(rng));
    f.refs.push_back(std::move(ref));
    f.ref_masks.push_back(std::move(ref_mask));
    f.boxes.push_back({8, 8, 16, 16});
    f.prompt = "12 34";
    out.push_back(std::move(f));
  }
  // 1: square subject on a checkerboard scene
  {
    CustomizeFixture f;
    f.name = "square";
    f.scene = checkerboard_image(random_color(rng), random_color(rng), 4);
    ImageBuffer ref = gradient_image(random_color(rng), random_color(rng), false);
    Mask ref_mask(kSize, kSize);
    draw_square(ref, &ref_mask, 10, 10, 12, random_color(rng));
    f.refs.push_back(std::move(ref));
    f.ref_masks.push_back(std::move(ref_mask));
    f.boxes.push_back({4, 12, 14, 14});
    f.prompt = "200";
    out.push_back(std::move(f));
  }
  // 2: small off-center disc, subject fills its box exactly on one axis
  {
    CustomizeFixture f;
    f.name = "offset";
    f.scene = gradient_image(random_color(rng), random_color(rng), false);
    ImageBuffer ref = gradient_image(random_color(rng), random_color(rng), true);
    Mask ref_mask(kSize, kSize);
    draw_disc(ref, &ref_mask, 10.0, 20.0, 5.0, random_color(rng));
    f.refs.push_back(std::move(ref));
    f.ref_masks.push_back(std::move(ref_mask));
    f.boxes.push_back({18, 2, 12, 10});
    f.prompt = "7 7 7";
    out.push_back(std::move(f));
  }
  // 3: two disjoint regions, two reference subjects
  {
    CustomizeFixture f;
    f.name = "multi";
    f.scene = gradient_image(random_color(rng), random_color(rng), true);

    ImageBuffer ref_a = checkerboard_image(random_color(rng), random_color(rng), 2);
    Mask mask_a(kSize, kSize);
    draw_disc(ref_a, &mask_a, 16.0, 16.0, 7.0, random_color(rng));
    f.refs.push_back(std::move(ref_a));
    f.ref_masks.push_back(std::move(mask_a));
    f.boxes.push_back({2, 2, 12, 12});

    ImageBuffer ref_b = gradient_image(random_color(rng), random_color(rng), false);
    Mask mask_b(kSize, kSize);
    draw_square(ref_b, &mask_b, 8, 8, 14, random_color(rng));
    f.refs.push_back(std::move(ref_b));
    f.ref_masks.push_back(std::move(mask_b));
    f.boxes.push_back({18, 18, 12, 12});

    f.prompt = "42 43";
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<std::string> gen_fixtures(uint64_t seed, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create fixture directory: " + out_dir);

  std::vector<std::string> files;
  auto emit_image = [&](const ImageBuffer& img, const std::string& name) {
    save_image(img, out_dir + "/" + name);
    files.push_back(name);
  };
  auto emit_mask = [&](const Mask& m, const std::string& name) {
    save_mask(m, out_dir + "/" + name);
    files.push_back(name);
  };

  const auto recon = make_recon_fixtures(seed);
  for (size_t i = 0; i < recon.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "recon_%02zu.png", i);
    emit_image(recon[i], name);
  }

  const auto custom = make_customize_fixtures(seed);
  std::ofstream boxes(out_dir + "/boxes.txt");
  std::ofstream prompts(out_dir + "/prompts.txt");
  for (const auto& f : custom) {
    emit_image(f.scene, "scene_" + f.name + ".png");
    for (size_t r = 0; r < f.refs.size(); ++r) {
      const std::string sfx = f.refs.size() > 1 ? "_" + std::to_string(r) : "";
      emit_image(f.refs[r], "ref_" + f.name + sfx + ".png");
      emit_mask(f.ref_masks[r], "ref_mask_" + f.name + sfx + ".png");
      boxes << f.name << sfx << ' ' << f.boxes[r].x << ',' << f.boxes[r].y << ',' << f.boxes[r].w
            << ',' << f.boxes[r].h << '\n';
    }
    prompts << f.name << ' ' << f.prompt << '\n';
  }
  boxes.close();
  prompts.close();
  files.push_back("boxes.txt");
  files.push_back("prompts.txt");

  std::ofstream manifest(out_dir + "/fixtures_manifest.txt");
  if (!manifest) throw IoError("cannot write fixture manifest");
  for (const auto& f : files) manifest << f << '\n';
  manifest << "fixtures_manifest.txt\n";
  manifest.close();
  files.push_back("fixtures_manifest.txt");
  return files;
}

}  // namespace regionblend
