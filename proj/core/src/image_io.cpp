#include "regionblend/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace regionblend {

namespace {

float byte_to_real(uint8_t b) { return float(b) / 255.0f * 2.0f - 1.0f; }

uint8_t real_to_byte(float x) {
  const float t = (std::clamp(x, -1.0f, 1.0f) + 1.0f) / 2.0f * 255.0f;
  return uint8_t(std::lround(t));
}

bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

// Reads an 8-bit PNG into interleaved RGB rows. Gray is expanded, alpha
// stripped; 16-bit depth is rejected.
std::vector<std::vector<uint8_t>> read_png_rows(const std::string& path, int& w, int& h) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  w = int(png_get_image_width(png, info));
  h = int(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported bit depth (16) in " + path);
  }
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<std::vector<uint8_t>> rows(h, std::vector<uint8_t>(size_t(w) * 3));
  std::vector<png_bytep> ptrs(h);
  for (int y = 0; y < h; ++y) ptrs[y] = rows[y].data();
  png_read_image(png, ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return rows;
}

void write_png_rows(const std::string& path, const std::vector<std::vector<uint8_t>>& rows, int w,
                    int h, bool gray) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, gray ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> ptrs(h);
  for (int y = 0; y < h; ++y) ptrs[y] = const_cast<png_bytep>(rows[y].data());
  png_write_image(png, ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageBuffer load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string magic;
  int w, h, maxval;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6") throw IoError("not a binary PPM: " + path);
  if (maxval != 255) throw IoError("unsupported bit depth in " + path);
  in.get();  // single whitespace after header
  std::vector<uint8_t> buf(size_t(w) * h * 3);
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  if (!in) throw IoError("truncated PPM: " + path);

  ImageBuffer img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) = byte_to_real(buf[(size_t(y) * w + x) * 3 + c]);
  return img;
}

void save_ppm(const ImageBuffer& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "P6\n" << img.w << ' ' << img.h << "\n255\n";
  std::vector<uint8_t> buf(size_t(img.w) * img.h * 3);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c)
        buf[(size_t(y) * img.w + x) * 3 + c] = real_to_byte(img.at(c, y, x));
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

ImageBuffer load_image(const std::string& path) {
  if (has_suffix(path, ".ppm")) return load_ppm(path);
  int w, h;
  auto rows = read_png_rows(path, w, h);
  ImageBuffer img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = byte_to_real(rows[y][size_t(x) * 3 + c]);
  return img;
}

void save_image(const ImageBuffer& img, const std::string& path) {
  if (has_suffix(path, ".ppm")) {
    save_ppm(img, path);
    return;
  }
  std::vector<std::vector<uint8_t>> rows(img.h, std::vector<uint8_t>(size_t(img.w) * 3));
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c) rows[y][size_t(x) * 3 + c] = real_to_byte(img.at(c, y, x));
  write_png_rows(path, rows, img.w, img.h, false);
}

Mask load_mask(const std::string& path) {
  ImageBuffer img = load_image(path);
  Mask m(img.h, img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      const uint8_t b = real_to_byte(img.at(0, y, x));
      m.at(y, x) = b >= 128 ? 1 : 0;
    }
  return m;
}

void save_mask(const Mask& m, const std::string& path) {
  std::vector<std::vector<uint8_t>> rows(m.h, std::vector<uint8_t>(size_t(m.w)));
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) rows[y][x] = m.at(y, x) ? 255 : 0;
  write_png_rows(path, rows, m.w, m.h, true);
}

}  // namespace regionblend
