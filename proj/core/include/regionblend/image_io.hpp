#pragma once

#include <string>

#include "regionblend/region.hpp"

namespace regionblend {

// 8-bit PNG and binary PPM (P6); RGB channel order; linear [0, 255] <-> [-1, 1].
// Format is chosen by file extension.
ImageBuffer load_image(const std::string& path);
void save_image(const ImageBuffer& img, const std::string& path);

// 8-bit grayscale (or the first channel of RGB); values >= 128 map to 1.
Mask load_mask(const std::string& path);
void save_mask(const Mask& m, const std::string& path);

}  // namespace regionblend
