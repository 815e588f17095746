#pragma once

#include <string>
#include <vector>

#include "regionblend/region.hpp"

namespace regionblend {

// Deterministic synthetic inputs used by the acceptance suite and demos.
struct CustomizeFixture {
  std::string name;
  ImageBuffer scene;
  std::vector<ImageBuffer> refs;
  std::vector<Mask> ref_masks;
  std::vector<CollageSpec> boxes;
  std::string prompt;
};

// 20 seeded 32x32 scenes: gradients, checkerboards, discs, squares.
std::vector<ImageBuffer> make_recon_fixtures(uint64_t seed);

// 4 customize fixtures; the last one has two disjoint regions with two
// reference subjects.
std::vector<CustomizeFixture> make_customize_fixtures(uint64_t seed);

// Writes all fixtures plus prompts and a manifest listing every emitted file.
// Returns the emitted file names (relative to out_dir).
std::vector<std::string> gen_fixtures(uint64_t seed, const std::string& out_dir);

}  // namespace regionblend
