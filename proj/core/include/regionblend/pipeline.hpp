#pragma once

#include <string>
#include <vector>

#include "regionblend/blend.hpp"
#include "regionblend/denoiser.hpp"
#include "regionblend/metrics.hpp"
#include "regionblend/region.hpp"
#include "regionblend/solver.hpp"

namespace regionblend {

struct RegionSpec {
  std::string ref_path, ref_mask_path;
  CollageSpec box;
};

struct RunConfig {
  uint64_t seed = 0;
  int t_train = 1000;
  double beta_start = 1e-4, beta_end = 0.02;
  int steps = 50;
  SolverKind solver = SolverKind::DPMpp2M;
  BlendConfig blend;
  std::string prompt_target;
  std::string prompt_null;  // empty = the null prompt
  uint64_t denoiser_seed = 7;
  std::string denoiser_checkpoint;
  bool manifest_timing = false;

  NoiseSchedule make_noise_schedule() const;
  void validate() const;
};

struct StepTiming {
  int t = 0;
  double millis = 0.0;
};

struct CustomizeResult {
  ImageBuffer image;
  CollageResult collage;
  std::vector<StepTiming> timings;
};

struct ReconstructResult {
  ImageBuffer image;
  MetricReport metrics;  // vs the input image
};

EpsModel eps_model(const Denoiser& model, const Prompt& prompt);

// Full three-stream customization: collage, dual-prompt inversion, gap-noise
// fusion, blended denoising with per-step latent copy, identity decode.
CustomizeResult customize(const ImageBuffer& scene, const std::vector<ImageBuffer>& refs,
                          const std::vector<Mask>& ref_masks,
                          const std::vector<CollageSpec>& boxes, const RunConfig& cfg,
                          const Denoiser& model);

// Null-prompt inversion followed by null-prompt denoising with the same
// solver; reports reconstruction metrics against the input.
ReconstructResult reconstruct(const ImageBuffer& image, const RunConfig& cfg,
                              const Denoiser& model);

Tensor invert_image(const ImageBuffer& image, const Prompt& prompt, const RunConfig& cfg,
                    const Denoiser& model);

// Structured text run manifest written next to the output image. Timing lines
// are emitted only when cfg.manifest_timing is set, so default manifests are
// byte-stable across identical runs.
void write_manifest(const std::string& path, const RunConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& extra,
                    const std::vector<StepTiming>& timings);

}  // namespace regionblend
