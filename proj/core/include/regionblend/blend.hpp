#pragma once

#include <string>
#include <vector>

#include "regionblend/denoiser.hpp"
#include "regionblend/solver.hpp"
#include "regionblend/tensor.hpp"

namespace regionblend {

enum class CopyMaskMode { Region, Gap };

enum class BlendBranch { Window, High, Identity };

// Weights and thresholds of the three-branch feature blend:
//   t in the (tau_a*T, tau_b*T] window  -> alpha*f_e + beta*f_p + gamma*f_n
//   t above the window                  -> (f_e + f_p) / 2
//   otherwise                           -> f_e
// t counts down from T during denoising, so the high branch covers the early
// denoising phase. literal_alg2=false swaps the high and identity branches.
struct BlendConfig {
  double alpha = 0.25, beta = 0.5, gamma = 0.25;
  double tau_a = 0.5, tau_b = 0.8;
  std::vector<std::string> layers;  // empty = all decoder self-attention layers
  bool literal_alg2 = true;
  CopyMaskMode copy_mask = CopyMaskMode::Region;

  void validate() const;
};

BlendBranch blend_branch(double t, double t_max, const BlendConfig& cfg);

Tensor blend(const Tensor& f_e, const Tensor& f_p, const Tensor& f_n, double t, double t_max,
             const BlendConfig& cfg);

// Blends the recorded per-layer features of the three streams.
std::map<std::string, Tensor> blend_taps(const FeatureTapRecord& taps_e,
                                         const FeatureTapRecord& taps_p,
                                         const FeatureTapRecord& taps_n, double t, double t_max,
                                         const BlendConfig& cfg,
                                         const std::vector<std::string>& layers);

// One denoiser forward with the blended features overriding the selected
// decoder layers, followed by one solver step to t_next.
Tensor run_injected_step(const Tensor& z_e, int t, int t_next, const Prompt& prompt_tg,
                         const std::map<std::string, Tensor>& blended,
                         const std::vector<std::string>& layers, const Denoiser& model,
                         SolverKind kind, SolverState& state, const NoiseSchedule& sched);

}  // namespace regionblend
