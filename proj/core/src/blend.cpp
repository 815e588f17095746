#include "regionblend/blend.hpp"

#include <cmath>

namespace regionblend {

void BlendConfig::validate() const {
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
    throw ConfigError("blend: weights must be nonnegative");
  if (std::fabs(alpha + beta + gamma - 1.0) > 1e-9)
    throw ConfigError("blend: alpha + beta + gamma must equal 1");
  if (!(tau_a >= 0.0 && tau_a < tau_b && tau_b <= 1.0))
    throw ConfigError("blend: need 0 <= tau_a < tau_b <= 1");
}

BlendBranch blend_branch(double t, double t_max, const BlendConfig& cfg) {
  // t = tau_b*T ties into the window branch, t = tau_a*T into the identity
  // branch.
  BlendBranch b;
  if (t > cfg.tau_b * t_max)
    b = BlendBranch::High;
  else if (t > cfg.tau_a * t_max)
    b = BlendBranch::Window;
  else
    b = BlendBranch::Identity;
  if (!cfg.literal_alg2) {
    if (b == BlendBranch::High)
      b = BlendBranch::Identity;
    else if (b == BlendBranch::Identity)
      b = BlendBranch::High;
  }
  return b;
}

Tensor blend(const Tensor& f_e, const Tensor& f_p, const Tensor& f_n, double t, double t_max,
             const BlendConfig& cfg) {
  cfg.validate();
  f_e.require_same_shape(f_p, "blend: f_e vs f_p");
  f_e.require_same_shape(f_n, "blend: f_e vs f_n");

  switch (blend_branch(t, t_max, cfg)) {
    case BlendBranch::High: {
      Tensor out = zeros_like(f_e);
      for (size_t i = 0; i < out.size(); ++i) out.v[i] = 0.5f * (f_e.v[i] + f_p.v[i]);
      return out;
    }
    case BlendBranch::Window: {
      Tensor out = zeros_like(f_e);
      const float a = float(cfg.alpha), b = float(cfg.beta), g = float(cfg.gamma);
      for (size_t i = 0; i < out.size(); ++i)
        out.v[i] = a * f_e.v[i] + b * f_p.v[i] + g * f_n.v[i];
      return out;
    }
    case BlendBranch::Identity:
    default:
      return f_e;
  }
}

std::map<std::string, Tensor> blend_taps(const FeatureTapRecord& taps_e,
                                         const FeatureTapRecord& taps_p,
                                         const FeatureTapRecord& taps_n, double t, double t_max,
                                         const BlendConfig& cfg,
                                         const std::vector<std::string>& layers) {
  std::map<std::string, Tensor> out;
  for (const auto& layer : layers) {
    auto e = taps_e.features.find(layer);
    auto p = taps_p.features.find(layer);
    auto n = taps_n.features.find(layer);
    if (e == taps_e.features.end() || p == taps_p.features.end() || n == taps_n.features.end())
      throw ConfigError("blend: missing recorded feature for layer " + layer);
    out[layer] = blend(e->second, p->second, n->second, t, t_max, cfg);
  }
  return out;
}

Tensor run_injected_step(const Tensor& z_e, int t, int t_next, const Prompt& prompt_tg,
                         const std::map<std::string, Tensor>& blended,
                         const std::vector<std::string>& layers, const Denoiser& model,
                         SolverKind kind, SolverState& state, const NoiseSchedule& sched) {
  TapPlan plan;
  plan.mode = TapMode::Override;
  plan.layers = layers;
  plan.features = blended;
  Tensor eps = model.forward(z_e, t, prompt_tg, plan, nullptr);

  if (kind == SolverKind::DDIM) return ddim_step(z_e, eps, t, t_next, sched);

  const double a_t = sched.alpha(t), s_t = sched.sigma(t);
  Tensor x_pred = zeros_like(z_e);
  const float cz = float(1.0 / a_t), ce = float(-s_t / a_t);
  for (size_t i = 0; i < z_e.size(); ++i) x_pred.v[i] = cz * z_e.v[i] + ce * eps.v[i];
  return dpmpp_2m_step(z_e, x_pred, state, t, t_next, sched);
}

}  // namespace regionblend
