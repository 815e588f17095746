#include "regionblend/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "regionblend/config.hpp"

namespace regionblend {

NoiseSchedule RunConfig::make_noise_schedule() const {
  return make_schedule(t_train, beta_start, beta_end, steps);
}

void RunConfig::validate() const {
  blend.validate();
  if (steps < 2) throw ConfigError("config: steps must be >= 2");
  if (t_train < steps) throw ConfigError("config: t_train must be >= steps");
}

EpsModel eps_model(const Denoiser& model, const Prompt& prompt) {
  return [&model, prompt](const Tensor& z, int t) { return model.forward(z, t, prompt); };
}

namespace {

void check_finite(const Tensor& z, const std::string& step) {
  if (z.has_nan()) throw NumericError(step, "NaN/Inf latent");
}

Tensor data_prediction(const Tensor& z, const Tensor& eps, int t, const NoiseSchedule& sched) {
  const double a = sched.alpha(t), s = sched.sigma(t);
  Tensor x = zeros_like(z);
  const float cz = float(1.0 / a), ce = float(-s / a);
  for (size_t i = 0; i < z.size(); ++i) x.v[i] = cz * z.v[i] + ce * eps.v[i];
  return x;
}

Tensor stream_step(const Tensor& z, const Tensor& eps, SolverKind kind, SolverState& state, int t,
                   int t_next, const NoiseSchedule& sched) {
  if (kind == SolverKind::DDIM) return ddim_step(z, eps, t, t_next, sched);
  return dpmpp_2m_step(z, data_prediction(z, eps, t, sched), state, t, t_next, sched);
}

}  // namespace

Tensor invert_image(const ImageBuffer& image, const Prompt& prompt, const RunConfig& cfg,
                    const Denoiser& model) {
  cfg.validate();
  const NoiseSchedule sched = cfg.make_noise_schedule();
  Tensor z = run_trajectory(image.to_latent(), eps_model(model, prompt), sched, cfg.solver,
                            Direction::Invert);
  check_finite(z, "inversion");
  return z;
}

ReconstructResult reconstruct(const ImageBuffer& image, const RunConfig& cfg,
                              const Denoiser& model) {
  cfg.validate();
  const NoiseSchedule sched = cfg.make_noise_schedule();
  const Prompt null_prompt = Prompt::null();

  Tensor z_t = run_trajectory(image.to_latent(), eps_model(model, null_prompt), sched, cfg.solver,
                              Direction::Invert);
  check_finite(z_t, "reconstruct inversion");
  Tensor z_0 = run_trajectory(z_t, eps_model(model, null_prompt), sched, cfg.solver,
                              Direction::Denoise);
  check_finite(z_0, "reconstruct denoising");

  ReconstructResult r;
  r.image = ImageBuffer::from_latent(z_0);
  r.metrics = compare(r.image, image);
  return r;
}

CustomizeResult customize(const ImageBuffer& scene, const std::vector<ImageBuffer>& refs,
                          const std::vector<Mask>& ref_masks,
                          const std::vector<CollageSpec>& boxes, const RunConfig& cfg,
                          const Denoiser& model) {
  cfg.validate();
  const NoiseSchedule sched = cfg.make_noise_schedule();
  const Prompt p_null = Prompt::parse(cfg.prompt_null, model.config().vocab_size);
  const Prompt p_tg = Prompt::parse(cfg.prompt_target, model.config().vocab_size);
  const std::vector<std::string> layers =
      cfg.blend.layers.empty() ? model.decoder_attention_layers() : cfg.blend.layers;

  CustomizeResult result;
  result.collage = make_collage_multi(scene, refs, ref_masks, boxes);
  const Mask& copy_mask = cfg.blend.copy_mask == CopyMaskMode::Region
                              ? result.collage.masks.region_lat
                              : result.collage.masks.gap_lat;

  // Dual-prompt inversion from the same collage latent.
  const Tensor z0_f = result.collage.collage.to_latent();
  Tensor z_f = run_trajectory(z0_f, eps_model(model, p_null), sched, cfg.solver, Direction::Invert);
  check_finite(z_f, "null-prompt inversion");
  Tensor z_p = run_trajectory(z0_f, eps_model(model, p_tg), sched, cfg.solver, Direction::Invert);
  check_finite(z_p, "target-prompt inversion");
  Tensor z_e = fuse_latent(z_f, result.collage.masks.gap_lat, cfg.seed);
  check_finite(z_e, "latent fusion");

  SolverState st_f, st_p, st_e;
  const auto& grid = sched.inference_steps;
  const int n = int(grid.size());
  const double blend_t_max = double(n - 1);

  for (int i = n - 1; i >= 1; --i) {
    const auto wall_start = std::chrono::steady_clock::now();
    const int t = grid[i], t_next = grid[i - 1];
    const std::string step_name = "denoise step t=" + std::to_string(t);

    TapPlan record;
    record.mode = TapMode::Record;
    record.layers = layers;
    FeatureTapRecord taps_n, taps_p, taps_e;
    Tensor eps_n = model.forward(z_f, t, p_null, record, &taps_n);
    Tensor eps_p = model.forward(z_p, t, p_tg, record, &taps_p);
    model.forward(z_e, t, p_tg, record, &taps_e);  // e-stream forward records f_e

    z_f = stream_step(z_f, eps_n, cfg.solver, st_f, t, t_next, sched);
    z_p = stream_step(z_p, eps_p, cfg.solver, st_p, t, t_next, sched);

    auto blended = blend_taps(taps_e, taps_p, taps_n, double(i), blend_t_max, cfg.blend, layers);
    z_e = run_injected_step(z_e, t, t_next, p_tg, blended, layers, model, cfg.solver, st_e, sched);
    z_e = step_latent_copy(z_e, z_f, copy_mask);

    check_finite(z_f, step_name + " (reconstruction stream)");
    check_finite(z_p, step_name + " (text stream)");
    check_finite(z_e, step_name + " (edit stream)");

    const auto wall_end = std::chrono::steady_clock::now();
    result.timings.push_back(
        {t, std::chrono::duration<double, std::milli>(wall_end - wall_start).count()});
  }

  result.image = ImageBuffer::from_latent(z_e);
  return result;
}

void write_manifest(const std::string& path, const RunConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& extra,
                    const std::vector<StepTiming>& timings) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "regionblend run manifest\n";
  out << "[config]\n";
  for (const auto& [k, v] : config_entries(cfg)) out << k << " = " << v << '\n';
  if (!extra.empty()) {
    out << "[result]\n";
    for (const auto& [k, v] : extra) out << k << " = " << v << '\n';
  }
  out << "[metrics.not-computed]\n";
  out << "lpips = requires a pretrained perceptual network\n";
  if (cfg.manifest_timing && !timings.empty()) {
    out << "[timing]\n";
    for (const auto& s : timings) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "step t=%d ms=%.3f", s.t, s.millis);
      out << buf << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace regionblend
