#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "regionblend/checkpoint.hpp"
#include "regionblend/config.hpp"
#include "regionblend/fixtures.hpp"
#include "regionblend/image_io.hpp"
#include "regionblend/pipeline.hpp"

namespace rb = regionblend;

namespace {

// Flag values are collected as config-key overrides so that flags always win
// over the config file.
struct CommonOpts {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  rb::RunConfig build() const {
    rb::RunConfig cfg;
    if (!config_path.empty()) rb::apply_config(cfg, rb::parse_config_file(config_path));
    rb::apply_config(cfg, overrides);
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "run config file (key = value lines)");
  for (const char* key :
       {"seed", "schedule.t_train", "schedule.beta_start", "schedule.beta_end", "schedule.steps",
        "solver", "blend.alpha", "blend.beta", "blend.gamma", "blend.tau_a", "blend.tau_b",
        "blend.layers", "blend.literal_alg2", "copy_mask", "prompt.null", "denoiser.seed",
        "denoiser.checkpoint", "manifest.timing"}) {
    std::string flag = "--" + std::string(key);
    for (auto& c : flag)
      if (c == '.') c = '-';
    cmd->add_option_function<std::string>(
        flag, [&opts, key](const std::string& v) { opts.overrides[key] = v; }, key);
  }
}

rb::CollageSpec parse_box(const std::string& s) {
  rb::CollageSpec b;
  if (std::sscanf(s.c_str(), "%d,%d,%d,%d", &b.x, &b.y, &b.w, &b.h) != 4)
    throw rb::ConfigError("bad --box value (expected X,Y,W,H): " + s);
  return b;
}

rb::Denoiser make_model(const rb::RunConfig& cfg) {
  rb::DenoiserConfig dc;
  dc.seed = cfg.denoiser_seed;
  rb::Denoiser model(dc);
  if (!cfg.denoiser_checkpoint.empty()) rb::load_checkpoint(model, cfg.denoiser_checkpoint);
  return model;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

int run(int argc, char** argv) {
  CLI::App app{"regionblend: text-and-image-guided region customization on a toy diffusion model"};
  app.require_subcommand(1);

  CommonOpts opts;

  // customize
  auto* cust = app.add_subcommand("customize", "edit target regions of a scene");
  std::string scene_path, prompt, out_path = "out.png";
  std::vector<std::string> ref_paths, ref_mask_paths, box_strs;
  cust->add_option("--scene", scene_path, "scene image")->required();
  cust->add_option("--ref", ref_paths, "reference image (repeat for multi-region)")->required();
  cust->add_option("--ref-mask", ref_mask_paths, "reference subject mask")->required();
  cust->add_option("--box", box_strs, "target box X,Y,W,H")->required();
  cust->add_option("--prompt", prompt, "target prompt tokens");
  cust->add_option("--out", out_path, "output image path");
  add_common(cust, opts);

  // reconstruct
  auto* recon = app.add_subcommand("reconstruct", "invert and re-denoise an image");
  std::string image_path, recon_out = "recon.png";
  recon->add_option("--image", image_path, "input image")->required();
  recon->add_option("--out", recon_out, "output image path");
  add_common(recon, opts);

  // invert
  auto* inv = app.add_subcommand("invert", "map an image to its terminal noise latent");
  std::string inv_image, inv_out = "latent.rbck", inv_prompt;
  inv->add_option("--image", inv_image, "input image")->required();
  inv->add_option("--prompt", inv_prompt, "prompt tokens (empty = null prompt)");
  inv->add_option("--out", inv_out, "latent output path");
  add_common(inv, opts);

  // eval
  auto* ev = app.add_subcommand("eval", "compare two images (MAE/SSIM/PSNR)");
  std::string eval_a, eval_b, eval_out;
  ev->add_option("--a", eval_a, "first image")->required();
  ev->add_option("--b", eval_b, "second image")->required();
  ev->add_option("--out", eval_out, "optional report file");

  // gen-fixtures
  auto* gen = app.add_subcommand("gen-fixtures", "write the synthetic fixture set");
  std::string fix_dir = "fixtures";
  uint64_t fix_seed = 0;
  gen->add_option("--out", fix_dir, "output directory");
  gen->add_option("--seed", fix_seed, "fixture seed");

  // train-toy
  auto* train = app.add_subcommand("train-toy", "train the toy denoiser on synthetic shapes");
  std::string train_out = "denoiser.rbck";
  int train_iters = 200, train_batch = 8;
  train->add_option("--out", train_out, "checkpoint output path");
  train->add_option("--iters", train_iters, "training iterations");
  train->add_option("--batch", train_batch, "batch size");
  add_common(train, opts);

  CLI11_PARSE(app, argc, argv);

  if (cust->parsed()) {
    rb::RunConfig cfg = opts.build();
    if (!prompt.empty()) cfg.prompt_target = prompt;
    if (ref_paths.size() != ref_mask_paths.size() || ref_paths.size() != box_strs.size())
      throw rb::ConfigError("--ref, --ref-mask and --box must repeat together");

    rb::ImageBuffer scene = rb::load_image(scene_path);
    std::vector<rb::ImageBuffer> refs;
    std::vector<rb::Mask> masks;
    std::vector<rb::CollageSpec> boxes;
    for (size_t i = 0; i < ref_paths.size(); ++i) {
      refs.push_back(rb::load_image(ref_paths[i]));
      masks.push_back(rb::load_mask(ref_mask_paths[i]));
      boxes.push_back(parse_box(box_strs[i]));
    }

    rb::Denoiser model = make_model(cfg);
    rb::CustomizeResult result = rb::customize(scene, refs, masks, boxes, cfg, model);
    rb::save_image(result.image, out_path);
    rb::write_manifest(out_path + ".manifest", cfg,
                       {{"command", "customize"}, {"output", out_path}}, result.timings);
    std::cout << "wrote " << out_path << "\n";
  } else if (recon->parsed()) {
    rb::RunConfig cfg = opts.build();
    rb::ImageBuffer image = rb::load_image(image_path);
    rb::Denoiser model = make_model(cfg);
    rb::ReconstructResult result = rb::reconstruct(image, cfg, model);
    rb::save_image(result.image, recon_out);
    rb::write_manifest(recon_out + ".manifest", cfg,
                       {{"command", "reconstruct"},
                        {"mae", fmt(result.metrics.mae)},
                        {"ssim", fmt(result.metrics.ssim)},
                        {"psnr", fmt(result.metrics.psnr)}},
                       {});
    std::cout << "mae = " << fmt(result.metrics.mae) << "  ssim = " << fmt(result.metrics.ssim)
              << "  psnr = " << fmt(result.metrics.psnr) << "\n";
  } else if (inv->parsed()) {
    rb::RunConfig cfg = opts.build();
    rb::ImageBuffer image = rb::load_image(inv_image);
    rb::Denoiser model = make_model(cfg);
    rb::Prompt p = rb::Prompt::parse(inv_prompt, model.config().vocab_size);
    rb::Tensor z = rb::invert_image(image, p, cfg, model);
    rb::save_latent(z, inv_out);
    std::cout << "wrote " << inv_out << "\n";
  } else if (ev->parsed()) {
    rb::ImageBuffer a = rb::load_image(eval_a);
    rb::ImageBuffer b = rb::load_image(eval_b);
    rb::MetricReport m = rb::compare(a, b);
    std::string report = "mae = " + fmt(m.mae) + "\nssim = " + fmt(m.ssim) +
                         "\npsnr = " + fmt(m.psnr) + "\n";
    std::cout << report;
    if (!eval_out.empty()) {
      std::ofstream out(eval_out);
      out << report;
    }
  } else if (gen->parsed()) {
    auto files = rb::gen_fixtures(fix_seed, fix_dir);
    std::cout << "wrote " << files.size() << " files to " << fix_dir << "\n";
  } else if (train->parsed()) {
    rb::RunConfig cfg = opts.build();
    rb::Denoiser model = make_model(cfg);
    rb::NoiseSchedule sched = cfg.make_noise_schedule();

    std::vector<rb::TrainSample> dataset;
    auto scenes = rb::make_recon_fixtures(cfg.seed);
    for (size_t i = 0; i < scenes.size(); ++i) {
      rb::TrainSample s;
      s.image = scenes[i].to_latent();
      s.prompt = rb::Prompt::parse(std::to_string(i * 7 % 256), model.config().vocab_size);
      dataset.push_back(std::move(s));
    }
    rb::TrainReport report =
        rb::train_toy(model, dataset, sched, train_iters, train_batch, cfg.seed);
    rb::save_checkpoint(model, train_out);
    std::cout << "loss " << fmt(report.initial_loss) << " -> " << fmt(report.final_loss)
              << ", wrote " << train_out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const rb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const rb::NumericError& e) {
    std::cerr << "numerical failure in step '" << e.step << "': " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
