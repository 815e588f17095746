#include <doctest.h>

#include <cmath>

#include "regionblend/denoiser.hpp"
#include "regionblend/rng.hpp"
#include "regionblend/schedule.hpp"

using namespace regionblend;

namespace {

Tensor random_latent(int size, uint64_t seed) {
  Rng rng(seed);
  Tensor z(1, 3, size, size);
  for (auto& x : z.v) x = float(0.5 * rng.normal());
  return z;
}

DenoiserConfig small_config() {
  DenoiserConfig cfg;
  cfg.image_size = 16;
  cfg.out_gain = 1.0;  // full-strength output so gradients are well scaled
  return cfg;
}

// Builds a tiny epsilon-prediction batch on the training schedule.
void make_batch(const Denoiser& model, const NoiseSchedule& sched, int count, uint64_t seed,
                std::vector<Tensor>& z_t, std::vector<int>& t, std::vector<Prompt>& prompts,
                std::vector<Tensor>& eps) {
  Rng rng(seed);
  const int size = model.config().image_size;
  for (int i = 0; i < count; ++i) {
    Tensor x0 = random_latent(size, rng.next_u64());
    const int ti = int(rng.below(uint64_t(sched.t_train)));
    const double a = sched.alpha(ti), s = sched.sigma(ti);
    Tensor e(1, 3, size, size);
    for (auto& v : e.v) v = float(rng.normal());
    Tensor z(1, 3, size, size);
    for (size_t j = 0; j < z.size(); ++j) z.v[j] = float(a * x0.v[j] + s * e.v[j]);
    z_t.push_back(std::move(z));
    t.push_back(ti);
    prompts.push_back(i % 2 ? Prompt::parse("7 11", model.config().vocab_size) : Prompt::null());
    eps.push_back(std::move(e));
  }
}

}  // namespace

TEST_CASE("denoiser: forward is deterministic bitwise") {
  Denoiser model(DenoiserConfig{}, 7);
  Tensor z = random_latent(32, 101);
  Tensor a = model.forward(z, 500, Prompt::null());
  Tensor b = model.forward(z, 500, Prompt::null());
  CHECK(a.max_abs_diff(b) == 0.0f);
  CHECK(a.same_shape(z));
}

TEST_CASE("denoiser: seeding fixes and distinguishes the weights") {
  DenoiserConfig cfg;
  Denoiser a(cfg, 7), b(cfg, 7), c(cfg, 8);
  CHECK(a.weight_checksum() == b.weight_checksum());
  CHECK(a.weight_checksum() != c.weight_checksum());
}

TEST_CASE("denoiser: seed-7 default checksum is frozen") {
  Denoiser model(DenoiserConfig{}, 7);
  CHECK(model.weight_checksum() == 2837650923206928798ULL);
}

TEST_CASE("denoiser: prompt conditioning changes the prediction") {
  Denoiser model(DenoiserConfig{}, 7);
  Tensor z = random_latent(32, 102);
  Tensor null_out = model.forward(z, 400, Prompt::null());
  Tensor prompted = model.forward(z, 400, Prompt::parse("red disc", model.config().vocab_size));
  CHECK(null_out.max_abs_diff(prompted) > 0.0f);
}

TEST_CASE("denoiser: timestep conditioning changes the prediction") {
  Denoiser model(DenoiserConfig{}, 7);
  Tensor z = random_latent(32, 103);
  Tensor lo = model.forward(z, 10, Prompt::null());
  Tensor hi = model.forward(z, 900, Prompt::null());
  CHECK(lo.max_abs_diff(hi) > 0.0f);
}

TEST_CASE("prompt parsing: null, numeric, hashed words") {
  CHECK(Prompt::null().is_null());
  CHECK(Prompt::parse("", 256).is_null());
  Prompt num = Prompt::parse("3 260", 256);
  REQUIRE(num.tokens.size() == 2);
  CHECK(num.tokens[0] == 3);
  CHECK(num.tokens[1] == 4);  // 260 mod 256
  Prompt word = Prompt::parse("red disc", 256);
  REQUIRE(word.tokens.size() == 2);
  for (int tok : word.tokens) {
    CHECK(tok >= 0);
    CHECK(tok < 256);
  }
  CHECK(Prompt::parse("red disc", 256).tokens == word.tokens);
}

TEST_CASE("taps: record captures every decoder attention layer") {
  Denoiser model(DenoiserConfig{}, 7);
  const auto layers = model.decoder_attention_layers();
  REQUIRE(layers == std::vector<std::string>{"dec.attn0", "dec.attn1"});

  Tensor z = random_latent(32, 104);
  TapPlan plan;
  plan.mode = TapMode::Record;
  plan.layers = layers;
  FeatureTapRecord rec;
  model.forward(z, 300, Prompt::null(), plan, &rec);
  for (const auto& l : layers) {
    REQUIRE(rec.features.count(l) == 1);
    const Tensor& f = rec.features.at(l);
    CHECK(f.h == 16 * 16);  // tokens at the half resolution
    CHECK(f.w == 64);       // attention width
  }
}

TEST_CASE("taps: overriding with own recorded features is a no-op") {
  Denoiser model(DenoiserConfig{}, 7);
  Tensor z = random_latent(32, 105);
  const auto layers = model.decoder_attention_layers();

  TapPlan record;
  record.mode = TapMode::Record;
  record.layers = layers;
  FeatureTapRecord rec;
  Tensor base = model.forward(z, 300, Prompt::null(), record, &rec);

  TapPlan override_plan;
  override_plan.mode = TapMode::Override;
  override_plan.layers = layers;
  override_plan.features = rec.features;
  Tensor injected = model.forward(z, 300, Prompt::null(), override_plan, nullptr);
  CHECK(injected.max_abs_diff(base) < 1e-6f);
}

TEST_CASE("taps: overriding with perturbed features changes the output") {
  Denoiser model(DenoiserConfig{}, 7);
  Tensor z = random_latent(32, 106);
  const auto layers = model.decoder_attention_layers();

  TapPlan record;
  record.mode = TapMode::Record;
  record.layers = layers;
  FeatureTapRecord rec;
  Tensor base = model.forward(z, 300, Prompt::null(), record, &rec);

  TapPlan plan;
  plan.mode = TapMode::Override;
  plan.layers = layers;
  plan.features = rec.features;
  for (auto& [name, f] : plan.features)
    for (auto& v : f.v) v += 0.25f;
  Tensor injected = model.forward(z, 300, Prompt::null(), plan, nullptr);
  CHECK(injected.max_abs_diff(base) > 0.0f);
}

TEST_CASE("train_toy: zero iterations leave the weights untouched") {
  auto sched = make_schedule(1000, 1e-4, 0.02, 50);
  Denoiser model(small_config(), 7);
  const uint64_t before = model.weight_checksum();
  std::vector<TrainSample> data;
  for (int i = 0; i < 4; ++i)
    data.push_back({random_latent(16, 200 + i), Prompt::null()});
  train_toy(model, data, sched, 0, 4, 1);
  CHECK(model.weight_checksum() == before);
}

TEST_CASE("train_toy: 200 iterations of batch 16 reduce the running loss") {
  auto sched = make_schedule(1000, 1e-4, 0.02, 50);
  Denoiser model(small_config(), 7);
  std::vector<TrainSample> data;
  for (int i = 0; i < 16; ++i)
    data.push_back({random_latent(16, 300 + i), i % 4 ? Prompt::null()
                                                     : Prompt::parse("5", 256)});
  TrainReport rep = train_toy(model, data, sched, 200, 16, 1);
  CHECK(rep.final_loss < rep.initial_loss);
}

TEST_CASE("gradients: backprop matches central finite differences") {
  auto sched = make_schedule(1000, 1e-4, 0.02, 50);
  Denoiser model(small_config(), 7);

  std::vector<Tensor> z_t, eps;
  std::vector<int> t;
  std::vector<Prompt> prompts;
  make_batch(model, sched, 2, 42, z_t, t, prompts, eps);

  model.zero_grads();
  model.loss_and_grads(z_t, t, prompts, eps, true);

  // Probe the largest-gradient entry of one conv weight; large entries keep
  // the float32 finite-difference noise far below the tolerance.
  Param& p = model.param("enc.res0.conv.w");
  size_t idx = 0;
  for (size_t i = 0; i < p.g.size(); ++i)
    if (std::fabs(p.g.v[i]) > std::fabs(p.g.v[idx])) idx = i;
  const double analytic = p.g.v[idx];
  REQUIRE(std::fabs(analytic) > 1e-4);

  const float save = p.w.v[idx];
  const float h = 1e-3f;
  p.w.v[idx] = save + h;
  const double lp = model.loss_and_grads(z_t, t, prompts, eps, false);
  p.w.v[idx] = save - h;
  const double lm = model.loss_and_grads(z_t, t, prompts, eps, false);
  p.w.v[idx] = save;

  const double fd = (lp - lm) / (2.0 * h);
  CHECK(std::fabs(fd - analytic) / std::max(std::fabs(fd), std::fabs(analytic)) < 1e-3);
}
