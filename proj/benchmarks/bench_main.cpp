#include <benchmark/benchmark.h>

#include <algorithm>

#include "regionblend/denoiser.hpp"
#include "regionblend/kernels.hpp"
#include "regionblend/pipeline.hpp"
#include "regionblend/rng.hpp"

using namespace regionblend;

namespace {

Tensor random_tensor(int n, int c, int h, int w, uint64_t seed) {
  Rng rng(seed);
  Tensor t(n, c, h, w);
  for (auto& x : t.v) x = float(rng.normal());
  return t;
}

void bm_denoiser_forward(benchmark::State& state) {
  Denoiser model(DenoiserConfig{}, 7);
  Tensor z = random_tensor(1, 3, 32, 32, 1);
  const Prompt p = Prompt::parse("12 34", model.config().vocab_size);
  for (auto _ : state) {
    Tensor eps = model.forward(z, 500, p);
    benchmark::DoNotOptimize(eps.v.data());
  }
}
BENCHMARK(bm_denoiser_forward)->Unit(benchmark::kMillisecond);

void bm_denoiser_backward(benchmark::State& state) {
  Denoiser model(DenoiserConfig{}, 7);
  std::vector<Tensor> z = {random_tensor(1, 3, 32, 32, 1)};
  std::vector<Tensor> eps = {random_tensor(1, 3, 32, 32, 2)};
  std::vector<int> t = {500};
  std::vector<Prompt> prompts = {Prompt::null()};
  for (auto _ : state) {
    model.zero_grads();
    benchmark::DoNotOptimize(model.loss_and_grads(z, t, prompts, eps, true));
  }
}
BENCHMARK(bm_denoiser_backward)->Unit(benchmark::kMillisecond);

void bm_solver_step(benchmark::State& state) {
  auto sched = make_schedule(1000, 1e-4, 0.02, 50);
  Tensor z = random_tensor(1, 3, 32, 32, 3);
  Tensor x_pred = random_tensor(1, 3, 32, 32, 4);
  const int t = sched.inference_steps[30], tn = sched.inference_steps[29];
  for (auto _ : state) {
    SolverState st;
    Tensor out = dpmpp_2m_step(z, x_pred, st, t, tn, sched);
    benchmark::DoNotOptimize(out.v.data());
  }
}
BENCHMARK(bm_solver_step);

void bm_conv2d(benchmark::State& state) {
  Tensor x = random_tensor(1, 32, 32, 32, 5);
  Tensor w = random_tensor(32, 32, 3, 3, 6);
  std::vector<float> b(32, 0.1f);
  for (auto _ : state) {
    Tensor y = kern::conv2d(x, w, b, 1, 1);
    benchmark::DoNotOptimize(y.v.data());
  }
}
BENCHMARK(bm_conv2d)->Unit(benchmark::kMicrosecond);

void bm_reconstruct_8_steps(benchmark::State& state) {
  Denoiser model(DenoiserConfig{}, 7);
  ImageBuffer img(32, 32);
  Rng rng(8);
  for (auto& v : img.v) v = float(std::clamp(rng.normal() * 0.4, -1.0, 1.0));
  RunConfig cfg;
  cfg.steps = 8;
  for (auto _ : state) {
    ReconstructResult r = reconstruct(img, cfg, model);
    benchmark::DoNotOptimize(r.metrics.mae);
  }
}
BENCHMARK(bm_reconstruct_8_steps)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
