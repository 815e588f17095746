#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "regionblend/kernels.hpp"
#include "regionblend/rng.hpp"
#include "regionblend/schedule.hpp"
#include "regionblend/tensor.hpp"

namespace regionblend {

struct DenoiserConfig {
  int image_size = 32;
  int in_channels = 3;
  int base_channels = 32;  // half resolution runs at 2x this width
  int cond_dim = 64;
  int vocab_size = 256;
  int norm_groups = 8;
  // Init gain of the final projection. Small values keep the random-weight
  // model a near-identity flow, which the deterministic inversion round trip
  // needs; training is free to grow the weights.
  double out_gain = 0.003;
  uint64_t seed = 0;
};

// Token prompt over a small fixed vocabulary. The null prompt is the empty
// sequence and embeds to the zero vector; otherwise the embedding is the mean
// of the token embedding rows.
struct Prompt {
  std::vector<int> tokens;

  bool is_null() const { return tokens.empty(); }
  static Prompt null() { return Prompt{}; }
  // Whitespace-separated tokens; integers are taken modulo the vocabulary,
  // words are FNV-1a hashed into it.
  static Prompt parse(const std::string& text, int vocab_size);
};

enum class TapMode { Off, Record, Override };

// Controls recording/overriding of the decoder self-attention inputs
// (the pre-Q/K/V feature of each decoder attention block).
struct TapPlan {
  TapMode mode = TapMode::Off;
  std::vector<std::string> layers;             // empty selects all decoder attention layers
  std::map<std::string, Tensor> features;      // overrides, keyed by layer id
};

// Per-call record of the features each selected layer actually used.
struct FeatureTapRecord {
  std::map<std::string, Tensor> features;  // (tokens x d) matrices stored as (1, 1, tokens, d)
};

struct Param {
  std::string name;
  Tensor w;
  Tensor g;  // gradient accumulator, same shape
};

struct TrainSample {
  Tensor image;  // (1, C, H, W) in [-1, 1]
  Prompt prompt;
};

struct ForwardPass;
struct BackwardPass;

// Two-level UNet epsilon-predictor with self-attention at the half
// resolution in both the encoder and decoder paths. All weights come from a
// seeded xoshiro256** stream so equal (seed, config) gives identical models.
class Denoiser {
 public:
  struct AttnRefs {
    std::string id;
    bool decoder = false;
    int wq, wk, wv, wo;  // indices into params_
  };
  struct ResRefs {
    int gn_gamma, gn_beta, conv_w, conv_b, cond_w, cond_b;
  };

  Denoiser(const DenoiserConfig& cfg, uint64_t seed);
  explicit Denoiser(const DenoiserConfig& cfg) : Denoiser(cfg, cfg.seed) {}

  const DenoiserConfig& config() const { return cfg_; }

  Tensor forward(const Tensor& z, int t, const Prompt& p) const;
  Tensor forward(const Tensor& z, int t, const Prompt& p, const TapPlan& plan,
                 FeatureTapRecord* taps) const;

  std::vector<std::string> decoder_attention_layers() const;

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  Param& param(const std::string& name);

  void zero_grads();

  // Mean-squared epsilon-prediction loss over the batch; fills parameter
  // gradients by backprop when accumulate_grads is set.
  double loss_and_grads(const std::vector<Tensor>& z_t, const std::vector<int>& t,
                        const std::vector<Prompt>& prompts, const std::vector<Tensor>& eps_target,
                        bool accumulate_grads);

  uint64_t weight_checksum() const;

 private:
  int add_param(const std::string& name, int n, int c, int h, int w);
  ResRefs add_res_block(const std::string& prefix, int channels);
  AttnRefs add_attn_block(const std::string& id, bool decoder, int d);
  void init_weights(uint64_t seed);

  std::vector<float> condition(int t, const Prompt& p) const;

  DenoiserConfig cfg_;
  std::vector<Param> params_;

  int token_embed_;
  int conv_in_w_, conv_in_b_;
  ResRefs enc_res0_, enc_res1_, dec_res1_, dec_res0_;
  AttnRefs enc_attn_, dec_attn0_, dec_attn1_;
  int down_w_, down_b_, up_w_, up_b_;
  int out_gamma_, out_beta_, out_w_, out_b_;

  friend struct ForwardPass;
  friend struct BackwardPass;
};

// Runs a standard epsilon-prediction MSE training loop (Adam) on pixel-space
// images. Returns the mean running loss of the final quarter of iterations.
struct TrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
};
TrainReport train_toy(Denoiser& model, const std::vector<TrainSample>& dataset,
                      const NoiseSchedule& sched, int iterations, int batch_size, uint64_t seed,
                      double lr = 1e-3);

}  // namespace regionblend
