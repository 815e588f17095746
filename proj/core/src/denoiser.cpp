#include "regionblend/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace regionblend {

using kern::GroupNormCache;

Prompt Prompt::parse(const std::string& text, int vocab_size) {
  Prompt p;
  std::string tok;
  auto flush = [&] {
    if (tok.empty()) return;
    bool numeric = std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (numeric) {
      p.tokens.push_back(int(std::stoul(tok) % uint64_t(vocab_size)));
    } else {
      uint64_t h = 1469598103934665603ULL;
      for (char c : tok) h = (h ^ uint8_t(c)) * 1099511628211ULL;
      p.tokens.push_back(int(h % uint64_t(vocab_size)));
    }
    tok.clear();
  };
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == ',')
      flush();
    else
      tok.push_back(c);
  }
  flush();
  return p;
}

int Denoiser::add_param(const std::string& name, int n, int c, int h, int w) {
  params_.push_back(Param{name, Tensor(n, c, h, w), Tensor(n, c, h, w)});
  return int(params_.size()) - 1;
}

Denoiser::ResRefs Denoiser::add_res_block(const std::string& prefix, int channels) {
  ResRefs r;
  r.gn_gamma = add_param(prefix + ".gn.gamma", channels, 1, 1, 1);
  r.gn_beta = add_param(prefix + ".gn.beta", channels, 1, 1, 1);
  r.conv_w = add_param(prefix + ".conv.w", channels, channels, 3, 3);
  r.conv_b = add_param(prefix + ".conv.b", channels, 1, 1, 1);
  r.cond_w = add_param(prefix + ".cond.w", channels, cfg_.cond_dim, 1, 1);
  r.cond_b = add_param(prefix + ".cond.b", channels, 1, 1, 1);
  return r;
}

Denoiser::AttnRefs Denoiser::add_attn_block(const std::string& id, bool decoder, int d) {
  AttnRefs a;
  a.id = id;
  a.decoder = decoder;
  a.wq = add_param(id + ".wq", d, d, 1, 1);
  a.wk = add_param(id + ".wk", d, d, 1, 1);
  a.wv = add_param(id + ".wv", d, d, 1, 1);
  a.wo = add_param(id + ".wo", d, d, 1, 1);
  return a;
}

Denoiser::Denoiser(const DenoiserConfig& cfg, uint64_t seed) : cfg_(cfg) {
  const int c = cfg_.base_channels;
  const int d = 2 * c;
  if (cfg_.cond_dim % 2 != 0) throw ConfigError("denoiser: cond_dim must be even");
  if (cfg_.image_size % 2 != 0) throw ConfigError("denoiser: image_size must be even");

  token_embed_ = add_param("token_embed", cfg_.vocab_size, cfg_.cond_dim, 1, 1);
  conv_in_w_ = add_param("conv_in.w", c, cfg_.in_channels, 3, 3);
  conv_in_b_ = add_param("conv_in.b", c, 1, 1, 1);
  enc_res0_ = add_res_block("enc.res0", c);
  down_w_ = add_param("down.w", d, c, 3, 3);
  down_b_ = add_param("down.b", d, 1, 1, 1);
  enc_res1_ = add_res_block("enc.res1", d);
  enc_attn_ = add_attn_block("enc.attn0", false, d);
  dec_res1_ = add_res_block("dec.res1", d);
  dec_attn0_ = add_attn_block("dec.attn0", true, d);
  dec_attn1_ = add_attn_block("dec.attn1", true, d);
  up_w_ = add_param("up.w", c, d, 1, 1);
  up_b_ = add_param("up.b", c, 1, 1, 1);
  dec_res0_ = add_res_block("dec.res0", c);
  out_gamma_ = add_param("out.gn.gamma", c, 1, 1, 1);
  out_beta_ = add_param("out.gn.beta", c, 1, 1, 1);
  out_w_ = add_param("out.conv.w", cfg_.in_channels, c, 3, 3);
  out_b_ = add_param("out.conv.b", cfg_.in_channels, 1, 1, 1);

  init_weights(seed);
}

/// Weights are drawn in registration order from a single stream: uniform in
// [-1/sqrt(fan_in), +1/sqrt(fan_in)] for matrices, zero for biases, and
// (1, 0) for norm gamma/beta. The final projection is additionally shrunk by
// out_gain (near-zero output init, as is standard for diffusion UNets).
void Denoiser::init_weights(uint64_t seed) {
  Rng rng(seed);
  for (auto& p : params_) {
    const bool is_bias = p.name.ends_with(".b") || p.name.ends_with(".beta");
    const bool is_gamma = p.name.ends_with(".gamma");
    if (is_gamma) {
      p.w.fill(1.0f);
    } else if (is_bias) {
      p.w.fill(0.0f);
    } else {
      const int fan_in = p.w.c * p.w.h * p.w.w;
      double bound = 1.0 / std::sqrt(double(fan_in));
      if (p.name == "out.conv.w") bound *= cfg_.out_gain;
      for (auto& x : p.w.v) x = float(rng.uniform(-bound, bound));
    }
  }
}

Param& Denoiser::param(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw ConfigError("denoiser: unknown parameter " + name);
}

void Denoiser::zero_grads() {
  for (auto& p : params_) p.g.fill(0.0f);
}

std::vector<std::string> Denoiser::decoder_attention_layers() const {
  return {dec_attn0_.id, dec_attn1_.id};
}

std::vector<float> Denoiser::condition(int t, const Prompt& p) const {
  std::vector<float> cond(cfg_.cond_dim, 0.0f);
  const int half = cfg_.cond_dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * double(i) / double(half - 1));
    cond[i] = float(std::sin(double(t) * freq));
    cond[half + i] = float(std::cos(double(t) * freq));
  }
  if (!p.is_null()) {
    const Tensor& emb = params_[token_embed_].w;
    const float inv = 1.0f / float(p.tokens.size());
    for (int tok : p.tokens) {
      if (tok < 0 || tok >= cfg_.vocab_size) throw ConfigError("prompt token out of vocabulary");
      for (int j = 0; j < cfg_.cond_dim; ++j) cond[j] += inv * emb.v[size_t(tok) * cfg_.cond_dim + j];
    }
  }
  return cond;
}

namespace {

struct ResTrace {
  Tensor x, hg, hs;
  GroupNormCache gnc;
};

struct AttnTrace {
  Tensor x;
  int tokens = 0, d = 0;
  std::vector<float> f, q, k, v, a, o;  // f/q/k/v/o: tokens x d; a: tokens x tokens
  bool overridden = false;
};

struct ForwardTrace {
  std::vector<float> cond;
  Tensor x_in_src;  // input latent
  Tensor x_in;      // conv_in output
  ResTrace enc0, enc1, dec1, dec0;
  Tensor e0, d0, a0, r1, b0, b1, u, uc, s, r0, hg_out, hs_out;
  GroupNormCache out_gnc;
};

std::vector<float> flatten_tokens(const Tensor& x) {
  const int tokens = x.h * x.w, d = x.c;
  std::vector<float> f(size_t(tokens) * d);
  for (int c = 0; c < d; ++c) {
    const float* src = &x.at(0, c, 0, 0);
    for (int t = 0; t < tokens; ++t) f[size_t(t) * d + c] = src[t];
  }
  return f;
}

void add_tokens(Tensor& x, const std::vector<float>& f) {
  const int tokens = x.h * x.w, d = x.c;
  for (int c = 0; c < d; ++c) {
    float* dst = &x.at(0, c, 0, 0);
    for (int t = 0; t < tokens; ++t) dst[t] += f[size_t(t) * d + c];
  }
}

bool layer_selected(const TapPlan& plan, const std::string& id) {
  if (plan.layers.empty()) return true;
  return std::find(plan.layers.begin(), plan.layers.end(), id) != plan.layers.end();
}

}  // namespace

// The forward pass is hand-rolled, with an optional trace captured for
// backprop.
struct ForwardPass {
  const Denoiser& m;
  const std::vector<Param>& P;
  const TapPlan& plan;
  FeatureTapRecord* taps;
  ForwardTrace* trace;

  Tensor res_block(const Denoiser::ResRefs& r, const Tensor& x, const std::vector<float>& cond,
                   ResTrace* tr) const {
    GroupNormCache local;
    GroupNormCache* gnc = tr ? &tr->gnc : &local;
    Tensor hg = kern::group_norm(x, m.config().norm_groups, P[r.gn_gamma].w.v, P[r.gn_beta].w.v, gnc);
    Tensor hs = kern::silu(hg);
    Tensor y = kern::conv2d(hs, P[r.conv_w].w, P[r.conv_b].w.v, 1, 1);
    const int channels = y.c;
    const Tensor& cw = P[r.cond_w].w;
    for (int c = 0; c < channels; ++c) {
      float cb = P[r.cond_b].w.v[c];
      for (int j = 0; j < m.config().cond_dim; ++j)
        cb += cw.v[size_t(c) * m.config().cond_dim + j] * cond[j];
      float* row = &y.at(0, c, 0, 0);
      const float* xr = &x.at(0, c, 0, 0);
      for (int s = 0; s < y.h * y.w; ++s) row[s] += cb + xr[s];
    }
    if (tr) {
      tr->x = x;
      tr->hg = std::move(hg);
      tr->hs = std::move(hs);
    }
    return y;
  }

  Tensor attn_block(const Denoiser::AttnRefs& a, const Tensor& x, AttnTrace* tr) const {
    const int tokens = x.h * x.w, d = x.c;
    std::vector<float> f = flatten_tokens(x);
    bool overridden = false;

    if (a.decoder && plan.mode == TapMode::Override && layer_selected(plan, a.id)) {
      auto it = plan.features.find(a.id);
      if (it == plan.features.end())
        throw ConfigError("tap plan: missing override for layer " + a.id);
      const Tensor& ov = it->second;
      if (ov.h != tokens || ov.w != d || ov.n != 1 || ov.c != 1)
        throw ShapeError("tap plan: override shape mismatch for layer " + a.id);
      f.assign(ov.v.begin(), ov.v.end());
      overridden = true;
    }
    if (a.decoder && taps && plan.mode != TapMode::Off && layer_selected(plan, a.id)) {
      Tensor rec(1, 1, tokens, d);
      rec.v.assign(f.begin(), f.end());
      taps->features[a.id] = std::move(rec);
    }

    std::vector<float> q(size_t(tokens) * d), k(size_t(tokens) * d), v(size_t(tokens) * d);
    kern::matmul(f.data(), P[a.wq].w.data(), q.data(), tokens, d, d);
    kern::matmul(f.data(), P[a.wk].w.data(), k.data(), tokens, d, d);
    kern::matmul(f.data(), P[a.wv].w.data(), v.data(), tokens, d, d);

    std::vector<float> att(size_t(tokens) * tokens);
    kern::matmul_bt(q.data(), k.data(), att.data(), tokens, d, tokens);
    const float scale = 1.0f / std::sqrt(float(d));
    for (auto& x2 : att) x2 *= scale;
    kern::softmax_rows(att.data(), tokens, tokens);

    std::vector<float> o(size_t(tokens) * d), p(size_t(tokens) * d);
    kern::matmul(att.data(), v.data(), o.data(), tokens, tokens, d);
    kern::matmul(o.data(), P[a.wo].w.data(), p.data(), tokens, d, d);

    Tensor y = x;
    add_tokens(y, p);
    if (tr) {
      tr->x = x;
      tr->tokens = tokens;
      tr->d = d;
      tr->f = std::move(f);
      tr->q = std::move(q);
      tr->k = std::move(k);
      tr->v = std::move(v);
      tr->a = std::move(att);
      tr->o = std::move(o);
      tr->overridden = overridden;
    }
    return y;
  }

  Tensor run(const Tensor& z, int t, const Prompt& prompt) const {
    const auto& cfg = m.config();
    if (z.c != cfg.in_channels || z.h != cfg.image_size || z.w != cfg.image_size || z.n != 1)
      throw ShapeError("denoiser: latent shape does not match model config");
    std::vector<float> cond = m.condition(t, prompt);

    Tensor x_in = kern::conv2d(z, P[m.conv_in_w_].w, P[m.conv_in_b_].w.v, 1, 1);
    Tensor e0 = res_block(m.enc_res0_, x_in, cond, trace ? &trace->enc0 : nullptr);
    Tensor d0 = kern::conv2d(e0, P[m.down_w_].w, P[m.down_b_].w.v, 2, 1);
    Tensor e1 = res_block(m.enc_res1_, d0, cond, trace ? &trace->enc1 : nullptr);

    Tensor a0 = attn_block(m.enc_attn_, e1, trace ? &trace_enc_attn() : nullptr);
    Tensor r1 = res_block(m.dec_res1_, a0, cond, trace ? &trace->dec1 : nullptr);
    Tensor b0 = attn_block(m.dec_attn0_, r1, trace ? &trace_dec_attn0() : nullptr);
    Tensor b1 = attn_block(m.dec_attn1_, b0, trace ? &trace_dec_attn1() : nullptr);

    Tensor u = kern::upsample2(b1);
    Tensor uc = kern::conv2d(u, P[m.up_w_].w, P[m.up_b_].w.v, 1, 0);
    Tensor s = uc;
    for (size_t i = 0; i < s.size(); ++i) s.v[i] += e0.v[i];
    Tensor r0 = res_block(m.dec_res0_, s, cond, trace ? &trace->dec0 : nullptr);

    GroupNormCache local_gnc;
    GroupNormCache* gnc = trace ? &trace->out_gnc : &local_gnc;
    Tensor hg = kern::group_norm(r0, cfg.norm_groups, P[m.out_gamma_].w.v, P[m.out_beta_].w.v, gnc);
    Tensor hs = kern::silu(hg);
    Tensor eps = kern::conv2d(hs, P[m.out_w_].w, P[m.out_b_].w.v, 1, 1);

    if (trace) {
      trace->cond = std::move(cond);
      trace->x_in_src = z;
      trace->x_in = std::move(x_in);
      trace->e0 = std::move(e0);
      trace->d0 = std::move(d0);
      trace->a0 = std::move(a0);
      trace->r1 = std::move(r1);
      trace->b0 = std::move(b0);
      trace->b1 = std::move(b1);
      trace->u = std::move(u);
      trace->uc = std::move(uc);
      trace->s = std::move(s);
      trace->r0 = std::move(r0);
      trace->hg_out = std::move(hg);
      trace->hs_out = std::move(hs);
    }
    return eps;
  }

  // Attention traces live beside the ForwardTrace.
  AttnTrace& trace_enc_attn() const { return at_enc; }
  AttnTrace& trace_dec_attn0() const { return at_dec0; }
  AttnTrace& trace_dec_attn1() const { return at_dec1; }
  mutable AttnTrace at_enc, at_dec0, at_dec1;
};

Tensor Denoiser::forward(const Tensor& z, int t, const Prompt& p) const {
  TapPlan off;
  return forward(z, t, p, off, nullptr);
}

Tensor Denoiser::forward(const Tensor& z, int t, const Prompt& p, const TapPlan& plan,
                         FeatureTapRecord* taps) const {
  ForwardPass fp{*this, params_, plan, taps, nullptr};
  return fp.run(z, t, p);
}

namespace {

// Backward through one attention block; accumulates weight grads and returns
// the gradient wrt the block input.
void attn_backward(std::vector<Param>& P, const Denoiser::AttnRefs& a, const AttnTrace& tr,
                   const Tensor& gy, Tensor& gx) {
  const int tokens = tr.tokens, d = tr.d;
  std::vector<float> gp = flatten_tokens(gy);

  std::vector<float> go(size_t(tokens) * d);
  kern::matmul_bt(gp.data(), P[a.wo].w.data(), go.data(), tokens, d, d);
  kern::matmul_at(tr.o.data(), gp.data(), P[a.wo].g.data(), tokens, d, d);

  std::vector<float> ga(size_t(tokens) * tokens), gv(size_t(tokens) * d);
  kern::matmul_bt(go.data(), tr.v.data(), ga.data(), tokens, d, tokens);
  kern::matmul_at(tr.a.data(), go.data(), gv.data(), tokens, tokens, d, false);

  // softmax backward per row
  std::vector<float> gs(size_t(tokens) * tokens);
  for (int i = 0; i < tokens; ++i) {
    const float* ai = tr.a.data() + size_t(i) * tokens;
    const float* gai = ga.data() + size_t(i) * tokens;
    float dot = 0.0f;
    for (int j = 0; j < tokens; ++j) dot += ai[j] * gai[j];
    float* gsi = gs.data() + size_t(i) * tokens;
    for (int j = 0; j < tokens; ++j) gsi[j] = ai[j] * (gai[j] - dot);
  }
  const float scale = 1.0f / std::sqrt(float(d));
  for (auto& x : gs) x *= scale;

  std::vector<float> gq(size_t(tokens) * d), gk(size_t(tokens) * d);
  kern::matmul(gs.data(), tr.k.data(), gq.data(), tokens, tokens, d);
  kern::matmul_at(gs.data(), tr.q.data(), gk.data(), tokens, tokens, d, false);

  kern::matmul_at(tr.f.data(), gq.data(), P[a.wq].g.data(), tokens, d, d);
  kern::matmul_at(tr.f.data(), gk.data(), P[a.wk].g.data(), tokens, d, d);
  kern::matmul_at(tr.f.data(), gv.data(), P[a.wv].g.data(), tokens, d, d);

  std::vector<float> gf(size_t(tokens) * d, 0.0f);
  kern::matmul_bt(gq.data(), P[a.wq].w.data(), gf.data(), tokens, d, d, true);
  kern::matmul_bt(gk.data(), P[a.wk].w.data(), gf.data(), tokens, d, d, true);
  kern::matmul_bt(gv.data(), P[a.wv].w.data(), gf.data(), tokens, d, d, true);

  gx = gy;  // residual path
  add_tokens(gx, gf);
}

}  // namespace

struct BackwardPass {
  Denoiser& m;
  std::vector<Param>& P;
  const ForwardPass& fp;
  const ForwardTrace& tr;
  std::vector<float> gcond;

  BackwardPass(Denoiser& model, const ForwardPass& fpass, const ForwardTrace& trace)
      : m(model), P(model.params()), fp(fpass), tr(trace), gcond(model.config().cond_dim, 0.0f) {}

  Tensor res_backward(const Denoiser::ResRefs& r, const ResTrace& rt, const Tensor& gy) {
    const int cond_dim = m.config().cond_dim;
    // conditioning bias gradient: spatial sum per channel
    for (int c = 0; c < gy.c; ++c) {
      float gcb = 0.0f;
      const float* row = &gy.at(0, c, 0, 0);
      for (int s = 0; s < gy.h * gy.w; ++s) gcb += row[s];
      P[r.cond_b].g.v[c] += gcb;
      for (int j = 0; j < cond_dim; ++j) {
        P[r.cond_w].g.v[size_t(c) * cond_dim + j] += gcb * tr.cond[j];
        gcond[j] += gcb * P[r.cond_w].w.v[size_t(c) * cond_dim + j];
      }
    }
    Tensor ghs, gx = gy;  // residual path
    kern::conv2d_backward(rt.hs, P[r.conv_w].w, 1, 1, gy, ghs, P[r.conv_w].g, P[r.conv_b].g.v);
    Tensor ghg;
    kern::silu_backward(rt.hg, ghs, ghg);
    kern::group_norm_backward(rt.x, m.config().norm_groups, P[r.gn_gamma].w.v, rt.gnc, ghg, gx,
                              P[r.gn_gamma].g.v, P[r.gn_beta].g.v);
    return gx;
  }

  void run(const Tensor& g_eps, const Prompt& prompt) {
    Tensor ghs;
    kern::conv2d_backward(tr.hs_out, P[m.out_w_].w, 1, 1, g_eps, ghs, P[m.out_w_].g,
                          P[m.out_b_].g.v);
    Tensor ghg;
    kern::silu_backward(tr.hg_out, ghs, ghg);
    Tensor gr0;
    kern::group_norm_backward(tr.r0, m.config().norm_groups, P[m.out_gamma_].w.v, tr.out_gnc, ghg,
                              gr0, P[m.out_gamma_].g.v, P[m.out_beta_].g.v);

    Tensor gs = res_backward(m.dec_res0_, tr.dec0, gr0);
    // skip: s = uc + e0
    Tensor ge0_skip = gs;
    Tensor gu;
    kern::conv2d_backward(tr.u, P[m.up_w_].w, 1, 0, gs, gu, P[m.up_w_].g, P[m.up_b_].g.v);
    Tensor gb1;
    kern::upsample2_backward(gu, gb1);

    Tensor gb0, gr1;
    attn_backward(P, m.dec_attn1_, fp.at_dec1, gb1, gb0);
    attn_backward(P, m.dec_attn0_, fp.at_dec0, gb0, gr1);
    Tensor ga0 = res_backward(m.dec_res1_, tr.dec1, gr1);
    Tensor ge1;
    attn_backward(P, m.enc_attn_, fp.at_enc, ga0, ge1);
    Tensor gd0 = res_backward(m.enc_res1_, tr.enc1, ge1);
    Tensor ge0;
    kern::conv2d_backward(tr.e0, P[m.down_w_].w, 2, 1, gd0, ge0, P[m.down_w_].g, P[m.down_b_].g.v);
    for (size_t i = 0; i < ge0.size(); ++i) ge0.v[i] += ge0_skip.v[i];
    Tensor gx_in = res_backward(m.enc_res0_, tr.enc0, ge0);
    Tensor gz;
    kern::conv2d_backward(tr.x_in_src, P[m.conv_in_w_].w, 1, 1, gx_in, gz, P[m.conv_in_w_].g,
                          P[m.conv_in_b_].g.v);

    // conditioning gradient into token embeddings (mean over prompt tokens)
    if (!prompt.is_null()) {
      const float inv = 1.0f / float(prompt.tokens.size());
      for (int tok : prompt.tokens)
        for (int j = 0; j < m.config().cond_dim; ++j)
          P[m.token_embed_].g.v[size_t(tok) * m.config().cond_dim + j] += inv * gcond[j];
    }
  }
};

double Denoiser::loss_and_grads(const std::vector<Tensor>& z_t, const std::vector<int>& t,
                                const std::vector<Prompt>& prompts,
                                const std::vector<Tensor>& eps_target, bool accumulate_grads) {
  const size_t batch = z_t.size();
  if (batch == 0 || t.size() != batch || prompts.size() != batch || eps_target.size() != batch)
    throw ConfigError("loss_and_grads: inconsistent batch");

  double loss = 0.0;
  TapPlan off;
  for (size_t b = 0; b < batch; ++b) {
    ForwardTrace trace;
    ForwardPass fp{*this, params_, off, nullptr, accumulate_grads ? &trace : nullptr};
    Tensor eps = fp.run(z_t[b], t[b], prompts[b]);
    eps.require_same_shape(eps_target[b], "loss_and_grads: eps target");
    const double inv_n = 1.0 / double(eps.size());
    double sample_loss = 0.0;
    Tensor g = zeros_like(eps);
    for (size_t i = 0; i < eps.size(); ++i) {
      const double d = double(eps.v[i]) - double(eps_target[b].v[i]);
      sample_loss += d * d * inv_n;
      g.v[i] = float(2.0 * d * inv_n / double(batch));
    }
    loss += sample_loss / double(batch);
    if (accumulate_grads) {
      BackwardPass bp(*this, fp, trace);
      bp.run(g, prompts[b]);
    }
  }
  return loss;
}

uint64_t Denoiser::weight_checksum() const {
  uint64_t h = 1469598103934665603ULL;
  for (const auto& p : params_) {
    const auto* bytes = reinterpret_cast<const uint8_t*>(p.w.v.data());
    for (size_t i = 0; i < p.w.v.size() * sizeof(float); ++i)
      h = (h ^ bytes[i]) * 1099511628211ULL;
  }
  return h;
}

TrainReport train_toy(Denoiser& model, const std::vector<TrainSample>& dataset,
                      const NoiseSchedule& sched, int iterations, int batch_size, uint64_t seed,
                      double lr) {
  if (dataset.empty()) throw ConfigError("train_toy: empty dataset");
  TrainReport report;
  if (iterations <= 0) return report;

  Rng rng(seed);
  auto& params = model.params();
  std::vector<Tensor> adam_m(params.size()), adam_v(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    adam_m[i] = zeros_like(params[i].w);
    adam_v[i] = zeros_like(params[i].w);
  }
  const double beta1 = 0.9, beta2 = 0.999, eps_adam = 1e-8;

  double first_quarter = 0.0, last_quarter = 0.0;
  int nq1 = 0, nq2 = 0;
  for (int it = 1; it <= iterations; ++it) {
    std::vector<Tensor> z_t(batch_size), eps_t(batch_size);
    std::vector<int> ts(batch_size);
    std::vector<Prompt> prompts(batch_size);
    for (int b = 0; b < batch_size; ++b) {
      const auto& sample = dataset[rng.below(dataset.size())];
      const int t = int(rng.below(uint64_t(sched.t_train)));
      const double a = sched.alpha(t), s = sched.sigma(t);
      Tensor eps = zeros_like(sample.image);
      for (auto& x : eps.v) x = float(rng.normal());
      Tensor zt = zeros_like(sample.image);
      for (size_t i = 0; i < zt.size(); ++i)
        zt.v[i] = float(a) * sample.image.v[i] + float(s) * eps.v[i];
      z_t[b] = std::move(zt);
      eps_t[b] = std::move(eps);
      ts[b] = t;
      prompts[b] = sample.prompt;
    }

    model.zero_grads();
    const double loss = model.loss_and_grads(z_t, ts, prompts, eps_t, true);
    if (it <= std::max(1, iterations / 4)) {
      first_quarter += loss;
      ++nq1;
    }
    if (it > iterations - std::max(1, iterations / 4)) {
      last_quarter += loss;
      ++nq2;
    }

    const double bc1 = 1.0 - std::pow(beta1, it);
    const double bc2 = 1.0 - std::pow(beta2, it);
    for (size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      for (size_t j = 0; j < p.w.size(); ++j) {
        const double g = p.g.v[j];
        adam_m[i].v[j] = float(beta1 * adam_m[i].v[j] + (1.0 - beta1) * g);
        adam_v[i].v[j] = float(beta2 * adam_v[i].v[j] + (1.0 - beta2) * g * g);
        const double mh = adam_m[i].v[j] / bc1;
        const double vh = adam_v[i].v[j] / bc2;
        p.w.v[j] -= float(lr * mh / (std::sqrt(vh) + eps_adam));
      }
    }
  }
  report.initial_loss = first_quarter / std::max(1, nq1);
  report.final_loss = last_quarter / std::max(1, nq2);
  return report;
}

}  // namespace regionblend
