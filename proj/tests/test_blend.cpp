#include <doctest.h>

#include <algorithm>

#include "regionblend/blend.hpp"
#include "regionblend/rng.hpp"

using namespace regionblend;

namespace {

Tensor const_tensor(float v) {
  Tensor t(1, 1, 4, 4);
  t.fill(v);
  return t;
}

Tensor random_tensor(Rng& rng) {
  Tensor t(1, 1, 4, 4);
  for (auto& x : t.v) x = float(rng.normal());
  return t;
}

}  // namespace

TEST_CASE("blend_branch: the default T=50 table") {
  BlendConfig cfg;
  // Strict inequalities: t > 0.8*50 = 40 selects the half-blend branch,
  // t > 0.5*50 = 25 the window, everything else the identity.
  for (int t = 0; t <= 50; ++t) {
    const BlendBranch b = blend_branch(t, 50.0, cfg);
    if (t >= 41)
      CHECK(b == BlendBranch::High);
    else if (t >= 26)
      CHECK(b == BlendBranch::Window);
    else
      CHECK(b == BlendBranch::Identity);
  }
  CHECK(blend_branch(40.0, 50.0, cfg) == BlendBranch::Window);    // t = tau_b * T boundary
  CHECK(blend_branch(25.0, 50.0, cfg) == BlendBranch::Identity);  // t = tau_a * T boundary
}

TEST_CASE("blend: equal inputs pass through the window unchanged") {
  BlendConfig cfg;
  Tensor c = const_tensor(0.7f);
  Tensor out = blend(c, c, c, 0.6 * 50, 50, cfg);
  CHECK(out.max_abs_diff(c) < 1e-6f);
}

TEST_CASE("blend: high branch averages edit and text features") {
  BlendConfig cfg;
  Tensor out = blend(const_tensor(2.0f), const_tensor(4.0f), const_tensor(100.0f), 0.9 * 50, 50, cfg);
  for (float v : out.v) CHECK(v == doctest::Approx(3.0));
}

TEST_CASE("blend: identity branch returns the edit features") {
  BlendConfig cfg;
  Tensor fe = const_tensor(1.5f);
  Tensor out = blend(fe, const_tensor(-3.0f), const_tensor(8.0f), 0.3 * 50, 50, cfg);
  CHECK(out.max_abs_diff(fe) == 0.0f);
}

TEST_CASE("blend: window outputs stay in the elementwise convex hull") {
  BlendConfig cfg;
  Rng rng(40);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor fe = random_tensor(rng), fp = random_tensor(rng), fn = random_tensor(rng);
    Tensor out = blend(fe, fp, fn, 0.7 * 50, 50, cfg);
    for (size_t i = 0; i < out.size(); ++i) {
      const float lo = std::min({fe.v[i], fp.v[i], fn.v[i]});
      const float hi = std::max({fe.v[i], fp.v[i], fn.v[i]});
      CHECK(out.v[i] >= lo - 1e-6f);
      CHECK(out.v[i] <= hi + 1e-6f);
    }
  }
}

TEST_CASE("blend: window weights are linear in the inputs") {
  BlendConfig cfg;
  cfg.alpha = 1.0;
  cfg.beta = 0.0;
  cfg.gamma = 0.0;
  Rng rng(41);
  Tensor fe = random_tensor(rng), fp = random_tensor(rng), fn = random_tensor(rng);
  Tensor out = blend(fe, fp, fn, 0.7 * 50, 50, cfg);
  CHECK(out.max_abs_diff(fe) == 0.0f);  // degenerate weights pick f_e exactly
}

TEST_CASE("blend: literal_alg2=false swaps the outer branches") {
  BlendConfig cfg;
  cfg.literal_alg2 = false;
  CHECK(blend_branch(45.0, 50.0, cfg) == BlendBranch::Identity);
  CHECK(blend_branch(30.0, 50.0, cfg) == BlendBranch::Window);
  CHECK(blend_branch(10.0, 50.0, cfg) == BlendBranch::High);
}

TEST_CASE("blend: config validation") {
  BlendConfig bad;
  bad.alpha = -0.1;
  bad.beta = 0.6;
  bad.gamma = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  BlendConfig sum;
  sum.alpha = 0.5;
  sum.beta = 0.5;
  sum.gamma = 0.5;
  CHECK_THROWS_AS(sum.validate(), ConfigError);

  BlendConfig tau;
  tau.tau_a = 0.9;
  tau.tau_b = 0.8;
  CHECK_THROWS_AS(tau.validate(), ConfigError);

  BlendConfig ok;
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("blend_taps: missing recorded layer raises ConfigError") {
  FeatureTapRecord e, p, n;
  e.features["dec.attn0"] = const_tensor(1.0f);
  p.features["dec.attn0"] = const_tensor(2.0f);
  // n lacks the layer entirely.
  BlendConfig cfg;
  CHECK_THROWS_AS(blend_taps(e, p, n, 30.0, 50.0, cfg, {"dec.attn0"}), ConfigError);

  n.features["dec.attn0"] = const_tensor(3.0f);
  auto out = blend_taps(e, p, n, 30.0, 50.0, cfg, {"dec.attn0"});
  REQUIRE(out.count("dec.attn0") == 1);
  for (float v : out.at("dec.attn0").v)
    CHECK(v == doctest::Approx(0.25 * 1.0 + 0.5 * 2.0 + 0.25 * 3.0));
}
