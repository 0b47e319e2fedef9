// Copyright 2026 The SFNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "sfnet/arch.hpp"
#include "sfnet/nn_core.hpp"

using namespace sfnet;

namespace {

SharedFloats random_floats(size_t n, uint32_t seed, float scale) {
  testing::rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = float(testing::uniform(-scale, scale));
  return make_shared_floats(std::move(v));
}

SharedFloats const_floats(size_t n, float value) {
  return make_shared_floats(std::vector<float>(n, value));
}

Conv2d random_conv(const LayerSpec& s, uint32_t seed) {
  const float scale = 1.0f / std::sqrt(float(s.kt * s.kf * s.in_ch));
  return Conv2d(s,
                random_floats(size_t(s.out_ch) * s.kt * s.kf * s.in_ch, seed,
                              scale),
                random_floats(size_t(s.out_ch), seed + 1, 0.1f));
}

Deconv2dFreq random_deconv(const LayerSpec& s, uint32_t seed) {
  const float scale = 1.0f / std::sqrt(float(s.kt * s.kf * s.in_ch));
  return Deconv2dFreq(
      s,
      random_floats(size_t(s.out_ch) * s.kt * s.kf * s.in_ch, seed, scale),
      random_floats(size_t(s.out_ch), seed + 1, 0.1f));
}

// Streaming pass over a full tensor, one frame at a time.
template <typename Layer>
Tensor run_streaming(const Layer& layer, const Tensor& x, int out_freq,
                     int out_ch) {
  auto st = layer.make_state();
  Tensor y(x.frames, out_freq, out_ch);
  for (int t = 0; t < x.frames; ++t) layer.step(st, x.frame(t), y.frame(t));
  return y;
}

}  // namespace

TEST_CASE("1x1 identity kernel passes the input through") {
  LayerSpec s;
  s.in_ch = 1;
  s.out_ch = 1;
  s.in_freq = 7;
  Conv2d conv(s, const_floats(1, 1.0f), const_floats(1, 0.0f));
  Tensor x = testing::random_tensor(4, 7, 1, 5);
  Tensor y = conv.forward(x);
  CHECK(testing::max_abs_diff(x, y) == 0.0);
}

TEST_CASE("all-zero input broadcasts the bias") {
  LayerSpec s;
  s.in_ch = 3;
  s.out_ch = 2;
  s.kt = 2;
  s.kf = 3;
  s.in_freq = 10;
  s.stride_f = 2;
  s.pad_lo = 0;
  s.pad_hi = 1;
  Conv2d conv(s, random_floats(size_t(2) * 2 * 3 * 3, 8, 0.5f),
              make_shared_floats({0.25f, -1.5f}));
  Tensor x(5, 10, 3);
  Tensor y = conv.forward(x);
  for (int t = 0; t < y.frames; ++t)
    for (int f = 0; f < y.freq; ++f) {
      CHECK(y.at(t, f, 0) == 0.25f);
      CHECK(y.at(t, f, 1) == -1.5f);
    }
}

TEST_CASE("conv streaming equals offline") {
  LayerSpec s;
  s.in_ch = 6;
  s.out_ch = 4;
  s.kt = 2;
  s.kf = 3;
  s.in_freq = 21;
  s.stride_f = 2;
  s.pad_lo = 0;
  s.pad_hi = 1;
  Conv2d conv = random_conv(s, 33);
  Tensor x = testing::random_tensor(8, 21, 6, 34);
  Tensor off = conv.forward(x);
  Tensor str = run_streaming(conv, x, conv.out_freq(), s.out_ch);
  CHECK(testing::max_abs_diff(off, str) < 1e-6);
}

TEST_CASE("dilated conv streaming equals offline") {
  for (int d : {1, 4, 32}) {
    LayerSpec s = plan::stcm_dconv(8, 5, d);
    Conv2d conv = random_conv(s, 100 + d);
    Tensor x = testing::random_tensor(200, 1, 8, 200 + d);
    Tensor off = conv.forward(x);
    Tensor str = run_streaming(conv, x, 1, 8);
    CHECK(testing::max_abs_diff(off, str) < 1e-6);
  }
}

TEST_CASE("conv output is causal") {
  LayerSpec s = plan::stcm_dconv(4, 5, 32);
  Conv2d conv = random_conv(s, 55);
  Tensor x = testing::random_tensor(64, 1, 4, 56);
  Tensor y1 = conv.forward(x);
  Tensor x2 = x;
  for (int t = 40; t < 64; ++t)
    for (int c = 0; c < 4; ++c) x2.at(t, 0, c) += 5.0f;
  Tensor y2 = conv.forward(x2);
  for (int t = 0; t < 40; ++t)
    for (int c = 0; c < 4; ++c) CHECK(y1.at(t, 0, c) == y2.at(t, 0, c));
  bool differs = false;
  for (int t = 40; t < 64; ++t)
    for (int c = 0; c < 4; ++c) differs |= y1.at(t, 0, c) != y2.at(t, 0, c);
  CHECK(differs);
}

TEST_CASE("encoder-decoder frequency chain round-trips 161 -> 5 -> 161") {
  int freq = 161;
  std::vector<Conv2d> enc;
  for (int i = 0; i < 5; ++i) {
    auto s = plan::encoder_layer(i, 5, 1, 3, 161);
    s.in_ch = i == 0 ? 1 : 3;
    enc.push_back(random_conv(s, 200 + i));
    CHECK(enc.back().spec().in_freq == freq);
    freq = enc.back().out_freq();
  }
  CHECK(freq == 5);
  for (int j = 0; j < 5; ++j) {
    auto s = plan::decoder_layer(j, 5, 3, 2, 161);
    Deconv2dFreq dec = random_deconv(s, 300 + j);
    CHECK(s.in_freq == freq);
    freq = dec.out_freq();
  }
  CHECK(freq == 161);
}

TEST_CASE("deconv with zero kernel emits only bias") {
  auto s = plan::decoder_layer(0, 5, 3, 2, 161);
  Deconv2dFreq dec(s, const_floats(size_t(s.out_ch) * s.kt * s.kf * s.in_ch, 0.0f),
                   make_shared_floats(std::vector<float>{0.5f, 0.5f, 0.5f}));
  Tensor x = testing::random_tensor(3, 5, 3, 9);
  Tensor y = dec.forward(x);
  for (float v : y.v) CHECK(v == 0.5f);
}

TEST_CASE("deconv streaming equals offline") {
  auto s = plan::decoder_layer(4, 5, 6, 2, 161);  // 80 -> 161, kf 5
  Deconv2dFreq dec = random_deconv(s, 71);
  Tensor x = testing::random_tensor(8, 80, 6, 72);
  Tensor off = dec.forward(x);
  Tensor str = run_streaming(dec, x, dec.out_freq(), 2);
  CHECK(testing::max_abs_diff(off, str) < 1e-6);
}

TEST_CASE("cln of constant input is zero") {
  CumulativeLayerNorm cln(3, const_floats(3, 1.0f), const_floats(3, 0.0f));
  Tensor x(6, 4, 3);
  std::fill(x.v.begin(), x.v.end(), 2.5f);
  Tensor y = cln.forward(x);
  for (float v : y.v) CHECK(std::abs(v) < 1e-3);
}

TEST_CASE("cln frame t depends only on frames <= t") {
  CumulativeLayerNorm cln(2, random_floats(2, 41, 1.0f),
                          random_floats(2, 42, 0.5f));
  Tensor x = testing::random_tensor(10, 3, 2, 43);
  Tensor y1 = cln.forward(x);
  Tensor x2 = x;
  for (int f = 0; f < 3; ++f)
    for (int c = 0; c < 2; ++c) x2.at(7, f, c) = -9.0f;
  Tensor y2 = cln.forward(x2);
  for (int t = 0; t < 7; ++t)
    for (int f = 0; f < 3; ++f)
      for (int c = 0; c < 2; ++c) CHECK(y1.at(t, f, c) == y2.at(t, f, c));
}

TEST_CASE("cln matches a brute-force cumulative recomputation") {
  const int T = 50, F = 4, C = 3;
  auto gain = random_floats(C, 51, 1.0f);
  auto bias = random_floats(C, 52, 0.5f);
  CumulativeLayerNorm cln(C, gain, bias);
  Tensor x = testing::random_tensor(T, F, C, 53, 2.0f);
  Tensor y = cln.forward(x);

  // O(T^2) oracle: recompute the statistics from scratch for every frame.
  for (int t = 0; t < T; ++t) {
    double sum = 0.0, sumsq = 0.0;
    for (int tt = 0; tt <= t; ++tt)
      for (int f = 0; f < F; ++f)
        for (int c = 0; c < C; ++c) {
          const double v = x.at(tt, f, c);
          sum += v;
          sumsq += v * v;
        }
    const double cnt = double(t + 1) * F * C;
    const double mean = sum / cnt;
    const double var = std::max(0.0, sumsq / cnt - mean * mean);
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (int f = 0; f < F; ++f)
      for (int c = 0; c < C; ++c) {
        const double want =
            (*gain)[c] * ((double(x.at(t, f, c)) - mean) * inv) + (*bias)[c];
        CHECK(std::abs(double(y.at(t, f, c)) - want) < 1e-6);
      }
  }
}

TEST_CASE("cln streaming state equals offline and counts frames") {
  CumulativeLayerNorm cln(5, random_floats(5, 61, 1.0f),
                          random_floats(5, 62, 0.5f));
  Tensor x = testing::random_tensor(40, 2, 5, 63);
  Tensor off = cln.forward(x);
  auto st = cln.make_state();
  Tensor str = x;
  for (int t = 0; t < x.frames; ++t) cln.step(st, str.frame(t), 2, 5);
  CHECK(st.frames == 40);
  CHECK(testing::max_abs_diff(off, str) < 1e-9);
}

namespace {
Stcm make_stcm(int width, int hidden, int dilation, uint32_t seed,
               bool zero_expand = false) {
  auto sq = plan::pointwise(width, hidden);
  auto dc = plan::stcm_dconv(hidden, 5, dilation);
  auto ex = plan::pointwise(hidden, width);
  Conv2d expand =
      zero_expand
          ? Conv2d(ex, const_floats(size_t(width) * hidden, 0.0f),
                   const_floats(width, 0.0f))
          : random_conv(ex, seed + 6);
  return Stcm(random_conv(sq, seed),
              PReLU(hidden, const_floats(hidden, 0.25f)),
              CumulativeLayerNorm(hidden, random_floats(hidden, seed + 2, 1.0f),
                                  random_floats(hidden, seed + 3, 0.1f)),
              random_conv(dc, seed + 4),
              PReLU(hidden, const_floats(hidden, 0.25f)),
              CumulativeLayerNorm(hidden, random_floats(hidden, seed + 5, 1.0f),
                                  random_floats(hidden, seed + 5, 0.1f)),
              std::move(expand));
}
}  // namespace

TEST_CASE("stcm with zero expand stage is the identity") {
  Stcm block = make_stcm(12, 6, 4, 400, /*zero_expand=*/true);
  Tensor x = testing::random_tensor(20, 1, 12, 401);
  Tensor y = block.forward(x);
  CHECK(testing::max_abs_diff(x, y) == 0.0);
}

TEST_CASE("stcm is causal at dilation 32") {
  Stcm block = make_stcm(8, 4, 32, 500);
  Tensor x = testing::random_tensor(100, 1, 8, 501);
  Tensor y1 = block.forward(x);
  Tensor x2 = x;
  x2.at(60, 0, 3) += 1.0f;
  Tensor y2 = block.forward(x2);
  for (int t = 0; t < 60; ++t)
    for (int c = 0; c < 8; ++c) CHECK(y1.at(t, 0, c) == y2.at(t, 0, c));
  bool differs = false;
  for (int t = 60; t < 100; ++t)
    for (int c = 0; c < 8; ++c) differs |= y1.at(t, 0, c) != y2.at(t, 0, c);
  CHECK(differs);
}

TEST_CASE("stcm streaming equals offline on a 200-frame input") {
  Stcm block = make_stcm(16, 8, 8, 600);
  Tensor x = testing::random_tensor(200, 1, 16, 601);
  Tensor off = block.forward(x);
  auto st = block.make_state();
  Tensor str(200, 1, 16);
  for (int t = 0; t < 200; ++t) block.step(st, x.frame(t), str.frame(t));
  CHECK(testing::max_abs_diff(off, str) < 1e-6);
}

TEST_CASE("caham blends groups with softmax weights") {
  const int G = 3, n = 10;
  Caham att(G, random_floats(G * G, 700, 0.7f), random_floats(G, 701, 0.3f));

  SUBCASE("attention weights sum to one") {
    std::vector<Tensor> ys;
    for (int g = 0; g < G; ++g) ys.push_back(testing::random_tensor(1, 1, n, 710 + g));
    const float* taps[3] = {ys[0].frame(0), ys[1].frame(0), ys[2].frame(0)};
    auto w = att.attention_weights(taps, n);
    double sum = 0.0;
    for (float v : w) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("identical groups with symmetric weights: uniform softmax, mean + last") {
    Caham sym(G, const_floats(G * G, 0.2f), const_floats(G, 0.0f));
    Tensor y = testing::random_tensor(4, 1, n, 720);
    std::vector<Tensor> ys{y, y, y};
    Tensor out = sym.forward(ys);
    // weights are uniform, the blend is y, plus the last group: 2 * y
    for (size_t i = 0; i < out.v.size(); ++i)
      CHECK(out.v[i] == doctest::Approx(2.0f * y.v[i]).epsilon(1e-5));
  }

  SUBCASE("frame-local: changing frame t+1 leaves frame t untouched") {
    std::vector<Tensor> ys;
    for (int g = 0; g < G; ++g) ys.push_back(testing::random_tensor(6, 1, n, 730 + g));
    Tensor out1 = att.forward(ys);
    ys[1].at(4, 0, 2) += 3.0f;
    Tensor out2 = att.forward(ys);
    for (int t = 0; t < 4; ++t)
      for (int c = 0; c < n; ++c) CHECK(out1.at(t, 0, c) == out2.at(t, 0, c));
  }
}

TEST_CASE("mask head stays inside (-1, 1) and is zero at zero") {
  const int in_ch = 4, F = 33;
  auto a = plan::pointwise(in_ch, 1, F);
  MaskHead head(Conv2d(a, random_floats(in_ch, 800, 0.8f),
                       const_floats(1, 0.0f)),
                Conv2d(a, random_floats(in_ch, 801, 0.8f),
                       const_floats(1, 0.0f)));

  Tensor zero(3, F, in_ch);
  Tensor g0 = head.forward(zero);
  for (float v : g0.v) CHECK(v == 0.0f);  // tanh(0) = 0

  Tensor x = testing::random_tensor(5, F, in_ch, 802, 3.0f);
  Tensor g = head.forward(x);
  for (float v : g.v) {
    CHECK(v > -1.0f);
    CHECK(v < 1.0f);
  }
}

TEST_CASE("mask head saturates to the tanh branch when the gate opens") {
  const int in_ch = 2, F = 9;
  auto spec = plan::pointwise(in_ch, 1, F);
  Conv2d conv_a(spec, random_floats(in_ch, 810, 1.0f), const_floats(1, 0.0f));
  // huge positive bias: sigmoid ~ 1
  Conv2d conv_b(spec, const_floats(in_ch, 0.0f), const_floats(1, 50.0f));
  MaskHead head(conv_a, Conv2d(conv_b));
  Tensor x = testing::random_tensor(2, F, in_ch, 811);
  Tensor g = head.forward(x);
  Tensor ta = conv_a.forward(x);
  for (size_t i = 0; i < g.v.size(); ++i)
    CHECK(g.v[i] == doctest::Approx(std::tanh(ta.v[i])).epsilon(1e-6));
}

TEST_CASE("layer spec validation") {
  LayerSpec s;
  s.in_ch = 2;
  s.out_ch = 2;
  s.kt = 3;  // unsupported time kernel
  CHECK_THROWS_AS(s.validate(), ConfigError);

  LayerSpec ok = plan::pointwise(4, 4);
  Conv2d conv = random_conv(ok, 900);
  Tensor bad(2, 1, 3);
  CHECK_THROWS_AS((void)conv.forward(bad), DimensionError);
}

TEST_CASE("state shape mismatches are rejected") {
  LayerSpec a = plan::stcm_dconv(4, 5, 2);
  LayerSpec b = plan::stcm_dconv(4, 5, 8);
  Conv2d conv_a = random_conv(a, 910);
  Conv2d conv_b = random_conv(b, 912);
  auto st = conv_a.make_state();
  std::vector<float> in(4, 0.0f), out(4, 0.0f);
  CHECK_THROWS_AS(conv_b.step(st, in.data(), out.data()), StateError);
}
