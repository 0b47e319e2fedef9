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

#ifndef SFNET_NN_CORE_HPP_
#define SFNET_NN_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "sfnet/common.hpp"

namespace sfnet {

// T x F x C feature map, float32, channel axis contiguous.
struct Tensor {
  int frames = 0;
  int freq = 0;
  int ch = 0;
  std::vector<float> v;

  Tensor() = default;
  Tensor(int t, int f, int c)
      : frames(t), freq(f), ch(c), v(size_t(t) * f * c, 0.0f) {}

  float& at(int t, int f, int c) {
    return v[(size_t(t) * freq + f) * ch + c];
  }
  float at(int t, int f, int c) const {
    return v[(size_t(t) * freq + f) * ch + c];
  }
  size_t frame_size() const { return size_t(freq) * ch; }
  float* frame(int t) { return v.data() + size_t(t) * frame_size(); }
  const float* frame(int t) const { return v.data() + size_t(t) * frame_size(); }

  // Per-frame memory is already contiguous, so folding the frequency axis
  // into the channel axis is a relabeling.
  Tensor reshaped(int f, int c) const {
    if (size_t(f) * c != frame_size())
      throw DimensionError("tensor reshape: element count mismatch");
    Tensor out = *this;
    out.freq = f;
    out.ch = c;
    return out;
  }
};

using SharedFloats = std::shared_ptr<const std::vector<float>>;

inline SharedFloats make_shared_floats(std::vector<float> v) {
  return std::make_shared<const std::vector<float>>(std::move(v));
}

// Geometry of one convolutional layer. All layers are causal in time
// (stride 1, taps reach only current and past frames); frequency may be
// strided and zero-padded (conv) or upsampled and cropped (deconv).
struct LayerSpec {
  int in_ch = 0, out_ch = 0;
  int kt = 1, kf = 1;
  int in_freq = 1;
  int stride_f = 1;
  int dilation = 1;
  int pad_lo = 0, pad_hi = 0;

  void validate() const {
    if (kt != 1 && kt != 2 && kt != 5)
      throw ConfigError("layer: time kernel must be 1, 2 or 5");
    if (stride_f != 1 && stride_f != 2)
      throw ConfigError("layer: frequency stride must be 1 or 2");
    if (dilation < 1) throw ConfigError("layer: dilation must be >= 1");
    if (in_ch <= 0 || out_ch <= 0 || in_freq <= 0 || kf <= 0)
      throw ConfigError("layer: non-positive dimension");
  }

  int conv_out_freq() const {
    return (in_freq + pad_lo + pad_hi - kf) / stride_f + 1;
  }
  int deconv_out_freq() const {
    return (in_freq - 1) * stride_f + kf - pad_lo - pad_hi;
  }
  // Frames of history a streaming state has to retain.
  int history() const { return (kt - 1) * dilation; }
};

namespace detail {

// Unrolled dot product with independent partial sums; deterministic and
// wide enough for the autovectorizer.
inline float dot_f32(const float* a, const float* b, int n) {
  float s0 = 0.f, s1 = 0.f, s2 = 0.f, s3 = 0.f;
  float s4 = 0.f, s5 = 0.f, s6 = 0.f, s7 = 0.f;
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
    s4 += a[i + 4] * b[i + 4];
    s5 += a[i + 5] * b[i + 5];
    s6 += a[i + 6] * b[i + 6];
    s7 += a[i + 7] * b[i + 7];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
}

inline float sigmoid_f32(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// Ring of the last `history` input frames, zero-initialized so the first
// frames see the same implicit left padding as the offline pass.
struct FrameRing {
  std::vector<float> buf;  // history * frame_size
  size_t frame_size = 0;
  int history = 0;
  long long seen = 0;

  void init(int hist, size_t fsize) {
    history = hist;
    frame_size = fsize;
    buf.assign(size_t(hist) * fsize, 0.0f);
    seen = 0;
  }
  // Frame at lag `lag` (1 <= lag <= history) behind the next frame to be
  // pushed; zeros before the stream started.
  const float* lagged(int lag) const {
    const long long t = seen - lag;
    return buf.data() + size_t((t % history + history) % history) * frame_size;
  }
  void push(const float* frame) {
    if (history == 0) return;
    std::memcpy(buf.data() + size_t(seen % history) * frame_size, frame,
                frame_size * sizeof(float));
    ++seen;
  }
};

}  // namespace detail

// Causal 2-D convolution (cross-correlation plus bias). Time taps reach the
// current and past frames only; the frequency axis is zero-padded by
// (pad_lo, pad_hi) and strided. Offline and streaming paths run the same
// per-frame kernel, so they agree to the last bit given equal inputs.
class Conv2d {
 public:
  Conv2d(const LayerSpec& spec, SharedFloats kernel, SharedFloats bias)
      : spec_(spec), kernel_(std::move(kernel)), bias_(std::move(bias)) {
    spec_.validate();
    out_freq_ = spec_.conv_out_freq();
    if (out_freq_ <= 0) throw ConfigError("conv: empty output");
    const size_t want =
        size_t(spec_.out_ch) * spec_.kt * spec_.kf * spec_.in_ch;
    if (kernel_->size() != want) throw DimensionError("conv: kernel size");
    if (bias_->size() != size_t(spec_.out_ch))
      throw DimensionError("conv: bias size");
  }

  const LayerSpec& spec() const { return spec_; }
  int out_freq() const { return out_freq_; }

  struct State {
    detail::FrameRing ring;
  };

  State make_state() const {
    State st;
    st.ring.init(spec_.history(), size_t(spec_.in_freq) * spec_.in_ch);
    return st;
  }

  Tensor forward(const Tensor& x) const {
    check_input(x);
    Tensor y(x.frames, out_freq_, spec_.out_ch);
    std::vector<const float*> taps(spec_.kt);
    for (int t = 0; t < x.frames; ++t) {
      for (int jt = 0; jt < spec_.kt; ++jt) {
        const int tt = t - jt * spec_.dilation;
        taps[jt] = tt >= 0 ? x.frame(tt) : nullptr;
      }
      compute_frame(taps.data(), y.frame(t));
    }
    return y;
  }

  void step(State& st, const float* in, float* out) const {
    if (st.ring.history != spec_.history() ||
        (spec_.history() > 0 &&
         st.ring.frame_size != size_t(spec_.in_freq) * spec_.in_ch))
      throw StateError("conv step: state shape mismatch");
    const float* taps[8];
    taps[0] = in;
    for (int jt = 1; jt < spec_.kt; ++jt)
      taps[jt] = st.ring.lagged(jt * spec_.dilation);
    compute_frame(taps, out);
    st.ring.push(in);
  }

  // Stateless per-frame application; only valid for kt == 1 layers
  // (pointwise convs, mask heads, interaction gates).
  void apply_frame(const float* in, float* out) const {
    if (spec_.kt != 1) throw StateError("conv apply_frame: layer has memory");
    const float* taps[1] = {in};
    compute_frame(taps, out);
  }

 private:
  void check_input(const Tensor& x) const {
    if (x.ch != spec_.in_ch)
      throw DimensionError("conv: expected " + std::to_string(spec_.in_ch) +
                           " channels, got " + std::to_string(x.ch));
    if (x.freq != spec_.in_freq)
      throw DimensionError("conv: frequency size mismatch");
  }

  void compute_frame(const float* const* taps, float* out) const {
    const int ic = spec_.in_ch, oc = spec_.out_ch;
    const float* w = kernel_->data();
    const float* b = bias_->data();
    for (int fo = 0; fo < out_freq_; ++fo) {
      const int f0 = fo * spec_.stride_f - spec_.pad_lo;
      float* orow = out + size_t(fo) * oc;
      for (int co = 0; co < oc; ++co) {
        float acc = b[co];
        for (int jt = 0; jt < spec_.kt; ++jt) {
          const float* frame = taps[jt];
          if (frame == nullptr) continue;
          const float* wt = w + (size_t(co) * spec_.kt + jt) * spec_.kf * ic;
          for (int jf = 0; jf < spec_.kf; ++jf) {
            const int fi = f0 + jf;
            if (fi < 0 || fi >= spec_.in_freq) continue;
            acc += detail::dot_f32(wt + size_t(jf) * ic,
                                   frame + size_t(fi) * ic, ic);
          }
        }
        orow[co] = acc;
      }
    }
  }

  LayerSpec spec_;
  SharedFloats kernel_;
  SharedFloats bias_;
  int out_freq_ = 0;
};

// Frequency-upsampling transposed convolution, causal in time. pad_lo/pad_hi
// give the bins cropped from the full transposed output; with the crops
// mirroring the matching encoder layer's padding the size chain inverts
// exactly.
class Deconv2dFreq {
 public:
  Deconv2dFreq(const LayerSpec& spec, SharedFloats kernel, SharedFloats bias)
      : spec_(spec), kernel_(std::move(kernel)), bias_(std::move(bias)) {
    spec_.validate();
    out_freq_ = spec_.deconv_out_freq();
    if (out_freq_ <= 0) throw ConfigError("deconv: empty output");
    const size_t want =
        size_t(spec_.out_ch) * spec_.kt * spec_.kf * spec_.in_ch;
    if (kernel_->size() != want) throw DimensionError("deconv: kernel size");
    if (bias_->size() != size_t(spec_.out_ch))
      throw DimensionError("deconv: bias size");
  }

  const LayerSpec& spec() const { return spec_; }
  int out_freq() const { return out_freq_; }

  struct State {
    detail::FrameRing ring;
  };

  State make_state() const {
    State st;
    st.ring.init(spec_.history(), size_t(spec_.in_freq) * spec_.in_ch);
    return st;
  }

  Tensor forward(const Tensor& x) const {
    if (x.ch != spec_.in_ch || x.freq != spec_.in_freq)
      throw DimensionError("deconv: input shape mismatch");
    Tensor y(x.frames, out_freq_, spec_.out_ch);
    std::vector<const float*> taps(spec_.kt);
    for (int t = 0; t < x.frames; ++t) {
      for (int jt = 0; jt < spec_.kt; ++jt) {
        const int tt = t - jt * spec_.dilation;
        taps[jt] = tt >= 0 ? x.frame(tt) : nullptr;
      }
      compute_frame(taps.data(), y.frame(t));
    }
    return y;
  }

  void step(State& st, const float* in, float* out) const {
    if (st.ring.history != spec_.history())
      throw StateError("deconv step: state shape mismatch");
    const float* taps[8];
    taps[0] = in;
    for (int jt = 1; jt < spec_.kt; ++jt)
      taps[jt] = st.ring.lagged(jt * spec_.dilation);
    compute_frame(taps, out);
    st.ring.push(in);
  }

 private:
  void compute_frame(const float* const* taps, float* out) const {
    const int ic = spec_.in_ch, oc = spec_.out_ch;
    const float* w = kernel_->data();
    const float* b = bias_->data();
    for (int fo = 0; fo < out_freq_; ++fo) {
      float* orow = out + size_t(fo) * oc;
      for (int co = 0; co < oc; ++co) {
        float acc = b[co];
        for (int jt = 0; jt < spec_.kt; ++jt) {
          const float* frame = taps[jt];
          if (frame == nullptr) continue;
          const float* wt = w + (size_t(co) * spec_.kt + jt) * spec_.kf * ic;
          for (int jf = 0; jf < spec_.kf; ++jf) {
            const int u = fo + spec_.pad_lo - jf;
            if (u < 0 || u % spec_.stride_f != 0) continue;
            const int fi = u / spec_.stride_f;
            if (fi >= spec_.in_freq) continue;
            acc += detail::dot_f32(wt + size_t(jf) * ic,
                                   frame + size_t(fi) * ic, ic);
          }
        }
        orow[co] = acc;
      }
    }
  }

  LayerSpec spec_;
  SharedFloats kernel_;
  SharedFloats bias_;
  int out_freq_ = 0;
};

// Cumulative layer norm: frame t is normalized with the mean/variance of all
// entries (frequency and channel axes) of frames 0..t, then scaled per
// channel. Running sums are double so long streams do not drift.
class CumulativeLayerNorm {
 public:
  static constexpr double kEps = 1e-5;

  CumulativeLayerNorm(int ch, SharedFloats gain, SharedFloats bias)
      : ch_(ch), gain_(std::move(gain)), bias_(std::move(bias)) {
    if (gain_->size() != size_t(ch_) || bias_->size() != size_t(ch_))
      throw DimensionError("cln: parameter size");
  }

  struct State {
    double sum = 0.0;
    double sumsq = 0.0;
    long long frames = 0;
  };

  State make_state() const { return {}; }

  Tensor forward(const Tensor& x) const {
    if (x.ch != ch_) throw DimensionError("cln: channel mismatch");
    Tensor y = x;
    State st;
    for (int t = 0; t < y.frames; ++t) step(st, y.frame(t), y.freq, y.ch);
    return y;
  }

  void step(State& st, float* frame, int freq, int ch) const {
    if (ch != ch_) throw DimensionError("cln step: channel mismatch");
    const size_t n = size_t(freq) * ch;
    double fs = 0.0, fss = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double v = frame[i];
      fs += v;
      fss += v * v;
    }
    st.sum += fs;
    st.sumsq += fss;
    st.frames += 1;
    const double cnt = double(st.frames) * n;
    const double mean = st.sum / cnt;
    double var = st.sumsq / cnt - mean * mean;
    if (var < 0.0) var = 0.0;
    const double inv = 1.0 / std::sqrt(var + kEps);
    const float* g = gain_->data();
    const float* b = bias_->data();
    for (int f = 0; f < freq; ++f) {
      float* row = frame + size_t(f) * ch;
      for (int c = 0; c < ch; ++c)
        row[c] = float(g[c] * ((row[c] - mean) * inv) + b[c]);
    }
  }

 private:
  int ch_;
  SharedFloats gain_;
  SharedFloats bias_;
};

class PReLU {
 public:
  PReLU(int ch, SharedFloats slope) : ch_(ch), slope_(std::move(slope)) {
    if (slope_->size() != size_t(ch_)) throw DimensionError("prelu: slope size");
  }

  void apply(Tensor& x) const {
    if (x.ch != ch_) throw DimensionError("prelu: channel mismatch");
    for (int t = 0; t < x.frames; ++t) apply_frame(x.frame(t), x.freq, x.ch);
  }

  void apply_frame(float* frame, int freq, int ch) const {
    const float* s = slope_->data();
    for (int f = 0; f < freq; ++f) {
      float* row = frame + size_t(f) * ch;
      for (int c = 0; c < ch; ++c)
        if (row[c] < 0.0f) row[c] *= s[c];
    }
  }

 private:
  int ch_;
  SharedFloats slope_;
};

// Squeezed temporal convolution module over the flattened bottleneck:
//   pointwise squeeze -> PReLU -> cLN -> dilated causal conv (kernel 5)
//   -> PReLU -> cLN -> pointwise expand, added back onto the input.
// With a zero-initialized expand stage the block is the identity.
class Stcm {
 public:
  Stcm(Conv2d squeeze, PReLU act1, CumulativeLayerNorm norm1, Conv2d dconv,
       PReLU act2, CumulativeLayerNorm norm2, Conv2d expand)
      : squeeze_(std::move(squeeze)),
        act1_(std::move(act1)),
        norm1_(std::move(norm1)),
        dconv_(std::move(dconv)),
        act2_(std::move(act2)),
        norm2_(std::move(norm2)),
        expand_(std::move(expand)),
        width_(squeeze_.spec().in_ch),
        hidden_(squeeze_.spec().out_ch) {}

  int width() const { return width_; }

  struct State {
    Conv2d::State dconv;
    CumulativeLayerNorm::State n1, n2;
    std::vector<float> h1, h2;  // scratch, hidden-width
  };

  State make_state() const {
    State st;
    st.dconv = dconv_.make_state();
    st.h1.assign(hidden_, 0.0f);
    st.h2.assign(hidden_, 0.0f);
    return st;
  }

  Tensor forward(const Tensor& x) const {
    if (x.ch != width_ || x.freq != 1)
      throw DimensionError("stcm: expected T x 1 x width input");
    Tensor h = squeeze_.forward(x);
    act1_.apply(h);
    h = norm1_.forward(h);
    h = dconv_.forward(h);
    act2_.apply(h);
    h = norm2_.forward(h);
    Tensor e = expand_.forward(h);
    Tensor y = x;
    for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += e.v[i];
    return y;
  }

  void step(State& st, const float* in, float* out) const {
    squeeze_.apply_frame(in, st.h1.data());
    act1_.apply_frame(st.h1.data(), 1, hidden_);
    norm1_.step(st.n1, st.h1.data(), 1, hidden_);
    dconv_.step(st.dconv, st.h1.data(), st.h2.data());
    act2_.apply_frame(st.h2.data(), 1, hidden_);
    norm2_.step(st.n2, st.h2.data(), 1, hidden_);
    expand_.apply_frame(st.h2.data(), out);
    for (int i = 0; i < width_; ++i) out[i] += in[i];
  }

 private:
  Conv2d squeeze_;
  PReLU act1_;
  CumulativeLayerNorm norm1_;
  Conv2d dconv_;
  PReLU act2_;
  CumulativeLayerNorm norm2_;
  Conv2d expand_;
  int width_;
  int hidden_;
};

// Causal hierarchical attention over the group outputs of the bottleneck.
// Each group is pooled to a scalar per frame (mean over the non-time axes),
// a learned G x G projection scores the pooled vector, and the softmax
// weights blend the groups. The last group is always passed through. All of
// it is frame-local, so streaming needs no state.
class Caham {
 public:
  Caham(int groups, SharedFloats proj_w, SharedFloats proj_b)
      : groups_(groups), w_(std::move(proj_w)), b_(std::move(proj_b)) {
    if (groups_ < 2 || groups_ > 16)
      throw ConfigError("caham: group count out of range");
    if (w_->size() != size_t(groups_) * groups_ ||
        b_->size() != size_t(groups_))
      throw DimensionError("caham: projection size");
  }

  int groups() const { return groups_; }

  Tensor forward(const std::vector<Tensor>& ys) const {
    if (ys.size() != size_t(groups_))
      throw DimensionError("caham: group count mismatch");
    for (const auto& y : ys)
      if (y.frames != ys[0].frames || y.freq != ys[0].freq ||
          y.ch != ys[0].ch)
        throw DimensionError("caham: group shape mismatch");
    Tensor out(ys[0].frames, ys[0].freq, ys[0].ch);
    std::vector<const float*> taps(groups_);
    const int n = int(ys[0].frame_size());
    for (int t = 0; t < out.frames; ++t) {
      for (int g = 0; g < groups_; ++g) taps[g] = ys[g].frame(t);
      step(taps.data(), n, out.frame(t));
    }
    return out;
  }

  void step(const float* const* frames, int n, float* out) const {
    double pooled[16];
    double scores[16];
    for (int g = 0; g < groups_; ++g) {
      double s = 0.0;
      const float* y = frames[g];
      for (int i = 0; i < n; ++i) s += y[i];
      pooled[g] = s / n;
    }
    const float* W = w_->data();
    const float* B = b_->data();
    double mx = -1e300;
    for (int g = 0; g < groups_; ++g) {
      double s = B[g];
      for (int j = 0; j < groups_; ++j) s += double(W[g * groups_ + j]) * pooled[j];
      scores[g] = s;
      mx = std::max(mx, s);
    }
    double denom = 0.0;
    for (int g = 0; g < groups_; ++g) {
      scores[g] = std::exp(scores[g] - mx);
      denom += scores[g];
    }
    float wg[16];
    for (int g = 0; g < groups_; ++g) wg[g] = float(scores[g] / denom);
    const float* last = frames[groups_ - 1];
    for (int i = 0; i < n; ++i) {
      float acc = last[i];
      for (int g = 0; g < groups_; ++g) acc += wg[g] * frames[g][i];
      out[i] = acc;
    }
  }

  // Softmax weights for one frame; exposed for tests.
  std::vector<float> attention_weights(const float* const* frames,
                                       int n) const {
    double pooled[16];
    for (int g = 0; g < groups_; ++g) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += frames[g][i];
      pooled[g] = s / n;
    }
    const float* W = w_->data();
    const float* B = b_->data();
    std::vector<double> scores(groups_);
    double mx = -1e300;
    for (int g = 0; g < groups_; ++g) {
      double s = B[g];
      for (int j = 0; j < groups_; ++j) s += double(W[g * groups_ + j]) * pooled[j];
      scores[g] = s;
      mx = std::max(mx, s);
    }
    double denom = 0.0;
    for (int g = 0; g < groups_; ++g) {
      scores[g] = std::exp(scores[g] - mx);
      denom += scores[g];
    }
    std::vector<float> out(groups_);
    for (int g = 0; g < groups_; ++g) out[g] = float(scores[g] / denom);
    return out;
  }

 private:
  int groups_;
  SharedFloats w_;
  SharedFloats b_;
};

// Dual-path mask head: gain = tanh(conv_a(x)) * sigmoid(conv_b(x)), one
// value per bin, strictly inside (-1, 1).
class MaskHead {
 public:
  MaskHead(Conv2d a, Conv2d b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.spec().out_ch != 1 || b_.spec().out_ch != 1)
      throw ConfigError("mask head: branches must emit one channel");
  }

  int out_freq() const { return a_.out_freq(); }

  Tensor forward(const Tensor& x) const {
    Tensor ta = a_.forward(x);
    Tensor tb = b_.forward(x);
    Tensor g(x.frames, ta.freq, 1);
    for (size_t i = 0; i < g.v.size(); ++i)
      g.v[i] = std::tanh(ta.v[i]) * detail::sigmoid_f32(tb.v[i]);
    return g;
  }

  void step(const float* in, float* gain) const {
    thread_local std::vector<float> ta, tb;
    ta.resize(out_freq());
    tb.resize(out_freq());
    a_.apply_frame(in, ta.data());
    b_.apply_frame(in, tb.data());
    for (int f = 0; f < out_freq(); ++f)
      gain[f] = std::tanh(ta[f]) * detail::sigmoid_f32(tb[f]);
  }

 private:
  Conv2d a_;
  Conv2d b_;
};

}  // namespace sfnet

#endif  // SFNET_NN_CORE_HPP_
