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

#ifndef SFNET_GRAPH_HPP_
#define SFNET_GRAPH_HPP_

#include <complex>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sfnet/arch.hpp"
#include "sfnet/band_ops.hpp"
#include "sfnet/common.hpp"
#include "sfnet/frontend.hpp"
#include "sfnet/nn_core.hpp"
#include "sfnet/weights.hpp"

namespace sfnet {

struct EnhanceOptions {
  // Bypass the mask heads: unit gains, zero residual. The signal path
  // (analysis, band split, fusion, synthesis, stream assembly) still runs,
  // so the engine acts as a pure passthrough.
  bool identity = false;
};

// ---------------------------------------------------------------------------
// Blocks assembled from named tensors.

struct EncBlock {
  Conv2d conv;
  CumulativeLayerNorm cln;
  PReLU act;

  struct State {
    Conv2d::State conv;
    CumulativeLayerNorm::State cln;
  };
  State make_state() const { return {conv.make_state(), {}}; }

  Tensor forward(const Tensor& x) const {
    Tensor y = conv.forward(x);
    y = cln.forward(y);
    act.apply(y);
    return y;
  }
  void step(State& st, const float* in, float* out) const {
    conv.step(st.conv, in, out);
    cln.step(st.cln, out, conv.out_freq(), conv.spec().out_ch);
    act.apply_frame(out, conv.out_freq(), conv.spec().out_ch);
  }
  int out_freq() const { return conv.out_freq(); }
  int out_ch() const { return conv.spec().out_ch; }
};

struct DecBlock {
  Deconv2dFreq deconv;
  CumulativeLayerNorm cln;
  PReLU act;

  struct State {
    Deconv2dFreq::State deconv;
    CumulativeLayerNorm::State cln;
  };
  State make_state() const { return {deconv.make_state(), {}}; }

  Tensor forward(const Tensor& x) const {
    Tensor y = deconv.forward(x);
    y = cln.forward(y);
    act.apply(y);
    return y;
  }
  void step(State& st, const float* in, float* out) const {
    deconv.step(st.deconv, in, out);
    cln.step(st.cln, out, deconv.out_freq(), deconv.spec().out_ch);
    act.apply_frame(out, deconv.out_freq(), deconv.spec().out_ch);
  }
  int out_freq() const { return deconv.out_freq(); }
  int out_ch() const { return deconv.spec().out_ch; }
};

namespace detail {

inline Conv2d make_conv(const WeightSet& ws, const std::string& prefix,
                        const LayerSpec& s) {
  return Conv2d(s,
                ws.require(prefix + ".kernel", {s.out_ch, s.kt, s.kf, s.in_ch}),
                ws.require(prefix + ".bias", {s.out_ch}));
}

inline Deconv2dFreq make_deconv(const WeightSet& ws, const std::string& prefix,
                                const LayerSpec& s) {
  return Deconv2dFreq(
      s, ws.require(prefix + ".kernel", {s.out_ch, s.kt, s.kf, s.in_ch}),
      ws.require(prefix + ".bias", {s.out_ch}));
}

inline CumulativeLayerNorm make_cln(const WeightSet& ws,
                                    const std::string& prefix, int ch) {
  return CumulativeLayerNorm(ch, ws.require(prefix + ".cln.gain", {ch}),
                             ws.require(prefix + ".cln.bias", {ch}));
}

inline PReLU make_prelu(const WeightSet& ws, const std::string& prefix,
                        int ch) {
  return PReLU(ch, ws.require(prefix + ".prelu.slope", {ch}));
}

inline Tensor concat_ch(const Tensor& a, const Tensor& b) {
  if (a.frames != b.frames || a.freq != b.freq)
    throw DimensionError("concat: shape mismatch");
  Tensor out(a.frames, a.freq, a.ch + b.ch);
  for (int t = 0; t < a.frames; ++t)
    for (int f = 0; f < a.freq; ++f) {
      float* row = out.frame(t) + size_t(f) * out.ch;
      std::memcpy(row, a.frame(t) + size_t(f) * a.ch,
                  size_t(a.ch) * sizeof(float));
      std::memcpy(row + a.ch, b.frame(t) + size_t(f) * b.ch,
                  size_t(b.ch) * sizeof(float));
    }
  return out;
}

}  // namespace detail

class EncoderStack {
 public:
  EncoderStack() = default;
  EncoderStack(const WeightSet& ws, const std::string& prefix, int depth,
               int in_ch, int width, int band_bins, int final_ch = -1) {
    for (int i = 0; i < depth; ++i) {
      const auto s =
          plan::encoder_layer(i, depth, in_ch, width, band_bins, final_ch);
      const std::string lp = prefix + "." + std::to_string(i);
      blocks_.push_back(EncBlock{detail::make_conv(ws, lp + ".conv", s),
                                 detail::make_cln(ws, lp, s.out_ch),
                                 detail::make_prelu(ws, lp, s.out_ch)});
    }
  }

  struct State {
    std::vector<EncBlock::State> blocks;
    std::vector<std::vector<float>> outs;
  };
  State make_state() const {
    State st;
    for (const auto& b : blocks_) {
      st.blocks.push_back(b.make_state());
      st.outs.emplace_back(size_t(b.out_freq()) * b.out_ch(), 0.0f);
    }
    return st;
  }

  Tensor forward(const Tensor& x) const {
    Tensor h = x;
    for (const auto& b : blocks_) h = b.forward(h);
    return h;
  }
  // Returns the final feature frame (owned by the state).
  const float* step(State& st, const float* in) const {
    const float* cur = in;
    for (size_t i = 0; i < blocks_.size(); ++i) {
      blocks_[i].step(st.blocks[i], cur, st.outs[i].data());
      cur = st.outs[i].data();
    }
    return cur;
  }

  int out_freq() const { return blocks_.back().out_freq(); }
  int out_ch() const { return blocks_.back().out_ch(); }

 private:
  std::vector<EncBlock> blocks_;
};

class DecoderStack {
 public:
  DecoderStack() = default;
  DecoderStack(const WeightSet& ws, const std::string& prefix, int depth,
               int width, int head_ch, int band_bins) {
    for (int j = 0; j < depth; ++j) {
      const auto s = plan::decoder_layer(j, depth, width, head_ch, band_bins);
      const std::string lp = prefix + "." + std::to_string(j);
      blocks_.push_back(DecBlock{detail::make_deconv(ws, lp + ".deconv", s),
                                 detail::make_cln(ws, lp, s.out_ch),
                                 detail::make_prelu(ws, lp, s.out_ch)});
    }
  }

  struct State {
    std::vector<DecBlock::State> blocks;
    std::vector<std::vector<float>> outs;
  };
  State make_state() const {
    State st;
    for (const auto& b : blocks_) {
      st.blocks.push_back(b.make_state());
      st.outs.emplace_back(size_t(b.out_freq()) * b.out_ch(), 0.0f);
    }
    return st;
  }

  Tensor forward(const Tensor& x) const {
    Tensor h = x;
    for (const auto& b : blocks_) h = b.forward(h);
    return h;
  }
  const float* step(State& st, const float* in) const {
    const float* cur = in;
    for (size_t i = 0; i < blocks_.size(); ++i) {
      blocks_[i].step(st.blocks[i], cur, st.outs[i].data());
      cur = st.outs[i].data();
    }
    return cur;
  }

 private:
  std::vector<DecBlock> blocks_;
};

// Grouped S-TCM stack plus the attention that fuses the group outputs.
class Bottleneck {
 public:
  Bottleneck() = default;
  Bottleneck(const WeightSet& ws, const std::string& stcm_prefix,
             const std::string& aham_prefix, const ArchConfig& arch, int width,
             int hidden, int groups)
      : groups_(groups),
        per_group_(int(arch.dilations.size())),
        width_(width),
        aham_(groups,
              ws.require(aham_prefix + ".proj.kernel", {groups, groups}),
              ws.require(aham_prefix + ".proj.bias", {groups})) {
    for (int g = 0; g < groups; ++g)
      for (int k = 0; k < per_group_; ++k) {
        const std::string bp =
            stcm_prefix + ".g" + std::to_string(g) + ".b" + std::to_string(k);
        const auto sq = plan::pointwise(width, hidden);
        const auto dc =
            plan::stcm_dconv(hidden, arch.stcm_kernel, arch.dilations[k]);
        const auto ex = plan::pointwise(hidden, width);
        blocks_.emplace_back(
            detail::make_conv(ws, bp + ".squeeze", sq),
            detail::make_prelu(ws, bp + ".squeeze", hidden),
            detail::make_cln(ws, bp + ".squeeze", hidden),
            detail::make_conv(ws, bp + ".dconv", dc),
            detail::make_prelu(ws, bp + ".dconv", hidden),
            detail::make_cln(ws, bp + ".dconv", hidden),
            detail::make_conv(ws, bp + ".expand", ex));
      }
  }

  struct State {
    std::vector<Stcm::State> blocks;
    std::vector<std::vector<float>> group_out;
    std::vector<float> ping, pong;
  };
  State make_state() const {
    State st;
    for (const auto& b : blocks_) st.blocks.push_back(b.make_state());
    st.group_out.assign(groups_, std::vector<float>(width_, 0.0f));
    st.ping.assign(width_, 0.0f);
    st.pong.assign(width_, 0.0f);
    return st;
  }

  Tensor forward(const Tensor& x) const {
    Tensor h = x;
    std::vector<Tensor> group_out;
    group_out.reserve(groups_);
    for (int g = 0; g < groups_; ++g) {
      for (int k = 0; k < per_group_; ++k)
        h = blocks_[size_t(g) * per_group_ + k].forward(h);
      group_out.push_back(h);
    }
    return aham_.forward(group_out);
  }

  void step(State& st, const float* in, float* out) const {
    std::copy(in, in + width_, st.ping.begin());
    float* cur = st.ping.data();
    float* nxt = st.pong.data();
    for (int g = 0; g < groups_; ++g) {
      for (int k = 0; k < per_group_; ++k) {
        blocks_[size_t(g) * per_group_ + k].step(
            st.blocks[size_t(g) * per_group_ + k], cur, nxt);
        std::swap(cur, nxt);
      }
      std::copy(cur, cur + width_, st.group_out[g].begin());
    }
    const float* taps[16];
    for (int g = 0; g < groups_; ++g) taps[g] = st.group_out[g].data();
    aham_.step(taps, width_, out);
  }

  int width() const { return width_; }
  const Caham& aham() const { return aham_; }

 private:
  int groups_ = 0;
  int per_group_ = 0;
  int width_ = 0;
  std::vector<Stcm> blocks_;
  Caham aham_{2, make_shared_floats({0, 0, 0, 0}), make_shared_floats({0, 0})};
};

// Gated guidance injection: out = target + sigmoid(conv(cat)) * guide.
class Interaction {
 public:
  Interaction() = default;
  Interaction(const WeightSet& ws, const std::string& prefix, int ch,
              int freq)
      : gate_(detail::make_conv(ws, prefix + ".gate",
                                plan::pointwise(2 * ch, ch, freq))),
        ch_(ch),
        freq_(freq) {}

  Tensor forward(const Tensor& target, const Tensor& guide) const {
    if (target.frames != guide.frames || target.freq != guide.freq ||
        target.ch != guide.ch)
      throw DimensionError("interaction: feature shape mismatch");
    Tensor cat = detail::concat_ch(target, guide);
    Tensor m = gate_.forward(cat);
    Tensor out = target;
    for (size_t i = 0; i < out.v.size(); ++i)
      out.v[i] += detail::sigmoid_f32(m.v[i]) * guide.v[i];
    return out;
  }

  struct State {
    std::vector<float> cat, mask;
  };
  State make_state() const {
    State st;
    st.cat.assign(size_t(freq_) * 2 * ch_, 0.0f);
    st.mask.assign(size_t(freq_) * ch_, 0.0f);
    return st;
  }

  void step(State& st, const float* target, const float* guide,
            float* out) const {
    for (int f = 0; f < freq_; ++f) {
      std::memcpy(&st.cat[size_t(f) * 2 * ch_], target + size_t(f) * ch_,
                  size_t(ch_) * sizeof(float));
      std::memcpy(&st.cat[size_t(f) * 2 * ch_ + ch_], guide + size_t(f) * ch_,
                  size_t(ch_) * sizeof(float));
    }
    gate_.apply_frame(st.cat.data(), st.mask.data());
    const int n = freq_ * ch_;
    for (int i = 0; i < n; ++i)
      out[i] = target[i] + detail::sigmoid_f32(st.mask[i]) * guide[i];
  }

 private:
  Conv2d gate_{plan::pointwise(1, 1),
               make_shared_floats({0.0f}), make_shared_floats({0.0f})};
  int ch_ = 0;
  int freq_ = 0;
};

// ---------------------------------------------------------------------------
// Sub-networks.

// Magnitude-estimation stream: encoder, shared bottleneck, decoder, dual-path
// mask. Input is the compressed low-band magnitude, output a gain in (-1, 1).
class MeNet {
 public:
  MeNet(const WeightSet& ws, const ArchConfig& arch, int band_bins)
      : enc_(ws, "dslb.me.enc", arch.encoder_depth, 1, arch.dslb_channels,
             band_bins),
        bottleneck_(ws, arch.share_stcm ? "dslb.stcm" : "dslb.me.stcm",
                    "dslb.me.aham", arch, bottleneck_width(arch, band_bins),
                    arch.stcm_hidden_dslb, arch.dslb_tcm_groups),
        dec_(ws, "dslb.me.dec", arch.encoder_depth, arch.dslb_channels,
             arch.head_channels, band_bins),
        mask_(detail::make_conv(
                  ws, "dslb.me.mask.a",
                  plan::pointwise(arch.head_channels, 1, band_bins)),
              detail::make_conv(
                  ws, "dslb.me.mask.b",
                  plan::pointwise(arch.head_channels, 1, band_bins))),
        band_bins_(band_bins) {}

  static int bottleneck_width(const ArchConfig& arch, int band_bins) {
    return plan::freq_chain(band_bins, arch.encoder_depth).back() *
           arch.dslb_channels;
  }

  // T x bins x 1 compressed magnitude -> T x bins x 1 gain.
  Tensor forward(const Tensor& mag) const {
    Tensor h = enc_.forward(mag);
    Tensor z = h.reshaped(1, int(h.frame_size()));
    z = bottleneck_.forward(z);
    Tensor d = z.reshaped(enc_.out_freq(), enc_.out_ch());
    d = dec_.forward(d);
    return mask_.forward(d);
  }

  struct State {
    EncoderStack::State enc;
    Bottleneck::State bot;
    DecoderStack::State dec;
    std::vector<float> z;
  };
  State make_state() const {
    State st{enc_.make_state(), bottleneck_.make_state(), dec_.make_state(),
             std::vector<float>(size_t(bottleneck_.width()), 0.0f)};
    return st;
  }

  void step(State& st, const float* mag, float* gain) const {
    const float* h = enc_.step(st.enc, mag);
    bottleneck_.step(st.bot, h, st.z.data());
    const float* d = dec_.step(st.dec, st.z.data());
    mask_.step(d, gain);
  }

 private:
  EncoderStack enc_;
  Bottleneck bottleneck_;
  DecoderStack dec_;
  MaskHead mask_;
  int band_bins_;
};

// Complex-purification stream: real+imag input, shared bottleneck, two
// decoders emitting the unbounded residual RI components.
class CpNet {
 public:
  CpNet(const WeightSet& ws, const ArchConfig& arch, int band_bins)
      : enc_(ws, "dslb.cp.enc", arch.encoder_depth, 2, arch.dslb_channels,
             band_bins),
        bottleneck_(ws, arch.share_stcm ? "dslb.stcm" : "dslb.cp.stcm",
                    "dslb.cp.aham", arch,
                    MeNet::bottleneck_width(arch, band_bins),
                    arch.stcm_hidden_dslb, arch.dslb_tcm_groups),
        dec_r_(ws, "dslb.cp.dec_r", arch.encoder_depth, arch.dslb_channels,
               arch.head_channels, band_bins),
        dec_i_(ws, "dslb.cp.dec_i", arch.encoder_depth, arch.dslb_channels,
               arch.head_channels, band_bins),
        head_r_(detail::make_conv(
            ws, "dslb.cp.head_r",
            plan::pointwise(arch.head_channels, 1, band_bins))),
        head_i_(detail::make_conv(
            ws, "dslb.cp.head_i",
            plan::pointwise(arch.head_channels, 1, band_bins))) {}

  // T x bins x 2 (real, imag) -> residual (real, imag), each T x bins x 1.
  std::pair<Tensor, Tensor> forward(const Tensor& ri) const {
    Tensor h = enc_.forward(ri);
    Tensor z = h.reshaped(1, int(h.frame_size()));
    z = bottleneck_.forward(z);
    Tensor d = z.reshaped(enc_.out_freq(), enc_.out_ch());
    Tensor rr = head_r_.forward(dec_r_.forward(d));
    Tensor ri_out = head_i_.forward(dec_i_.forward(d));
    return {std::move(rr), std::move(ri_out)};
  }

  struct State {
    EncoderStack::State enc;
    Bottleneck::State bot;
    DecoderStack::State dec_r, dec_i;
    std::vector<float> z;
  };
  State make_state() const {
    return {enc_.make_state(), bottleneck_.make_state(), dec_r_.make_state(),
            dec_i_.make_state(),
            std::vector<float>(size_t(bottleneck_.width()), 0.0f)};
  }

  void step(State& st, const float* ri, float* res_r, float* res_i) const {
    const float* h = enc_.step(st.enc, ri);
    bottleneck_.step(st.bot, h, st.z.data());
    const float* dr = dec_r_.step(st.dec_r, st.z.data());
    head_r_.apply_frame(dr, res_r);
    const float* di = dec_i_.step(st.dec_i, st.z.data());
    head_i_.apply_frame(di, res_i);
  }

 private:
  EncoderStack enc_;
  Bottleneck bottleneck_;
  DecoderStack dec_r_, dec_i_;
  Conv2d head_r_, head_i_;
};

// Middle/high-band magnitude masker: a main encoder for the noisy band, a
// guide encoder for the lower-band estimates, the gated interaction, then
// the usual bottleneck-decoder-mask trunk.
class BandNet {
 public:
  BandNet(const WeightSet& ws, const std::string& net, const ArchConfig& arch,
          int band_bins, int guide_in_ch)
      : enc_(ws, net + ".enc", arch.encoder_depth, 1, arch.band_channels,
             band_bins),
        guide_enc_(ws, net + ".guide", arch.encoder_depth, guide_in_ch,
                   arch.guide_channels, band_bins, arch.band_channels),
        inter_(ws, net + ".inter", arch.band_channels,
               plan::freq_chain(band_bins, arch.encoder_depth).back()),
        bottleneck_(ws, net + ".stcm", net + ".aham", arch,
                    plan::freq_chain(band_bins, arch.encoder_depth).back() *
                        arch.band_channels,
                    arch.stcm_hidden_band, arch.band_tcm_groups),
        dec_(ws, net + ".dec", arch.encoder_depth, arch.band_channels,
             arch.head_channels, band_bins),
        mask_(detail::make_conv(
                  ws, net + ".mask.a",
                  plan::pointwise(arch.head_channels, 1, band_bins)),
              detail::make_conv(
                  ws, net + ".mask.b",
                  plan::pointwise(arch.head_channels, 1, band_bins))) {}

  // mag: T x bins x 1 noisy magnitude; guide: T x bins x guide_in_ch
  // estimated lower-band magnitudes. Returns the T x bins x 1 gain.
  Tensor forward(const Tensor& mag, const Tensor& guide) const {
    Tensor ft = enc_.forward(mag);
    Tensor fg = guide_enc_.forward(guide);
    Tensor inter = inter_.forward(ft, fg);
    Tensor z = inter.reshaped(1, int(inter.frame_size()));
    z = bottleneck_.forward(z);
    Tensor d = z.reshaped(enc_.out_freq(), enc_.out_ch());
    d = dec_.forward(d);
    return mask_.forward(d);
  }

  struct State {
    EncoderStack::State enc, guide;
    Interaction::State inter;
    Bottleneck::State bot;
    DecoderStack::State dec;
    std::vector<float> fi, z;
  };
  State make_state() const {
    State st{enc_.make_state(),       guide_enc_.make_state(),
             inter_.make_state(),     bottleneck_.make_state(),
             dec_.make_state(),       {},
             {}};
    st.fi.assign(size_t(bottleneck_.width()), 0.0f);
    st.z.assign(size_t(bottleneck_.width()), 0.0f);
    return st;
  }

  void step(State& st, const float* mag, const float* guide,
            float* gain) const {
    const float* ft = enc_.step(st.enc, mag);
    const float* fg = guide_enc_.step(st.guide, guide);
    inter_.step(st.inter, ft, fg, st.fi.data());
    bottleneck_.step(st.bot, st.fi.data(), st.z.data());
    const float* d = dec_.step(st.dec, st.z.data());
    mask_.step(d, gain);
  }

  const Interaction& interaction() const { return inter_; }

 private:
  EncoderStack enc_, guide_enc_;
  Interaction inter_;
  Bottleneck bottleneck_;
  DecoderStack dec_;
  MaskHead mask_;
};

// ---------------------------------------------------------------------------
// Whole-pipeline engine.

class EnhancerStream;

namespace detail {

struct GraphCore {
  std::shared_ptr<const WeightSet> weights;
  EngineConfig cfg;
  MeNet me;
  CpNet cp;
  BandNet mbm;
  BandNet hbm;
  Fft fft;
  std::vector<double> window;

  explicit GraphCore(std::shared_ptr<const WeightSet> ws)
      : weights(std::move(ws)),
        cfg(weights->config()),
        me(*weights, cfg.arch, cfg.bands.band_bins()),
        cp(*weights, cfg.arch, cfg.bands.band_bins()),
        mbm(*weights, "mbm", cfg.arch, cfg.bands.band_bins(), 1),
        hbm(*weights, "hbm", cfg.arch, cfg.bands.band_bins(), 2),
        fft(cfg.frontend.fft_size),
        window(hann_window(cfg.frontend.window_len)) {}
};

inline Tensor field_to_tensor(const RealField& f) {
  Tensor t(f.frames, f.bins, 1);
  for (size_t i = 0; i < f.v.size(); ++i) t.v[i] = float(f.v[i]);
  return t;
}

inline RealField tensor_to_field(const Tensor& t) {
  if (t.ch != 1) throw DimensionError("tensor_to_field: expected 1 channel");
  RealField f(t.frames, t.freq);
  for (size_t i = 0; i < f.v.size(); ++i) f.v[i] = double(t.v[i]);
  return f;
}

}  // namespace detail

class SfNetEngine {
 public:
  explicit SfNetEngine(std::shared_ptr<const WeightSet> ws) {
    if (!ws) throw ConfigError("engine: null weight set");
    ws->validate_against_plan();
    core_ = std::make_shared<const detail::GraphCore>(std::move(ws));
  }

  const EngineConfig& config() const { return core_->cfg; }
  const MeNet& menet() const { return core_->me; }
  const CpNet& cpnet() const { return core_->cp; }
  const BandNet& mbm() const { return core_->mbm; }
  const BandNet& hbm() const { return core_->hbm; }

  // Dual-stream low-band estimate: the coarse ME gain is
  // recombined with the noisy phase and the CP residual added on top.
  Spectrogram dslb_forward(const Spectrogram& lb_noisy,
                           const EnhanceOptions& opts = {}) const {
    const int T = lb_noisy.frames;
    const int F = lb_noisy.bins;
    const MagPhase lb = mag_phase(lb_noisy);

    Tensor lb_gain(T, F, 1);
    std::fill(lb_gain.v.begin(), lb_gain.v.end(), 1.0f);
    Spectrogram residual(T, F);
    residual.compressed = lb_noisy.compressed;
    if (!opts.identity) {
      lb_gain = core_->me.forward(detail::field_to_tensor(lb.mag));
      Tensor ri(T, F, 2);
      for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f) {
          ri.at(t, f, 0) = float(lb_noisy.at(t, f).real());
          ri.at(t, f, 1) = float(lb_noisy.at(t, f).imag());
        }
      auto [rr, rimag] = core_->cp.forward(ri);
      for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f)
          residual.at(t, f) = {double(rr.at(t, f, 0)),
                               double(rimag.at(t, f, 0))};
    }
    Spectrogram est_me = apply_gain_with_phase(
        lb.mag, detail::tensor_to_field(lb_gain), lb.phase,
        lb_noisy.compressed);
    return add_residual(est_me, residual);
  }

  // Compressed-domain sub-band enhancement: the dual-stream
  // low-band estimate plus guided magnitude masking for MB/HB with the
  // noisy phase kept.
  SubBandSet enhance_bands(const SubBandSet& noisy,
                           const EnhanceOptions& opts = {}) const {
    const int T = noisy.lb.frames;
    const int F = noisy.lb.bins;
    const MagPhase mb = mag_phase(noisy.mb);
    const MagPhase hb = mag_phase(noisy.hb);

    Tensor ones(T, F, 1);
    std::fill(ones.v.begin(), ones.v.end(), 1.0f);

    Spectrogram est_lb = dslb_forward(noisy.lb, opts);

    // Guides stay in the compressed magnitude domain.
    RealField lb_guide(T, F);
    for (size_t i = 0; i < lb_guide.v.size(); ++i)
      lb_guide.v[i] = std::abs(est_lb.data[i]);

    Tensor mb_gain = ones;
    if (!opts.identity)
      mb_gain = core_->mbm.forward(detail::field_to_tensor(mb.mag),
                                   detail::field_to_tensor(lb_guide));
    Spectrogram est_mb = apply_gain_with_phase(
        mb.mag, detail::tensor_to_field(mb_gain), mb.phase,
        noisy.mb.compressed);
    RealField mb_est_mag(T, F);
    for (size_t i = 0; i < mb_est_mag.v.size(); ++i) {
      double m = mb.mag.v[i] * double(mb_gain.v[i]);
      mb_est_mag.v[i] = m < 0.0 ? 0.0 : m;
    }

    Tensor hb_gain = ones;
    if (!opts.identity) {
      Tensor guide2(T, F, 2);
      for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f) {
          guide2.at(t, f, 0) = float(lb_guide.at(t, f));
          guide2.at(t, f, 1) = float(mb_est_mag.at(t, f));
        }
      hb_gain = core_->hbm.forward(detail::field_to_tensor(hb.mag), guide2);
    }
    Spectrogram est_hb = apply_gain_with_phase(
        hb.mag, detail::tensor_to_field(hb_gain), hb.phase,
        noisy.hb.compressed);

    return {std::move(est_lb), std::move(est_mb), std::move(est_hb)};
  }

  Spectrogram enhance_spectrogram(const Spectrogram& compressed,
                                  const EnhanceOptions& opts = {}) const {
    if (!compressed.compressed)
      throw StateError("enhance: expected a compressed spectrogram");
    SubBandSet bands = split_bands(compressed, core_->cfg.bands);
    SubBandSet est = enhance_bands(bands, opts);
    return fuse_bands(est, core_->cfg.bands);
  }

  Waveform enhance(const Waveform& noisy,
                   const EnhanceOptions& opts = {}) const {
    Spectrogram spec = stft(noisy, core_->cfg.frontend);
    spec = compress(spec, core_->cfg.frontend.beta);
    Spectrogram est = enhance_spectrogram(spec, opts);
    est = decompress(est, core_->cfg.frontend.beta);
    Waveform out = istft(est, core_->cfg.frontend);
    out.samples.resize(noisy.samples.size());
    return out;
  }

  std::unique_ptr<EnhancerStream> create_stream(
      const EnhanceOptions& opts = {}) const;

 private:
  std::shared_ptr<const detail::GraphCore> core_;
};

// Frame-by-frame enhancer with a fixed algorithmic latency of one window
// (960 samples / 20 ms). Arbitrary chunk sizes are buffered into hops
// internally, so any chunking of the same input yields bit-identical output.
// Single owner; one stream per state.
class EnhancerStream {
 public:
  EnhancerStream(std::shared_ptr<const detail::GraphCore> core,
                 EnhanceOptions opts)
      : core_(std::move(core)),
        opts_(opts),
        hop_(core_->cfg.frontend.hop),
        win_len_(core_->cfg.frontend.window_len),
        bins_(core_->cfg.frontend.bins()),
        band_bins_(core_->cfg.bands.band_bins()),
        me_st_(core_->me.make_state()),
        cp_st_(core_->cp.make_state()),
        mbm_st_(core_->mbm.make_state()),
        hbm_st_(core_->hbm.make_state()),
        prev_hop_(hop_, 0.0),
        acc_(win_len_, 0.0),
        norm_(win_len_, 0.0) {
    const int F = band_bins_;
    spec_.resize(bins_);
    frame_time_.resize(win_len_);
    synth_.resize(win_len_);
    lb_mag_f_.resize(F);
    lb_ri_f_.resize(size_t(F) * 2);
    gain_lb_.resize(F);
    res_r_.resize(F);
    res_i_.resize(F);
    mb_mag_f_.resize(F);
    hb_mag_f_.resize(F);
    guide_lb_.resize(F);
    guide2_.resize(size_t(F) * 2);
    gain_mb_.resize(F);
    gain_hb_.resize(F);
    mag_.assign(size_t(3) * F, 0.0);
    phase_.assign(size_t(3) * F, 0.0);
  }

  size_t latency_samples() const { return size_t(win_len_); }

  // Feed samples in; returns whatever output is ready (multiples of the
  // hop, delayed by one window).
  std::vector<double> process(const double* samples, size_t n) {
    require_open();
    for (size_t i = 0; i < n; ++i)
      if (!std::isfinite(samples[i]))
        throw DataError("stream: non-finite sample");
    std::vector<double> out;
    pending_.insert(pending_.end(), samples, samples + n);
    n_in_ += n;
    size_t consumed = 0;
    while (pending_.size() - consumed >= size_t(hop_)) {
      push_frame(pending_.data() + consumed, out);
      consumed += size_t(hop_);
    }
    pending_.erase(pending_.begin(), pending_.begin() + consumed);
    return out;
  }

  std::vector<double> process(const std::vector<double>& samples) {
    return process(samples.data(), samples.size());
  }

  // Final hop(s) plus the overlap-add tail; closes the stream. Total output
  // length equals total input length.
  std::vector<double> flush() {
    require_open();
    closed_ = true;
    std::vector<double> out;
    if (!pending_.empty()) {
      std::vector<double> last(pending_.begin(), pending_.end());
      last.resize(size_t(hop_), 0.0);
      pending_.clear();
      push_frame(last.data(), out);
    }
    if (frames_ > 0) emit_hop(out);  // final, one-sided hop
    if (n_emitted_ > n_in_)
      out.resize(out.size() - (n_emitted_ - n_in_));
    return out;
  }

 private:
  void require_open() const {
    if (closed_) throw StateError("stream: used after close");
  }

  void push_frame(const double* hop_samples, std::vector<double>& out) {
    // Assemble the analysis frame: previous hop then the new one.
    std::copy(prev_hop_.begin(), prev_hop_.end(), frame_time_.begin());
    std::copy(hop_samples, hop_samples + hop_, frame_time_.begin() + hop_);
    std::copy(hop_samples, hop_samples + hop_, prev_hop_.begin());

    const auto& win = core_->window;
    for (int i = 0; i < win_len_; ++i) frame_time_[i] *= win[i];
    core_->fft.forward_real(frame_time_.data(), spec_.data());

    const double beta = core_->cfg.frontend.beta;
    for (auto& z : spec_) {
      const double m = std::abs(z);
      if (m > 0.0) z *= std::pow(m, beta - 1.0);
    }

    enhance_frame();

    for (auto& z : spec_) {
      const double m = std::abs(z);
      if (m > 0.0) z *= std::pow(m, 1.0 / beta - 1.0);
    }
    core_->fft.inverse_real(spec_.data(), synth_.data());

    // Overlap-add. Frame 0's first half lands in the left-padding region
    // and is never emitted.
    const int lo = frames_ == 0 ? hop_ : 0;
    const int shift = frames_ == 0 ? hop_ : 0;
    for (int i = lo; i < win_len_; ++i) {
      acc_[i - shift] += win[i] * synth_[i];
      norm_[i - shift] += win[i] * win[i];
    }
    ++frames_;
    if (frames_ >= 2) emit_hop(out);
  }

  void emit_hop(std::vector<double>& out) {
    const size_t room = n_in_ > n_emitted_ ? n_in_ - n_emitted_ : 0;
    const size_t take = std::min(room, size_t(hop_));
    for (size_t i = 0; i < take; ++i) {
      const double nv = norm_[i];
      out.push_back(nv < detail::kOlaFloor ? 0.0 : acc_[i] / nv);
    }
    n_emitted_ += take;
    std::copy(acc_.begin() + hop_, acc_.end(), acc_.begin());
    std::fill(acc_.begin() + hop_, acc_.end(), 0.0);
    std::copy(norm_.begin() + hop_, norm_.end(), norm_.begin());
    std::fill(norm_.begin() + hop_, norm_.end(), 0.0);
  }

  // One frame of the band pipeline: identical arithmetic to the offline
  // path.
  void enhance_frame() {
    const int F = band_bins_;
    const auto& bands = core_->cfg.bands;
    const int lo[3] = {bands.lb_lo, bands.mb_lo, bands.hb_lo};
    for (int b = 0; b < 3; ++b)
      for (int f = 0; f < F; ++f) {
        const auto z = spec_[lo[b] + f];
        const double m = std::abs(z);
        mag_[size_t(b) * F + f] = m;
        phase_[size_t(b) * F + f] =
            m == 0.0 ? 0.0 : std::atan2(z.imag(), z.real());
      }
    const double* lb_mag = &mag_[0];
    const double* mb_mag = &mag_[size_t(F)];
    const double* hb_mag = &mag_[size_t(2) * F];
    const double* lb_ph = &phase_[0];
    const double* mb_ph = &phase_[size_t(F)];
    const double* hb_ph = &phase_[size_t(2) * F];

    if (!opts_.identity) {
      for (int f = 0; f < F; ++f) {
        lb_mag_f_[f] = float(lb_mag[f]);
        lb_ri_f_[size_t(f) * 2] = float(spec_[bands.lb_lo + f].real());
        lb_ri_f_[size_t(f) * 2 + 1] = float(spec_[bands.lb_lo + f].imag());
      }
      core_->me.step(me_st_, lb_mag_f_.data(), gain_lb_.data());
      core_->cp.step(cp_st_, lb_ri_f_.data(), res_r_.data(), res_i_.data());
    } else {
      std::fill(gain_lb_.begin(), gain_lb_.end(), 1.0f);
      std::fill(res_r_.begin(), res_r_.end(), 0.0f);
      std::fill(res_i_.begin(), res_i_.end(), 0.0f);
    }

    std::complex<double> est_lb[481];
    for (int f = 0; f < F; ++f) {
      double m = lb_mag[f] * double(gain_lb_[f]);
      if (m < 0.0) m = 0.0;
      est_lb[f] = {m * std::cos(lb_ph[f]) + double(res_r_[f]),
                   m * std::sin(lb_ph[f]) + double(res_i_[f])};
      guide_lb_[f] = float(std::abs(est_lb[f]));
    }

    if (!opts_.identity) {
      for (int f = 0; f < F; ++f) mb_mag_f_[f] = float(mb_mag[f]);
      core_->mbm.step(mbm_st_, mb_mag_f_.data(), guide_lb_.data(),
                      gain_mb_.data());
    } else {
      std::fill(gain_mb_.begin(), gain_mb_.end(), 1.0f);
    }
    double est_mb_mag[481];
    for (int f = 0; f < F; ++f) {
      double m = mb_mag[f] * double(gain_mb_[f]);
      est_mb_mag[f] = m < 0.0 ? 0.0 : m;
    }

    if (!opts_.identity) {
      for (int f = 0; f < F; ++f) {
        hb_mag_f_[f] = float(hb_mag[f]);
        guide2_[size_t(f) * 2] = guide_lb_[f];
        guide2_[size_t(f) * 2 + 1] = float(est_mb_mag[f]);
      }
      core_->hbm.step(hbm_st_, hb_mag_f_.data(), guide2_.data(),
                      gain_hb_.data());
    } else {
      std::fill(gain_hb_.begin(), gain_hb_.end(), 1.0f);
    }

    // Recombine with the noisy phases and fuse (overlap bins averaged).
    std::complex<double> est_mb[481], est_hb[481];
    for (int f = 0; f < F; ++f) {
      est_mb[f] = {est_mb_mag[f] * std::cos(mb_ph[f]),
                   est_mb_mag[f] * std::sin(mb_ph[f])};
      double m = hb_mag[f] * double(gain_hb_[f]);
      if (m < 0.0) m = 0.0;
      est_hb[f] = {m * std::cos(hb_ph[f]), m * std::sin(hb_ph[f])};
    }
    for (int f = 0; f < F; ++f) spec_[bands.lb_lo + f] = est_lb[f];
    for (int f = 1; f < F; ++f) spec_[bands.mb_lo + f] = est_mb[f];
    for (int f = 1; f < F; ++f) spec_[bands.hb_lo + f] = est_hb[f];
    spec_[bands.mb_lo] = (est_lb[F - 1] + est_mb[0]) / 2.0;
    spec_[bands.hb_lo] = (est_mb[F - 1] + est_hb[0]) / 2.0;
  }

  std::shared_ptr<const detail::GraphCore> core_;
  EnhanceOptions opts_;
  int hop_, win_len_, bins_, band_bins_;

  MeNet::State me_st_;
  CpNet::State cp_st_;
  BandNet::State mbm_st_;
  BandNet::State hbm_st_;

  std::vector<double> pending_;
  std::vector<double> prev_hop_;
  std::vector<double> acc_, norm_;
  std::vector<double> frame_time_, synth_;
  std::vector<std::complex<double>> spec_;
  std::vector<double> mag_, phase_;

  std::vector<float> lb_mag_f_, lb_ri_f_, gain_lb_, res_r_, res_i_;
  std::vector<float> mb_mag_f_, hb_mag_f_, guide_lb_, guide2_;
  std::vector<float> gain_mb_, gain_hb_;

  long long frames_ = 0;
  size_t n_in_ = 0;
  size_t n_emitted_ = 0;
  bool closed_ = false;
};

inline std::unique_ptr<EnhancerStream> SfNetEngine::create_stream(
    const EnhanceOptions& opts) const {
  return std::make_unique<EnhancerStream>(core_, opts);
}

}  // namespace sfnet

#endif  // SFNET_GRAPH_HPP_
