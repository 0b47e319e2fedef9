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

#ifndef SFNET_ARCH_HPP_
#define SFNET_ARCH_HPP_

#include <map>
#include <string>
#include <vector>

#include "sfnet/band_ops.hpp"
#include "sfnet/frontend.hpp"
#include "sfnet/nn_core.hpp"

namespace sfnet {

// Architecture hyper-parameters. The dual-stream low-band pair (ME/CP) runs
// at dslb_channels with dslb_tcm_groups bottleneck groups; the middle/high
// band maskers are the lighter variants. S-TCM weights are shared between
// ME and CP when share_stcm is set.
struct ArchConfig {
  int dslb_channels = 64;
  int band_channels = 48;
  int guide_channels = 24;
  int encoder_depth = 5;
  int dslb_tcm_groups = 4;
  int band_tcm_groups = 2;
  std::vector<int> dilations = {1, 2, 4, 8, 16, 32};
  int stcm_kernel = 5;
  int stcm_hidden_dslb = 64;
  int stcm_hidden_band = 48;
  int head_channels = 8;
  bool share_stcm = true;

  void validate() const {
    if (encoder_depth != 5)
      throw ConfigError("arch: encoder depth is fixed at 5");
    if (dslb_channels <= 0 || band_channels <= 0 || guide_channels <= 0 ||
        stcm_hidden_dslb <= 0 || stcm_hidden_band <= 0 || head_channels <= 0)
      throw ConfigError("arch: non-positive width");
    if (dslb_tcm_groups < 2 || band_tcm_groups < 2)
      throw ConfigError("arch: at least two TCM groups per bottleneck");
    if (dilations.empty()) throw ConfigError("arch: empty dilation list");
    int prev = 0;
    for (int d : dilations) {
      if (d <= prev || (d & (d - 1)) != 0)
        throw ConfigError("arch: dilations must be increasing powers of two");
      prev = d;
    }
    if (stcm_kernel != 5 && stcm_kernel != 2 && stcm_kernel != 1)
      throw ConfigError("arch: unsupported S-TCM kernel");
  }
};

// Everything a weight file needs to rebuild the engine.
struct EngineConfig {
  FrontendConfig frontend;
  ArchConfig arch;
  BandLayout bands;

  void validate() const {
    frontend.validate();
    arch.validate();
    bands.validate();
  }
};

enum class InitKind { Kernel, Bias, NormGain, PreluSlope };

struct TensorSpec {
  std::string name;
  std::vector<int> shape;
  InitKind init = InitKind::Kernel;
  int fan_in = 1;

  size_t elements() const {
    size_t n = 1;
    for (int d : shape) n *= size_t(d);
    return n;
  }
};

// Full inventory of named tensors plus per-subnet parameter and MAC
// accounting. Weight initialization, file validation, the complexity report
// and the graph builder all derive from this one walk, so they cannot drift
// apart.
struct NetPlan {
  std::vector<TensorSpec> tensors;  // sorted by name
  std::map<std::string, long long> params_by_subnet;
  std::map<std::string, long long> macs_by_subnet;  // per frame
  long long params_total = 0;
  long long macs_per_frame = 0;

  const TensorSpec* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
};

namespace plan {

// Frequency sizes down the encoder: halved per layer, e.g. 161 -> 80 -> 40
// -> 20 -> 10 -> 5.
inline std::vector<int> freq_chain(int band_bins, int depth) {
  std::vector<int> chain{band_bins};
  for (int i = 0; i < depth; ++i) chain.push_back(chain.back() / 2);
  return chain;
}

inline int freq_kernel(int layer, int depth) {
  (void)depth;
  return layer == 0 ? 5 : 3;
}

// Zero-padding that realizes the halving chain; surplus goes to the top
// (high-frequency) edge, which is also where the decoder crops.
inline std::pair<int, int> freq_padding(int in_freq, int out_freq, int kf) {
  const int p = 2 * (out_freq - 1) + kf - in_freq;
  if (p < 0 || p > 2 * (kf - 1))
    throw ConfigError("plan: inconsistent frequency chain");
  return {p / 2, p - p / 2};
}

// Encoder layer i (downsampling conv). `final_ch` overrides the output
// width of the last layer (used by guide encoders that must land on the
// trunk width).
inline LayerSpec encoder_layer(int i, int depth, int in_ch, int width,
                               int band_bins, int final_ch = -1) {
  const auto chain = freq_chain(band_bins, depth);
  LayerSpec s;
  s.in_ch = i == 0 ? in_ch : width;
  s.out_ch = (i == depth - 1 && final_ch > 0) ? final_ch : width;
  s.kt = 2;
  s.kf = freq_kernel(i, depth);
  s.in_freq = chain[i];
  s.stride_f = 2;
  auto [lo, hi] = freq_padding(chain[i], chain[i + 1], s.kf);
  s.pad_lo = lo;
  s.pad_hi = hi;
  return s;
}

// Decoder layer j (frequency-upsampling deconv), mirroring encoder layer
// depth-1-j; the last layer emits head_ch channels for the output heads.
inline LayerSpec decoder_layer(int j, int depth, int width, int head_ch,
                               int band_bins) {
  const auto chain = freq_chain(band_bins, depth);
  const int enc_i = depth - 1 - j;
  LayerSpec s;
  s.in_ch = width;
  s.out_ch = j == depth - 1 ? head_ch : width;
  s.kt = 2;
  s.kf = freq_kernel(enc_i, depth);
  s.in_freq = chain[enc_i + 1];
  s.stride_f = 2;
  // crops equal the matching encoder pads, so the size chain inverts exactly
  auto [plo, phi] = freq_padding(chain[enc_i], chain[enc_i + 1], s.kf);
  s.pad_lo = plo;
  s.pad_hi = phi;
  return s;
}

inline LayerSpec pointwise(int in_ch, int out_ch, int in_freq = 1) {
  LayerSpec s;
  s.in_ch = in_ch;
  s.out_ch = out_ch;
  s.in_freq = in_freq;
  return s;
}

inline LayerSpec stcm_dconv(int hidden, int kernel, int dilation) {
  LayerSpec s;
  s.in_ch = hidden;
  s.out_ch = hidden;
  s.kt = kernel;
  s.in_freq = 1;
  s.dilation = dilation;
  return s;
}

class Builder {
 public:
  explicit Builder(const ArchConfig& cfg, int band_bins)
      : cfg_(cfg), band_bins_(band_bins) {}

  NetPlan build() {
    const int depth = cfg_.encoder_depth;
    const int W = cfg_.dslb_channels;
    const int Wb = cfg_.band_channels;
    const int bottleneck_dslb = freq_chain(band_bins_, depth).back() * W;
    const int bottleneck_band = freq_chain(band_bins_, depth).back() * Wb;

    // --- DSLB: magnitude-estimation stream
    add_encoder("dslb.me.enc", "dslb.me", 1, W);
    if (cfg_.share_stcm) {
      add_stcm_params("dslb.stcm", "dslb.stcm", bottleneck_dslb,
                      cfg_.stcm_hidden_dslb, cfg_.dslb_tcm_groups);
    } else {
      add_stcm_params("dslb.me.stcm", "dslb.me", bottleneck_dslb,
                      cfg_.stcm_hidden_dslb, cfg_.dslb_tcm_groups);
      add_stcm_params("dslb.cp.stcm", "dslb.cp", bottleneck_dslb,
                      cfg_.stcm_hidden_dslb, cfg_.dslb_tcm_groups);
    }
    add_stcm_macs("dslb.me", bottleneck_dslb, cfg_.stcm_hidden_dslb,
                  cfg_.dslb_tcm_groups);
    add_caham("dslb.me.aham", "dslb.me", cfg_.dslb_tcm_groups);
    add_decoder("dslb.me.dec", "dslb.me", W);
    add_mask_head("dslb.me.mask", "dslb.me");

    // --- DSLB: complex-purification stream (real+imag in, two decoders out)
    add_encoder("dslb.cp.enc", "dslb.cp", 2, W);
    add_stcm_macs("dslb.cp", bottleneck_dslb, cfg_.stcm_hidden_dslb,
                  cfg_.dslb_tcm_groups);
    add_caham("dslb.cp.aham", "dslb.cp", cfg_.dslb_tcm_groups);
    add_decoder("dslb.cp.dec_r", "dslb.cp", W);
    add_linear_head("dslb.cp.head_r", "dslb.cp");
    add_decoder("dslb.cp.dec_i", "dslb.cp", W);
    add_linear_head("dslb.cp.head_i", "dslb.cp");

    // --- MBM / HBM: magnitude maskers with guide encoders + interaction
    for (const auto& [net, guide_in] :
         {std::pair{std::string("mbm"), 1}, std::pair{std::string("hbm"), 2}}) {
      add_encoder(net + ".enc", net, 1, Wb);
      add_encoder(net + ".guide", net, guide_in, cfg_.guide_channels, Wb);
      add_conv(net + ".inter.gate", net,
               pointwise(2 * Wb, Wb, freq_chain(band_bins_, depth).back()));
      add_stcm_params(net + ".stcm", net, bottleneck_band,
                      cfg_.stcm_hidden_band, cfg_.band_tcm_groups);
      add_stcm_macs(net, bottleneck_band, cfg_.stcm_hidden_band,
                    cfg_.band_tcm_groups);
      add_caham(net + ".aham", net, cfg_.band_tcm_groups);
      add_decoder(net + ".dec", net, Wb);
      add_mask_head(net + ".mask", net);
    }

    std::sort(plan_.tensors.begin(), plan_.tensors.end(),
              [](const TensorSpec& a, const TensorSpec& b) {
                return a.name < b.name;
              });
    for (const auto& [k, v] : plan_.params_by_subnet) plan_.params_total += v;
    for (const auto& [k, v] : plan_.macs_by_subnet) plan_.macs_per_frame += v;
    return std::move(plan_);
  }

 private:
  void add_tensor(const std::string& name, std::vector<int> shape,
                  InitKind init, int fan_in, const std::string& subnet) {
    TensorSpec t{name, std::move(shape), init, fan_in};
    plan_.params_by_subnet[subnet] += static_cast<long long>(t.elements());
    plan_.tensors.push_back(std::move(t));
  }

  void add_conv(const std::string& prefix, const std::string& subnet,
                const LayerSpec& s, bool deconv = false) {
    const int fan_in = s.kt * s.kf * s.in_ch;
    add_tensor(prefix + ".kernel", {s.out_ch, s.kt, s.kf, s.in_ch},
               InitKind::Kernel, fan_in, subnet);
    add_tensor(prefix + ".bias", {s.out_ch}, InitKind::Bias, fan_in, subnet);
    const long long macs =
        deconv ? 1LL * s.in_freq * s.in_ch * s.kt * s.kf * s.out_ch
               : 1LL * s.conv_out_freq() * s.out_ch * s.kt * s.kf * s.in_ch;
    plan_.macs_by_subnet[subnet] += macs;
  }

  void add_norm_act(const std::string& prefix, const std::string& subnet,
                    int ch) {
    add_tensor(prefix + ".cln.gain", {ch}, InitKind::NormGain, ch, subnet);
    add_tensor(prefix + ".cln.bias", {ch}, InitKind::Bias, ch, subnet);
    add_tensor(prefix + ".prelu.slope", {ch}, InitKind::PreluSlope, ch,
               subnet);
  }

  void add_encoder(const std::string& prefix, const std::string& subnet,
                   int in_ch, int width, int final_ch = -1) {
    for (int i = 0; i < cfg_.encoder_depth; ++i) {
      const auto s = encoder_layer(i, cfg_.encoder_depth, in_ch, width,
                                   band_bins_, final_ch);
      const std::string lp = prefix + "." + std::to_string(i);
      add_conv(lp + ".conv", subnet, s);
      add_norm_act(lp, subnet, s.out_ch);
    }
  }

  void add_decoder(const std::string& prefix, const std::string& subnet,
                   int width) {
    for (int j = 0; j < cfg_.encoder_depth; ++j) {
      const auto s = decoder_layer(j, cfg_.encoder_depth, width,
                                   cfg_.head_channels, band_bins_);
      const std::string lp = prefix + "." + std::to_string(j);
      add_conv(lp + ".deconv", subnet, s, /*deconv=*/true);
      add_norm_act(lp, subnet, s.out_ch);
    }
  }

  void add_stcm_params(const std::string& prefix, const std::string& subnet,
                       int width, int hidden, int groups) {
    for (int g = 0; g < groups; ++g) {
      for (size_t k = 0; k < cfg_.dilations.size(); ++k) {
        const std::string bp =
            prefix + ".g" + std::to_string(g) + ".b" + std::to_string(k);
        add_conv_params_only(bp + ".squeeze", subnet, pointwise(width, hidden));
        add_tensor(bp + ".squeeze.prelu.slope", {hidden}, InitKind::PreluSlope,
                   hidden, subnet);
        add_tensor(bp + ".squeeze.cln.gain", {hidden}, InitKind::NormGain,
                   hidden, subnet);
        add_tensor(bp + ".squeeze.cln.bias", {hidden}, InitKind::Bias, hidden,
                   subnet);
        add_conv_params_only(
            bp + ".dconv", subnet,
            stcm_dconv(hidden, cfg_.stcm_kernel, cfg_.dilations[k]));
        add_tensor(bp + ".dconv.prelu.slope", {hidden}, InitKind::PreluSlope,
                   hidden, subnet);
        add_tensor(bp + ".dconv.cln.gain", {hidden}, InitKind::NormGain,
                   hidden, subnet);
        add_tensor(bp + ".dconv.cln.bias", {hidden}, InitKind::Bias, hidden,
                   subnet);
        add_conv_params_only(bp + ".expand", subnet, pointwise(hidden, width));
      }
    }
  }

  void add_conv_params_only(const std::string& prefix,
                            const std::string& subnet, const LayerSpec& s) {
    const int fan_in = s.kt * s.kf * s.in_ch;
    add_tensor(prefix + ".kernel", {s.out_ch, s.kt, s.kf, s.in_ch},
               InitKind::Kernel, fan_in, subnet);
    add_tensor(prefix + ".bias", {s.out_ch}, InitKind::Bias, fan_in, subnet);
  }

  // MACs of one bottleneck pass; separate from the parameters because a
  // shared bottleneck is still executed once per stream.
  void add_stcm_macs(const std::string& subnet, int width, int hidden,
                     int groups) {
    const long long per_block = 1LL * width * hidden        // squeeze
                                + 1LL * hidden * hidden * cfg_.stcm_kernel
                                + 1LL * hidden * width;     // expand
    plan_.macs_by_subnet[subnet] +=
        per_block * groups * static_cast<long long>(cfg_.dilations.size());
  }

  void add_caham(const std::string& prefix, const std::string& subnet,
                 int groups) {
    add_tensor(prefix + ".proj.kernel", {groups, groups}, InitKind::Kernel,
               groups, subnet);
    add_tensor(prefix + ".proj.bias", {groups}, InitKind::Bias, groups,
               subnet);
    plan_.macs_by_subnet[subnet] += 1LL * groups * groups;
  }

  void add_mask_head(const std::string& prefix, const std::string& subnet) {
    add_conv(prefix + ".a", subnet,
             pointwise(cfg_.head_channels, 1, band_bins_));
    add_conv(prefix + ".b", subnet,
             pointwise(cfg_.head_channels, 1, band_bins_));
  }

  void add_linear_head(const std::string& prefix, const std::string& subnet) {
    add_conv(prefix, subnet, pointwise(cfg_.head_channels, 1, band_bins_));
  }

  const ArchConfig& cfg_;
  int band_bins_;
  NetPlan plan_;
};

}  // namespace plan

inline NetPlan build_plan(const ArchConfig& cfg, int band_bins = 161) {
  cfg.validate();
  return plan::Builder(cfg, band_bins).build();
}

struct ComplexityReport {
  long long params_total = 0;
  std::map<std::string, long long> params_per_subnet;
  long long macs_per_frame = 0;
  double macs_per_second = 0.0;
};

inline ComplexityReport complexity_report(const ArchConfig& cfg,
                                          const FrontendConfig& fe = {},
                                          int band_bins = 161) {
  const NetPlan p = build_plan(cfg, band_bins);
  ComplexityReport r;
  r.params_total = p.params_total;
  r.params_per_subnet = p.params_by_subnet;
  r.macs_per_frame = p.macs_per_frame;
  const double frames_per_sec = double(kSampleRate) / fe.hop;
  r.macs_per_second = double(p.macs_per_frame) * frames_per_sec;
  return r;
}

}  // namespace sfnet

#endif  // SFNET_ARCH_HPP_
