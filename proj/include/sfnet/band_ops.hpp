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

#ifndef SFNET_BAND_OPS_HPP_
#define SFNET_BAND_OPS_HPP_

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "sfnet/common.hpp"
#include "sfnet/frontend.hpp"

namespace sfnet {

// Inclusive bin ranges for the low / middle / high bands of a 481-bin
// full-band spectrum. At 50 Hz/bin the 8 kHz and 16 kHz boundaries land on
// bins 160 and 320; those bins belong to both neighbouring bands and get
// averaged back together at fusion.
struct BandLayout {
  int lb_lo = 0, lb_hi = 160;
  int mb_lo = 160, mb_hi = 320;
  int hb_lo = 320, hb_hi = 480;

  int band_bins() const { return lb_hi - lb_lo + 1; }
  int full_bins() const { return hb_hi + 1; }

  void validate() const {
    const int w = band_bins();
    if (mb_hi - mb_lo + 1 != w || hb_hi - hb_lo + 1 != w)
      throw ConfigError("band layout: bands must be equally wide");
    if (mb_lo != lb_hi || hb_lo != mb_hi)
      throw ConfigError("band layout: adjacent bands must share one bin");
  }
};

struct SubBandSet {
  Spectrogram lb, mb, hb;
};

// T x F real matrix; carrier for magnitudes, phases and gain fields.
struct RealField {
  int frames = 0;
  int bins = 0;
  std::vector<double> v;

  RealField() = default;
  RealField(int t, int f) : frames(t), bins(f), v(size_t(t) * f, 0.0) {}

  double& at(int t, int f) { return v[size_t(t) * bins + f]; }
  double at(int t, int f) const { return v[size_t(t) * bins + f]; }
};

struct MagPhase {
  RealField mag;    // >= 0 everywhere
  RealField phase;  // radians in (-pi, pi]; 0 where mag == 0
};

namespace detail {
inline void require_same_shape(const Spectrogram& a, const Spectrogram& b,
                               const char* op) {
  if (a.frames != b.frames || a.bins != b.bins)
    throw DimensionError(std::string(op) + ": shape mismatch");
}
}  // namespace detail

inline SubBandSet split_bands(const Spectrogram& full,
                              const BandLayout& layout) {
  layout.validate();
  if (full.bins != layout.full_bins())
    throw DimensionError("split_bands: expected " +
                         std::to_string(layout.full_bins()) + " bins, got " +
                         std::to_string(full.bins));
  const int w = layout.band_bins();
  SubBandSet out;
  for (auto [spec, lo] : {std::pair{&out.lb, layout.lb_lo},
                          std::pair{&out.mb, layout.mb_lo},
                          std::pair{&out.hb, layout.hb_lo}}) {
    *spec = Spectrogram(full.frames, w);
    spec->compressed = full.compressed;
    spec->bin_hz = full.bin_hz;
    for (int t = 0; t < full.frames; ++t)
      for (int f = 0; f < w; ++f) spec->at(t, f) = full.at(t, lo + f);
  }
  return out;
}

// Stacks the three bands back to 481 bins; the two duplicated boundary bins
// are averaged, every other bin is copied bit-exactly, so fuse(split(X)) is
// the identity.
inline Spectrogram fuse_bands(const SubBandSet& bands,
                              const BandLayout& layout) {
  layout.validate();
  const int w = layout.band_bins();
  if (bands.lb.bins != w || bands.mb.bins != w || bands.hb.bins != w)
    throw DimensionError("fuse_bands: band width mismatch");
  if (bands.lb.frames != bands.mb.frames ||
      bands.lb.frames != bands.hb.frames)
    throw DimensionError("fuse_bands: frame-count mismatch");
  if (bands.lb.compressed != bands.mb.compressed ||
      bands.lb.compressed != bands.hb.compressed)
    throw StateError("fuse_bands: inconsistent compressed flags");

  Spectrogram out(bands.lb.frames, layout.full_bins());
  out.compressed = bands.lb.compressed;
  out.bin_hz = bands.lb.bin_hz;
  for (int t = 0; t < out.frames; ++t) {
    for (int f = 0; f < w; ++f) out.at(t, layout.lb_lo + f) = bands.lb.at(t, f);
    for (int f = 1; f < w; ++f) out.at(t, layout.mb_lo + f) = bands.mb.at(t, f);
    for (int f = 1; f < w; ++f) out.at(t, layout.hb_lo + f) = bands.hb.at(t, f);
    out.at(t, layout.mb_lo) = (bands.lb.at(t, w - 1) + bands.mb.at(t, 0)) / 2.0;
    out.at(t, layout.hb_lo) = (bands.mb.at(t, w - 1) + bands.hb.at(t, 0)) / 2.0;
  }
  return out;
}

inline MagPhase mag_phase(const Spectrogram& s) {
  MagPhase mp;
  mp.mag = RealField(s.frames, s.bins);
  mp.phase = RealField(s.frames, s.bins);
  for (size_t i = 0; i < s.data.size(); ++i) {
    const auto z = s.data[i];
    const double m = std::abs(z);
    mp.mag.v[i] = m;
    mp.phase.v[i] = m == 0.0 ? 0.0 : std::atan2(z.imag(), z.real());
  }
  return mp;
}

// Recombines a (possibly network-scaled) magnitude with a phase field:
// re = mag*gain*cos(phase), im = mag*gain*sin(phase). Negative products are
// clamped to zero magnitude so the result stays a valid polar form even when
// the mask emits negative values.
inline Spectrogram apply_gain_with_phase(const RealField& mag,
                                         const RealField& gain,
                                         const RealField& phase,
                                         bool compressed = false) {
  if (mag.frames != gain.frames || mag.bins != gain.bins ||
      mag.frames != phase.frames || mag.bins != phase.bins)
    throw DimensionError("apply_gain_with_phase: shape mismatch");
  Spectrogram out(mag.frames, mag.bins);
  out.compressed = compressed;
  for (size_t i = 0; i < out.data.size(); ++i) {
    double m = mag.v[i] * gain.v[i];
    if (m < 0.0) m = 0.0;
    out.data[i] = {m * std::cos(phase.v[i]), m * std::sin(phase.v[i])};
  }
  return out;
}

inline Spectrogram add_residual(const Spectrogram& coarse,
                                const Spectrogram& residual) {
  detail::require_same_shape(coarse, residual, "add_residual");
  if (coarse.compressed != residual.compressed)
    throw StateError("add_residual: compressed-flag mismatch");
  Spectrogram out = coarse;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += residual.data[i];
  return out;
}

}  // namespace sfnet

#endif  // SFNET_BAND_OPS_HPP_
