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

#ifndef SFNET_METRICS_HPP_
#define SFNET_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "sfnet/band_ops.hpp"
#include "sfnet/common.hpp"
#include "sfnet/frontend.hpp"

namespace sfnet {

struct LossConfig {
  double mu = 0.5;     // RI / magnitude balance in the low-band loss
  double alpha = 0.1;  // low-band weight in the full loss

  void validate() const {
    if (!(mu >= 0.0 && mu <= 1.0))
      throw ConfigError("loss: mu must be in [0, 1]");
    if (!(alpha > 0.0)) throw ConfigError("loss: alpha must be positive");
  }
};

// All terms hold simultaneously: l_lb = mu*l_ri + (1-mu)*l_mag and
// l_full = alpha*l_lb + l_mb_mag + l_hb_mag.
struct LossBreakdown {
  double l_ri = 0.0;
  double l_mag = 0.0;
  double l_lb = 0.0;
  double l_mb_mag = 0.0;
  double l_hb_mag = 0.0;
  double l_full = 0.0;
};

struct LbLossResult {
  LossBreakdown breakdown;
  RealField grad_r;  // d l_lb / d est_real
  RealField grad_i;  // d l_lb / d est_imag
};

// Low-band loss: squared Frobenius error of the RI components blended with
// the squared magnitude error, plus its exact gradient w.r.t. the estimated
// RI parts. The magnitude term's derivative at an exactly-zero estimated bin
// is defined as zero (subgradient at the |.| kink).
inline LbLossResult loss_lb(const Spectrogram& est, const Spectrogram& tgt,
                            const LossConfig& cfg = {}) {
  cfg.validate();
  if (est.frames != tgt.frames || est.bins != tgt.bins)
    throw DimensionError("loss_lb: shape mismatch");

  LbLossResult r;
  r.grad_r = RealField(est.frames, est.bins);
  r.grad_i = RealField(est.frames, est.bins);
  double l_ri = 0.0, l_mag = 0.0;
  for (size_t i = 0; i < est.data.size(); ++i) {
    const double er = est.data[i].real(), ei = est.data[i].imag();
    const double tr = tgt.data[i].real(), ti = tgt.data[i].imag();
    const double dr = er - tr, di = ei - ti;
    l_ri += dr * dr + di * di;
    const double em = std::hypot(er, ei);
    const double tm = std::hypot(tr, ti);
    const double dm = em - tm;
    l_mag += dm * dm;

    double gr = cfg.mu * 2.0 * dr;
    double gi = cfg.mu * 2.0 * di;
    if (em > 0.0) {
      gr += (1.0 - cfg.mu) * 2.0 * dm * (er / em);
      gi += (1.0 - cfg.mu) * 2.0 * dm * (ei / em);
    }
    r.grad_r.v[i] = gr;
    r.grad_i.v[i] = gi;
  }
  r.breakdown.l_ri = l_ri;
  r.breakdown.l_mag = l_mag;
  r.breakdown.l_lb = cfg.mu * l_ri + (1.0 - cfg.mu) * l_mag;
  r.breakdown.l_full = cfg.alpha * r.breakdown.l_lb;
  return r;
}

namespace detail {
inline double mag_mse(const RealField& est, const RealField& tgt,
                      const char* op) {
  if (est.frames != tgt.frames || est.bins != tgt.bins)
    throw DimensionError(std::string(op) + ": shape mismatch");
  double l = 0.0;
  for (size_t i = 0; i < est.v.size(); ++i) {
    const double d = est.v[i] - tgt.v[i];
    l += d * d;
  }
  return l;
}
}  // namespace detail

inline LossBreakdown loss_full(const Spectrogram& lb_est,
                               const Spectrogram& lb_tgt,
                               const RealField& mb_mag_est,
                               const RealField& mb_mag_tgt,
                               const RealField& hb_mag_est,
                               const RealField& hb_mag_tgt,
                               const LossConfig& cfg = {}) {
  LossBreakdown b = loss_lb(lb_est, lb_tgt, cfg).breakdown;
  b.l_mb_mag = detail::mag_mse(mb_mag_est, mb_mag_tgt, "loss_full(mb)");
  b.l_hb_mag = detail::mag_mse(hb_mag_est, hb_mag_tgt, "loss_full(hb)");
  b.l_full = cfg.alpha * b.l_lb + b.l_mb_mag + b.l_hb_mag;
  return b;
}

// Segmental SNR: mean of per-frame SNRs over 20 ms non-overlapping frames,
// each clamped to [-10, 35] dB; frames with negligible reference energy are
// skipped.
inline double ssnr(const Waveform& ref, const Waveform& est) {
  if (ref.samples.size() != est.samples.size())
    throw DimensionError("ssnr: length mismatch");
  if (ref.sample_rate != kSampleRate || est.sample_rate != kSampleRate)
    throw ConfigError("ssnr: expected 48 kHz signals");
  const size_t frame = size_t(kSampleRate) / 50;  // 20 ms
  double total = 0.0;
  size_t used = 0;
  for (size_t start = 0; start + frame <= ref.samples.size(); start += frame) {
    double re = 0.0, ee = 0.0;
    for (size_t i = start; i < start + frame; ++i) {
      re += ref.samples[i] * ref.samples[i];
      const double d = ref.samples[i] - est.samples[i];
      ee += d * d;
    }
    if (re < 1e-10) continue;
    double snr = ee <= 0.0 ? 35.0 : 10.0 * std::log10(re / ee);
    snr = std::clamp(snr, -10.0, 35.0);
    total += snr;
    ++used;
  }
  if (used == 0) throw DomainError("ssnr: no frames with reference energy");
  return total / double(used);
}

// Projection SDR: the estimate is projected onto the reference, and the
// ratio of target to distortion energy is reported. Scale-invariant by
// construction; capped at +/-100 dB.
inline double sdr(const Waveform& ref, const Waveform& est) {
  if (ref.samples.size() != est.samples.size())
    throw DimensionError("sdr: length mismatch");
  double rr = 0.0, er = 0.0;
  for (size_t i = 0; i < ref.samples.size(); ++i) {
    rr += ref.samples[i] * ref.samples[i];
    er += est.samples[i] * ref.samples[i];
  }
  if (rr <= 0.0) throw DomainError("sdr: zero reference");
  const double c = er / rr;
  double target = 0.0, dist = 0.0;
  for (size_t i = 0; i < ref.samples.size(); ++i) {
    const double s = c * ref.samples[i];
    target += s * s;
    const double d = est.samples[i] - s;
    dist += d * d;
  }
  if (dist <= 0.0) return 100.0;
  if (target <= 0.0) return -100.0;
  return std::clamp(10.0 * std::log10(target / dist), -100.0, 100.0);
}

struct MixResult {
  Waveform mix;
  double noise_scale = 1.0;  // gain applied to the noise before adding
  double peak_gain = 1.0;    // overall gain applied to avoid clipping
};

// Scales the noise so that 10*log10(E_clean / E_noise) hits snr_db exactly,
// then adds. If the sum would clip, the whole mix is scaled to a 0.99 peak
// (component SNR is unchanged) and the applied gain reported.
inline MixResult mix_at_snr(const Waveform& clean, const Waveform& noise,
                            double snr_db) {
  if (clean.sample_rate != kSampleRate || noise.sample_rate != kSampleRate)
    throw ConfigError("mix: expected 48 kHz signals");
  if (noise.samples.size() < clean.samples.size())
    throw DomainError("mix: noise shorter than clean signal");
  double ec = 0.0, en = 0.0;
  for (double s : clean.samples) ec += s * s;
  for (size_t i = 0; i < clean.samples.size(); ++i)
    en += noise.samples[i] * noise.samples[i];
  if (ec <= 0.0) throw DomainError("mix: silent clean signal");
  if (en <= 0.0) throw DomainError("mix: silent noise signal");

  const double scale = std::sqrt(ec / (en * std::pow(10.0, snr_db / 10.0)));
  MixResult r;
  r.noise_scale = scale;
  r.mix.sample_rate = kSampleRate;
  r.mix.samples.resize(clean.samples.size());
  double peak = 0.0;
  for (size_t i = 0; i < clean.samples.size(); ++i) {
    r.mix.samples[i] = clean.samples[i] + scale * noise.samples[i];
    peak = std::max(peak, std::abs(r.mix.samples[i]));
  }
  if (peak > 0.99) {
    r.peak_gain = 0.99 / peak;
    for (double& s : r.mix.samples) s *= r.peak_gain;
  }
  return r;
}

}  // namespace sfnet

#endif  // SFNET_METRICS_HPP_
