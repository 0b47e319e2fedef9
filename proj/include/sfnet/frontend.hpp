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

#ifndef SFNET_FRONTEND_HPP_
#define SFNET_FRONTEND_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "sfnet/common.hpp"
#include "sfnet/fft.hpp"

namespace sfnet {

inline constexpr int kSampleRate = 48000;

// Time-domain signal. Amplitudes are nominally in [-1, 1]; the engine only
// requires them to be finite.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
};

// Only the periodic Hann window is supported; it satisfies
// constant-overlap-add at half-window hops, which synthesis relies on.
enum class WindowKind { Hann };

// Analysis/synthesis parameters: 20 ms Hann window, 50% overlap, 960-point
// FFT, magnitude compression exponent beta.
struct FrontendConfig {
  int window_len = 960;
  int hop = 480;
  int fft_size = 960;
  double beta = 0.5;
  WindowKind window = WindowKind::Hann;

  void validate() const {
    if (window_len <= 0) throw ConfigError("frontend: empty window");
    if (hop * 2 != window_len)
      throw ConfigError("frontend: hop must be half the window length");
    if (fft_size < window_len)
      throw ConfigError("frontend: fft_size must cover the window");
    if (!(beta > 0.0 && beta <= 1.0))
      throw ConfigError("frontend: beta must be in (0, 1]");
    if (window != WindowKind::Hann)
      throw ConfigError("frontend: unsupported analysis window");
  }

  int bins() const { return fft_size / 2 + 1; }
  double bin_hz() const { return static_cast<double>(kSampleRate) / fft_size; }
};

// Complex time-frequency matrix, frames x bins, row-major. `compressed`
// records whether magnitudes are in the beta-power domain; every operation
// that cares checks it instead of guessing.
struct Spectrogram {
  int frames = 0;
  int bins = 0;
  bool compressed = false;
  double bin_hz = 50.0;
  std::vector<std::complex<double>> data;

  Spectrogram() = default;
  Spectrogram(int t, int f) : frames(t), bins(f), data(size_t(t) * f) {}

  std::complex<double>& at(int t, int f) { return data[size_t(t) * bins + f]; }
  const std::complex<double>& at(int t, int f) const {
    return data[size_t(t) * bins + f];
  }
  std::complex<double>* row(int t) { return data.data() + size_t(t) * bins; }
  const std::complex<double>* row(int t) const {
    return data.data() + size_t(t) * bins;
  }
};

namespace detail {

// Periodic Hann; w(n) + w(n + len/2) == 1, which is what overlap-add at 50%
// relies on.
inline std::vector<double> hann_window(int len) {
  std::vector<double> w(len);
  for (int n = 0; n < len; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / len);
  return w;
}

inline constexpr double kOlaFloor = 1e-8;

}  // namespace detail

// Frame count for a signal of n samples: the signal is left-padded with
// window_len - hop zeros and right-padded to complete the last frame, so
// frame t covers padded samples [t*hop, t*hop + window_len) and every hop of
// input starts exactly one frame.
inline int stft_frame_count(size_t n_samples, const FrontendConfig& cfg) {
  return static_cast<int>((n_samples + cfg.hop - 1) / cfg.hop);
}

inline Spectrogram stft(const Waveform& w, const FrontendConfig& cfg) {
  cfg.validate();
  if (w.sample_rate != kSampleRate)
    throw ConfigError("stft: expected 48000 Hz input, got " +
                      std::to_string(w.sample_rate));
  if (w.samples.empty()) throw DataError("stft: empty signal");
  for (double s : w.samples)
    if (!std::isfinite(s)) throw DataError("stft: non-finite sample");

  const int T = stft_frame_count(w.samples.size(), cfg);
  const int pad = cfg.window_len - cfg.hop;
  const auto win = detail::hann_window(cfg.window_len);
  const detail::Fft fft(cfg.fft_size);

  Spectrogram s(T, cfg.bins());
  s.bin_hz = cfg.bin_hz();
  std::vector<double> frame(cfg.fft_size, 0.0);
  const long long n = static_cast<long long>(w.samples.size());
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < cfg.window_len; ++i) {
      const long long src = static_cast<long long>(t) * cfg.hop + i - pad;
      const double x = (src >= 0 && src < n) ? w.samples[src] : 0.0;
      frame[i] = x * win[i];
    }
    fft.forward_real(frame.data(), s.row(t));
  }
  return s;
}

// Weighted overlap-add synthesis with per-sample normalization by the
// accumulated squared window. Returns frames*hop samples (the left pad is
// dropped); callers that know the original length truncate.
inline Waveform istft(const Spectrogram& s, const FrontendConfig& cfg) {
  cfg.validate();
  if (s.compressed)
    throw StateError("istft: spectrogram is still magnitude-compressed");
  if (s.bins != cfg.bins())
    throw DimensionError("istft: expected " + std::to_string(cfg.bins()) +
                         " bins, got " + std::to_string(s.bins));

  const auto win = detail::hann_window(cfg.window_len);
  const detail::Fft fft(cfg.fft_size);
  const int pad = cfg.window_len - cfg.hop;
  const size_t padded_len = size_t(s.frames) * cfg.hop + pad;

  std::vector<double> acc(padded_len, 0.0), norm(padded_len, 0.0);
  std::vector<double> frame(cfg.fft_size);
  for (int t = 0; t < s.frames; ++t) {
    fft.inverse_real(s.row(t), frame.data());
    const size_t base = size_t(t) * cfg.hop;
    for (int i = 0; i < cfg.window_len; ++i) {
      acc[base + i] += win[i] * frame[i];
      norm[base + i] += win[i] * win[i];
    }
  }

  Waveform out;
  out.samples.resize(size_t(s.frames) * cfg.hop);
  for (size_t i = 0; i < out.samples.size(); ++i) {
    const double nv = norm[pad + i];
    out.samples[i] = nv < detail::kOlaFloor ? 0.0 : acc[pad + i] / nv;
  }
  return out;
}

// Magnitude power compression: |z| -> |z|^beta with phase untouched.
// Implemented as a positive real scaling so the phase is preserved exactly.
inline Spectrogram compress(const Spectrogram& s, double beta) {
  if (s.compressed) throw StateError("compress: already compressed");
  Spectrogram out = s;
  for (auto& z : out.data) {
    const double m = std::abs(z);
    if (m > 0.0) z *= std::pow(m, beta - 1.0);
  }
  out.compressed = true;
  return out;
}

inline Spectrogram decompress(const Spectrogram& s, double beta) {
  if (!s.compressed) throw StateError("decompress: not compressed");
  Spectrogram out = s;
  for (auto& z : out.data) {
    const double m = std::abs(z);
    if (m > 0.0) z *= std::pow(m, 1.0 / beta - 1.0);
  }
  out.compressed = false;
  return out;
}

}  // namespace sfnet

#endif  // SFNET_FRONTEND_HPP_
