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

#ifndef SFNET_TESTS_HELPERS_HPP_
#define SFNET_TESTS_HELPERS_HPP_

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "sfnet/frontend.hpp"
#include "sfnet/nn_core.hpp"

namespace testing {

inline std::mt19937& rng(uint32_t seed = 0) {
  thread_local std::mt19937 gen(1234);
  if (seed != 0) gen.seed(seed);
  return gen;
}

inline double uniform(double lo, double hi) {
  return lo + (hi - lo) * (double(rng()()) / 4294967296.0);
}

inline sfnet::Waveform random_waveform(size_t n, uint32_t seed) {
  rng(seed);
  sfnet::Waveform w;
  w.samples.resize(n);
  for (auto& s : w.samples) s = uniform(-1.0, 1.0);
  return w;
}

inline sfnet::Tensor random_tensor(int t, int f, int c, uint32_t seed,
                                   float scale = 1.0f) {
  rng(seed);
  sfnet::Tensor x(t, f, c);
  for (auto& v : x.v) v = float(uniform(-scale, scale));
  return x;
}

// Deterministic voiced-speech-like test material: drifting pitch harmonics
// with an amplitude envelope plus a band of noise.
inline sfnet::Waveform speech_like(double seconds, uint32_t seed) {
  rng(seed);
  const size_t n = size_t(seconds * sfnet::kSampleRate);
  sfnet::Waveform w;
  w.samples.resize(n);
  const double f0 = 110.0 + uniform(0.0, 60.0);
  double phase[10] = {0};
  for (size_t i = 0; i < n; ++i) {
    const double tsec = double(i) / sfnet::kSampleRate;
    const double pitch = f0 * (1.0 + 0.1 * std::sin(2 * std::numbers::pi * 2.3 * tsec));
    const double env = 0.4 * (0.55 + 0.45 * std::sin(2 * std::numbers::pi * 3.1 * tsec));
    double s = 0.0;
    for (int h = 1; h <= 10; ++h) {
      phase[h - 1] += 2 * std::numbers::pi * pitch * h / sfnet::kSampleRate;
      s += env / h * std::sin(phase[h - 1]);
    }
    s += 0.05 * uniform(-1.0, 1.0);
    w.samples[i] = 0.5 * s;
  }
  return w;
}

// Direct O(N^2) DFT, the oracle for the FFT paths.
inline std::vector<std::complex<double>> naive_dft(
    const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t i = 0; i < n; ++i) {
      const double ph = -2.0 * std::numbers::pi * double(k) * double(i) / double(n);
      acc += x[i] * std::complex<double>(std::cos(ph), std::sin(ph));
    }
    out[k] = acc;
  }
  return out;
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double m = 0.0;
  const size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const sfnet::Tensor& a, const sfnet::Tensor& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i)
    m = std::max(m, std::abs(double(a.v[i]) - double(b.v[i])));
  return m;
}

}  // namespace testing

#endif  // SFNET_TESTS_HELPERS_HPP_
