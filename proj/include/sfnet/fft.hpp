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

#ifndef SFNET_FFT_HPP_
#define SFNET_FFT_HPP_

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "sfnet/common.hpp"

namespace sfnet::detail {

// Mixed-radix FFT for composite sizes. 960 = 2^6 * 3 * 5, so the combine
// stage only ever runs tiny radices; any prime factor is still handled
// correctly (the butterfly degenerates to a direct DFT of that radix).
//
// Instances are immutable after construction and safe to share across
// threads; per-call scratch lives on the stack of the caller.
class Fft {
 public:
  using cd = std::complex<double>;

  explicit Fft(int n) : n_(n) {
    if (n <= 0) throw ConfigError("fft: size must be positive");
    int m = n;
    for (int p = 2; m > 1;) {
      if (m % p == 0) {
        factors_.push_back(p);
        m /= p;
      } else {
        ++p;
      }
    }
    twiddle_.resize(n_);
    for (int k = 0; k < n_; ++k) {
      const double phase = -2.0 * std::numbers::pi * k / n_;
      twiddle_[k] = cd(std::cos(phase), std::sin(phase));
    }
  }

  int size() const { return n_; }

  // In-place complex transform of a length-n buffer.
  void forward(cd* data) const {
    std::vector<cd> out(n_), scratch(n_);
    rec(data, out.data(), scratch.data(), n_, 1, 0);
    std::copy(out.begin(), out.end(), data);
  }

  void inverse(cd* data) const {
    for (int i = 0; i < n_; ++i) data[i] = std::conj(data[i]);
    forward(data);
    const double inv = 1.0 / n_;
    for (int i = 0; i < n_; ++i) data[i] = std::conj(data[i]) * inv;
  }

  // Real signal of length n -> n/2 + 1 non-redundant bins.
  void forward_real(const double* in, cd* out) const {
    std::vector<cd> buf(n_);
    for (int i = 0; i < n_; ++i) buf[i] = cd(in[i], 0.0);
    forward(buf.data());
    const int bins = n_ / 2 + 1;
    std::copy(buf.begin(), buf.begin() + bins, out);
  }

  // n/2 + 1 bins (conjugate symmetry implied) -> real signal of length n.
  void inverse_real(const cd* in, double* out) const {
    const int bins = n_ / 2 + 1;
    std::vector<cd> buf(n_);
    for (int k = 0; k < bins; ++k) buf[k] = in[k];
    for (int k = bins; k < n_; ++k) buf[k] = std::conj(in[n_ - k]);
    inverse(buf.data());
    for (int i = 0; i < n_; ++i) out[i] = buf[i].real();
  }

 private:
  // Decimation-in-time over the factor list. `in` is read with the given
  // stride; `out` receives the contiguous length-n spectrum. `scratch`
  // must hold at least n entries and is reused down the recursion.
  void rec(const cd* in, cd* out, cd* scratch, int n, int stride,
           size_t level) const {
    if (n == 1) {
      out[0] = in[0];
      return;
    }
    const int p = factors_[level];
    const int m = n / p;
    for (int r = 0; r < p; ++r) {
      rec(in + r * stride, out + r * m, scratch, m, stride * p, level + 1);
    }
    const int tw_step = n_ / n;
    for (int k = 0; k < m; ++k) {
      for (int q = 0; q < p; ++q) {
        const int idx = q * m + k;
        cd acc(0.0, 0.0);
        for (int r = 0; r < p; ++r) {
          acc += out[r * m + k] *
                 twiddle_[static_cast<size_t>(idx) * r % n * tw_step];
        }
        scratch[idx] = acc;
      }
    }
    std::copy(scratch, scratch + n, out);
  }

  int n_;
  std::vector<int> factors_;
  std::vector<cd> twiddle_;
};

}  // namespace sfnet::detail

#endif  // SFNET_FFT_HPP_
