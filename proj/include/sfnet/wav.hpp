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

#ifndef SFNET_WAV_HPP_
#define SFNET_WAV_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sfnet/common.hpp"
#include "sfnet/frontend.hpp"

namespace sfnet {

enum class WavFormat { Pcm16, Float32 };

struct WavData {
  std::vector<double> samples;  // interleaved if multichannel
  int sample_rate = 0;
  int channels = 0;
  WavFormat format = WavFormat::Float32;
};

namespace detail {

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError(std::string("wav: truncated ") + what);
  return v;
}

}  // namespace detail

// Parses a RIFF/WAVE file. PCM16 and IEEE float32 are accepted, including
// the WAVE_FORMAT_EXTENSIBLE wrapping of either.
inline WavData read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("wav: cannot open " + path);

  char riff[4], wave[4];
  is.read(riff, 4);
  uint32_t riff_size = detail::read_pod<uint32_t>(is, "header");
  (void)riff_size;
  is.read(wave, 4);
  if (!is || std::memcmp(riff, "RIFF", 4) != 0 ||
      std::memcmp(wave, "WAVE", 4) != 0)
    throw DataError("wav: not a RIFF/WAVE file: " + path);

  WavData out;
  uint16_t format_code = 0, bits = 0;
  bool have_fmt = false, have_data = false;
  std::vector<uint8_t> data;

  while (is) {
    char id[4];
    is.read(id, 4);
    if (!is) break;
    uint32_t len = detail::read_pod<uint32_t>(is, "chunk header");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw DataError("wav: malformed fmt chunk");
      std::vector<uint8_t> fmt(len);
      is.read(reinterpret_cast<char*>(fmt.data()), len);
      if (!is) throw DataError("wav: truncated fmt chunk");
      auto u16 = [&](size_t off) {
        uint16_t v;
        std::memcpy(&v, fmt.data() + off, 2);
        return v;
      };
      auto u32 = [&](size_t off) {
        uint32_t v;
        std::memcpy(&v, fmt.data() + off, 4);
        return v;
      };
      format_code = u16(0);
      out.channels = u16(2);
      out.sample_rate = int(u32(4));
      bits = u16(14);
      if (format_code == 0xFFFE) {  // extensible: sub-format leads the GUID
        if (len < 40) throw DataError("wav: malformed extensible fmt chunk");
        format_code = u16(24);
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data.resize(len);
      is.read(reinterpret_cast<char*>(data.data()), len);
      if (!is) throw DataError("wav: data chunk shorter than header claims");
      have_data = true;
    } else {
      is.seekg(len + (len & 1), std::ios::cur);
      continue;
    }
    if (len & 1) is.seekg(1, std::ios::cur);  // chunks are word-aligned
  }
  if (!have_fmt) throw DataError("wav: missing fmt chunk");
  if (!have_data) throw DataError("wav: missing data chunk");

  if (format_code == 1 && bits == 16) {
    out.format = WavFormat::Pcm16;
    const size_t n = data.size() / 2;
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      int16_t v;
      std::memcpy(&v, data.data() + i * 2, 2);
      out.samples[i] = double(v) / 32768.0;
    }
  } else if (format_code == 3 && bits == 32) {
    out.format = WavFormat::Float32;
    const size_t n = data.size() / 4;
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, data.data() + i * 4, 4);
      out.samples[i] = double(v);
    }
  } else {
    throw DataError("wav: unsupported encoding (format " +
                    std::to_string(format_code) + ", " + std::to_string(bits) +
                    " bits); expected PCM16 or float32");
  }
  return out;
}

// Engine-facing conversion: the model is defined at mono 48 kHz and there is
// deliberately no silent resampling or downmixing.
inline Waveform to_waveform(const WavData& w) {
  if (w.channels != 1)
    throw DataError("wav: expected 1 channel (mono), got " +
                    std::to_string(w.channels));
  if (w.sample_rate != kSampleRate)
    throw DataError("wav: expected 48000 Hz, got " +
                    std::to_string(w.sample_rate));
  return Waveform{w.samples, w.sample_rate};
}

inline void write_wav(const std::string& path, const Waveform& w,
                      WavFormat format = WavFormat::Float32) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("wav: cannot open for writing " + path);

  const uint16_t channels = 1;
  const uint32_t rate = uint32_t(w.sample_rate);
  const uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
  const uint16_t block = channels * bits / 8;
  const uint32_t data_len = uint32_t(w.samples.size() * block);
  const uint16_t code = format == WavFormat::Pcm16 ? 1 : 3;
  const bool fact = format == WavFormat::Float32;
  const uint32_t riff_len = 4 + (8 + 16) + (fact ? 8 + 4 : 0) + 8 + data_len;

  auto put16 = [&](uint16_t v) { os.write(reinterpret_cast<char*>(&v), 2); };
  auto put32 = [&](uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); };

  os.write("RIFF", 4);
  put32(riff_len);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put32(16);
  put16(code);
  put16(channels);
  put32(rate);
  put32(rate * block);
  put16(block);
  put16(bits);
  if (fact) {
    os.write("fact", 4);
    put32(4);
    put32(uint32_t(w.samples.size()));
  }
  os.write("data", 4);
  put32(data_len);

  if (format == WavFormat::Pcm16) {
    for (double s : w.samples) {
      long v = std::lround(s * 32768.0);
      v = std::clamp(v, -32768L, 32767L);
      const int16_t pcm = int16_t(v);
      os.write(reinterpret_cast<const char*>(&pcm), 2);
    }
  } else {
    for (double s : w.samples) {
      const float f = float(s);
      os.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
  if (!os) throw DataError("wav: short write " + path);
}

}  // namespace sfnet

#endif  // SFNET_WAV_HPP_
