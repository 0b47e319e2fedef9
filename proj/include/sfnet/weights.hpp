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

#ifndef SFNET_WEIGHTS_HPP_
#define SFNET_WEIGHTS_HPP_

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfnet/arch.hpp"
#include "sfnet/common.hpp"
#include "sfnet/nn_core.hpp"

namespace sfnet {

struct WeightsError : Error {
  using Error::Error;
};
// Bad magic/version, unparsable manifest, or a file shorter than the
// manifest promises.
struct WeightsFormatError : WeightsError {
  using WeightsError::WeightsError;
};
struct WeightsChecksumError : WeightsError {
  using WeightsError::WeightsError;
};
// Tensor directory disagrees with the manifest's architecture.
struct WeightsShapeError : WeightsError {
  using WeightsError::WeightsError;
};

namespace detail {

inline uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = seed ^ 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian; big-endian hosts unsupported");

template <typename T>
void write_le(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_le(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return bool(is);
}

}  // namespace detail

// NLohmann adapters; object keys serialize sorted, which keeps the manifest
// canonical.
inline void to_json(nlohmann::json& j, const FrontendConfig& c) {
  j = {{"window_len", c.window_len},
       {"hop", c.hop},
       {"fft_size", c.fft_size},
       {"beta", c.beta},
       {"window", "hann"}};
}
inline void from_json(const nlohmann::json& j, FrontendConfig& c) {
  j.at("window_len").get_to(c.window_len);
  j.at("hop").get_to(c.hop);
  j.at("fft_size").get_to(c.fft_size);
  j.at("beta").get_to(c.beta);
  if (j.at("window").get<std::string>() != "hann")
    throw ConfigError("frontend: unsupported analysis window");
  c.window = WindowKind::Hann;
}
inline void to_json(nlohmann::json& j, const BandLayout& b) {
  j = {{"lb", {b.lb_lo, b.lb_hi}},
       {"mb", {b.mb_lo, b.mb_hi}},
       {"hb", {b.hb_lo, b.hb_hi}}};
}
inline void from_json(const nlohmann::json& j, BandLayout& b) {
  b.lb_lo = j.at("lb").at(0);
  b.lb_hi = j.at("lb").at(1);
  b.mb_lo = j.at("mb").at(0);
  b.mb_hi = j.at("mb").at(1);
  b.hb_lo = j.at("hb").at(0);
  b.hb_hi = j.at("hb").at(1);
}
inline void to_json(nlohmann::json& j, const ArchConfig& a) {
  j = {{"dslb_channels", a.dslb_channels},
       {"band_channels", a.band_channels},
       {"guide_channels", a.guide_channels},
       {"encoder_depth", a.encoder_depth},
       {"dslb_tcm_groups", a.dslb_tcm_groups},
       {"band_tcm_groups", a.band_tcm_groups},
       {"dilations", a.dilations},
       {"stcm_kernel", a.stcm_kernel},
       {"stcm_hidden_dslb", a.stcm_hidden_dslb},
       {"stcm_hidden_band", a.stcm_hidden_band},
       {"head_channels", a.head_channels},
       {"share_stcm", a.share_stcm}};
}
inline void from_json(const nlohmann::json& j, ArchConfig& a) {
  j.at("dslb_channels").get_to(a.dslb_channels);
  j.at("band_channels").get_to(a.band_channels);
  j.at("guide_channels").get_to(a.guide_channels);
  j.at("encoder_depth").get_to(a.encoder_depth);
  j.at("dslb_tcm_groups").get_to(a.dslb_tcm_groups);
  j.at("band_tcm_groups").get_to(a.band_tcm_groups);
  j.at("dilations").get_to(a.dilations);
  j.at("stcm_kernel").get_to(a.stcm_kernel);
  j.at("stcm_hidden_dslb").get_to(a.stcm_hidden_dslb);
  j.at("stcm_hidden_band").get_to(a.stcm_hidden_band);
  j.at("head_channels").get_to(a.head_channels);
  j.at("share_stcm").get_to(a.share_stcm);
}
inline void to_json(nlohmann::json& j, const EngineConfig& c) {
  j = {{"frontend", c.frontend}, {"arch", c.arch}, {"bands", c.bands}};
}
inline void from_json(const nlohmann::json& j, EngineConfig& c) {
  j.at("frontend").get_to(c.frontend);
  j.at("arch").get_to(c.arch);
  j.at("bands").get_to(c.bands);
}

// Named-tensor parameter store. Entries are immutable shared buffers so
// sub-networks can alias shared tensors without copies; the set itself is
// safe to share across threads once built.
class WeightSet {
 public:
  static constexpr uint32_t kFormatVersion = 1;
  static constexpr char kMagic[5] = "SFNW";

  struct Entry {
    std::vector<int> shape;
    SharedFloats data;
  };

  WeightSet() = default;
  explicit WeightSet(EngineConfig cfg) : config_(std::move(cfg)) {
    config_.validate();
  }

  const EngineConfig& config() const { return config_; }

  bool has(const std::string& name) const { return entries_.count(name) > 0; }

  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw WeightsShapeError("missing tensor: " + name);
    return it->second;
  }

  // Fetch a tensor, insisting on the exact shape the caller expects.
  SharedFloats require(const std::string& name,
                       const std::vector<int>& shape) const {
    const Entry& e = entry(name);
    if (e.shape != shape)
      throw WeightsShapeError("tensor shape mismatch: " + name);
    return e.data;
  }

  void set(const std::string& name, std::vector<int> shape,
           std::vector<float> data) {
    size_t n = 1;
    for (int d : shape) n *= size_t(d);
    if (data.size() != n)
      throw DimensionError("weight set: data does not match shape: " + name);
    entries_[name] = Entry{std::move(shape), make_shared_floats(std::move(data))};
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  // Every tensor the architecture requires, with the exact shape, and
  // nothing else.
  void validate_against_plan() const {
    const NetPlan plan = build_plan(config_.arch, config_.bands.band_bins());
    for (const auto& spec : plan.tensors) {
      auto it = entries_.find(spec.name);
      if (it == entries_.end())
        throw WeightsShapeError("missing tensor: " + spec.name);
      if (it->second.shape != spec.shape)
        throw WeightsShapeError("tensor shape mismatch: " + spec.name);
    }
    if (entries_.size() != plan.tensors.size()) {
      for (const auto& [name, e] : entries_)
        if (plan.find(name) == nullptr)
          throw WeightsShapeError("orphan tensor: " + name);
    }
  }

  // Deterministic seeded initialization: kernels uniform in
  // [-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero, PReLU slopes 0.25,
  // norm gains one. The generator is consumed tensor-by-tensor in sorted
  // name order, so equal seeds give bit-identical sets.
  static WeightSet init(const EngineConfig& cfg, uint64_t seed) {
    WeightSet ws(cfg);
    const NetPlan plan = build_plan(cfg.arch, cfg.bands.band_bins());
    std::mt19937 rng(static_cast<uint32_t>(seed ^ (seed >> 32)));
    for (const auto& spec : plan.tensors) {
      std::vector<float> data(spec.elements());
      switch (spec.init) {
        case InitKind::Kernel: {
          const float bound = 1.0f / std::sqrt(float(spec.fan_in));
          for (auto& v : data) {
            // 24 explicit mantissa-ish bits; avoids the unspecified
            // distribution implementations
            const uint32_t u = rng() >> 8;
            v = bound * (float(u) * (1.0f / 8388608.0f) - 1.0f);
          }
          break;
        }
        case InitKind::Bias:
          break;  // zeros
        case InitKind::NormGain:
          std::fill(data.begin(), data.end(), 1.0f);
          break;
        case InitKind::PreluSlope:
          std::fill(data.begin(), data.end(), 0.25f);
          break;
      }
      ws.set(spec.name, spec.shape, std::move(data));
    }
    return ws;
  }

  // File layout (all integers little-endian):
  //   "SFNW" | u32 version | u64 manifest length | manifest (canonical
  //   JSON, sorted keys) | float32 payload | u32 CRC32 of the payload.
  // The manifest holds the engine config and a directory of (name, shape,
  // byte offset into the payload), tensors in name order.
  void save(const std::string& path) const {
    validate_against_plan();
    nlohmann::json dir = nlohmann::json::array();
    uint64_t offset = 0;
    for (const auto& [name, e] : entries_) {  // std::map: name order
      dir.push_back({{"name", name},
                     {"shape", e.shape},
                     {"offset", offset}});
      offset += e.data->size() * sizeof(float);
    }
    nlohmann::json manifest = {{"config", config_},
                               {"format_version", kFormatVersion},
                               {"tensors", dir}};
    const std::string mstr = manifest.dump();

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw WeightsError("cannot open for writing: " + path);
    os.write(kMagic, 4);
    detail::write_le<uint32_t>(os, kFormatVersion);
    detail::write_le<uint64_t>(os, mstr.size());
    os.write(mstr.data(), std::streamsize(mstr.size()));

    uint32_t crc = 0;
    for (const auto& [name, e] : entries_) {
      const auto* bytes = reinterpret_cast<const uint8_t*>(e.data->data());
      const size_t len = e.data->size() * sizeof(float);
      os.write(reinterpret_cast<const char*>(bytes), std::streamsize(len));
      crc = detail::crc32(bytes, len, crc);
    }
    detail::write_le<uint32_t>(os, crc);
    if (!os) throw WeightsError("short write: " + path);
  }

  static WeightSet load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw WeightsError("cannot open: " + path);

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
      throw WeightsFormatError("bad magic; not a weight file: " + path);
    uint32_t version = 0;
    if (!detail::read_le(is, version))
      throw WeightsFormatError("truncated header: " + path);
    if (version != kFormatVersion)
      throw WeightsFormatError("unsupported format version " +
                               std::to_string(version));
    uint64_t mlen = 0;
    if (!detail::read_le(is, mlen))
      throw WeightsFormatError("truncated header: " + path);
    std::string mstr(mlen, '\0');
    is.read(mstr.data(), std::streamsize(mlen));
    if (!is) throw WeightsFormatError("truncated manifest: " + path);

    nlohmann::json manifest;
    try {
      manifest = nlohmann::json::parse(mstr);
    } catch (const nlohmann::json::exception& e) {
      throw WeightsFormatError(std::string("bad manifest: ") + e.what());
    }

    WeightSet ws;
    try {
      manifest.at("config").get_to(ws.config_);
      if (manifest.at("format_version").get<uint32_t>() != kFormatVersion)
        throw WeightsFormatError("manifest format_version mismatch");
    } catch (const nlohmann::json::exception& e) {
      throw WeightsFormatError(std::string("bad manifest: ") + e.what());
    }
    ws.config_.validate();

    // The directory must match the architecture exactly before any payload
    // is trusted.
    const NetPlan plan =
        build_plan(ws.config_.arch, ws.config_.bands.band_bins());
    const auto& dir = manifest.at("tensors");
    if (!dir.is_array())
      throw WeightsFormatError("manifest tensor directory is not a list");
    if (dir.size() != plan.tensors.size())
      throw WeightsShapeError(
          "tensor directory size mismatch: file has " +
          std::to_string(dir.size()) + ", architecture needs " +
          std::to_string(plan.tensors.size()));
    struct DirEntry {
      std::vector<int> shape;
      uint64_t offset;
    };
    std::map<std::string, DirEntry> by_name;
    for (const auto& d : dir) {
      by_name[d.at("name").get<std::string>()] = {
          d.at("shape").get<std::vector<int>>(), d.at("offset").get<uint64_t>()};
    }
    uint64_t payload_len = 0;
    for (const auto& spec : plan.tensors) {
      auto it = by_name.find(spec.name);
      if (it == by_name.end())
        throw WeightsShapeError("missing tensor: " + spec.name);
      if (it->second.shape != spec.shape)
        throw WeightsShapeError("tensor shape mismatch: " + spec.name);
      payload_len += spec.elements() * sizeof(float);
    }

    std::vector<uint8_t> payload(payload_len);
    is.read(reinterpret_cast<char*>(payload.data()),
            std::streamsize(payload_len));
    if (!is) throw WeightsFormatError("truncated payload: " + path);
    uint32_t stored_crc = 0;
    if (!detail::read_le(is, stored_crc))
      throw WeightsFormatError("missing checksum: " + path);
    const uint32_t crc = detail::crc32(payload.data(), payload.size());
    if (crc != stored_crc)
      throw WeightsChecksumError("payload checksum mismatch: " + path);

    for (const auto& spec : plan.tensors) {
      const uint64_t off = by_name[spec.name].offset;
      const size_t bytes = spec.elements() * sizeof(float);
      if (off + bytes > payload.size())
        throw WeightsFormatError("tensor offset out of range: " + spec.name);
      std::vector<float> data(spec.elements());
      std::memcpy(data.data(), payload.data() + off, bytes);
      ws.set(spec.name, spec.shape, std::move(data));
    }
    return ws;
  }

 private:
  EngineConfig config_;
  std::map<std::string, Entry> entries_;
};

}  // namespace sfnet

#endif  // SFNET_WEIGHTS_HPP_
