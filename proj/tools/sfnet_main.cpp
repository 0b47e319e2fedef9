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
//
// sfnet: command-line front end for the full-band speech enhancement engine.
//   enhance   denoise a 48 kHz mono WAV (offline or streaming)
//   metrics   SSNR / SDR between a reference and an estimate
//   mix       mix clean speech with noise at an exact SNR
//   init      create a seeded random weight file
//   describe  parameter / MACs report for a configuration
//   bench     streaming real-time-factor benchmark

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfnet/sfnet.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 2;
constexpr int kExitWeights = 3;
constexpr int kExitUsage = 64;

// Published reference figures for the full proposed configuration.
constexpr double kReferenceParamsM = 6.98;
constexpr double kReferenceMacsG = 5.62;

std::string with_commas(long long v) {
  std::string s = std::to_string(v);
  for (int pos = int(s.size()) - 3; pos > 0; pos -= 3)
    s.insert(size_t(pos), ",");
  return s;
}

sfnet::WeightSet load_or_default(const std::string& weights_path,
                                 uint64_t seed = 0) {
  if (!weights_path.empty()) return sfnet::WeightSet::load(weights_path);
  return sfnet::WeightSet::init(sfnet::EngineConfig{}, seed);
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

struct EnhanceArgs {
  std::string input, output, weights, mode = "offline";
  int chunk = 0;
  bool identity = false;
  bool pcm16 = false;
};

int cmd_enhance(const EnhanceArgs& a) {
  if (a.mode != "offline" && a.mode != "streaming") {
    std::cerr << "enhance: --mode must be 'offline' or 'streaming'\n";
    return kExitUsage;
  }
  if (a.chunk != 0 && a.mode != "streaming") {
    std::cerr << "enhance: --chunk only applies to --mode streaming\n";
    return kExitUsage;
  }
  if (a.chunk < 0) {
    std::cerr << "enhance: --chunk must be positive\n";
    return kExitUsage;
  }
  if (a.weights.empty() && !a.identity) {
    std::cerr << "enhance: need --weights or --identity\n";
    return kExitUsage;
  }

  const sfnet::Waveform in = sfnet::to_waveform(sfnet::read_wav(a.input));
  auto ws = std::make_shared<const sfnet::WeightSet>(
      load_or_default(a.weights));
  sfnet::SfNetEngine engine(ws);
  sfnet::EnhanceOptions opts;
  opts.identity = a.identity;

  sfnet::Waveform out;
  const double t0 = now_seconds();
  if (a.mode == "offline") {
    out = engine.enhance(in, opts);
  } else {
    auto stream = engine.create_stream(opts);
    const size_t chunk = a.chunk > 0 ? size_t(a.chunk) : 4800;
    out.sample_rate = in.sample_rate;
    for (size_t pos = 0; pos < in.samples.size(); pos += chunk) {
      const size_t n = std::min(chunk, in.samples.size() - pos);
      auto part = stream->process(in.samples.data() + pos, n);
      out.samples.insert(out.samples.end(), part.begin(), part.end());
    }
    auto tail = stream->flush();
    out.samples.insert(out.samples.end(), tail.begin(), tail.end());
  }
  const double elapsed = now_seconds() - t0;
  const double audio_sec = double(in.samples.size()) / sfnet::kSampleRate;

  sfnet::write_wav(a.output, out,
                   a.pcm16 ? sfnet::WavFormat::Pcm16
                           : sfnet::WavFormat::Float32);
  std::printf("enhanced %.3f s of audio in %.3f s (rtf %.3f, mode %s)\n",
              audio_sec, elapsed, elapsed / audio_sec, a.mode.c_str());
  return kExitOk;
}

int cmd_metrics(const std::string& ref_path, const std::string& est_path,
                bool as_json) {
  const sfnet::Waveform ref = sfnet::to_waveform(sfnet::read_wav(ref_path));
  const sfnet::Waveform est = sfnet::to_waveform(sfnet::read_wav(est_path));
  const double ssnr_db = sfnet::ssnr(ref, est);
  const double sdr_db = sfnet::sdr(ref, est);
  if (as_json) {
    nlohmann::json j = {{"ssnr_db", ssnr_db}, {"sdr_db", sdr_db}};
    std::cout << j.dump() << "\n";
  } else {
    std::printf("ssnr: %.2f dB\nsdr:  %.2f dB\n", ssnr_db, sdr_db);
  }
  return kExitOk;
}

int cmd_mix(const std::string& clean_path, const std::string& noise_path,
            double snr_db, const std::string& out_path) {
  const sfnet::Waveform clean = sfnet::to_waveform(sfnet::read_wav(clean_path));
  const sfnet::Waveform noise = sfnet::to_waveform(sfnet::read_wav(noise_path));
  const sfnet::MixResult r = sfnet::mix_at_snr(clean, noise, snr_db);
  sfnet::write_wav(out_path, r.mix);
  std::printf("mixed at %+.2f dB SNR (noise scale %.6g, peak gain %.6g)\n",
              snr_db, r.noise_scale, r.peak_gain);
  return kExitOk;
}

int cmd_init(const std::string& config_path, uint64_t seed,
             const std::string& out_path) {
  sfnet::EngineConfig cfg;
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw sfnet::DataError("cannot open config: " + config_path);
    nlohmann::json j;
    is >> j;
    j.get_to(cfg);
  }
  const sfnet::WeightSet ws = sfnet::WeightSet::init(cfg, seed);
  ws.save(out_path);
  const auto report =
      sfnet::complexity_report(cfg.arch, cfg.frontend, cfg.bands.band_bins());
  std::printf("wrote %s (%s parameters, seed %llu)\n", out_path.c_str(),
              with_commas(report.params_total).c_str(),
              static_cast<unsigned long long>(seed));
  return kExitOk;
}

int cmd_describe(const std::string& weights_path, bool as_json) {
  sfnet::EngineConfig cfg;
  if (!weights_path.empty())
    cfg = sfnet::WeightSet::load(weights_path).config();
  const auto r =
      sfnet::complexity_report(cfg.arch, cfg.frontend, cfg.bands.band_bins());

  const double params_m = double(r.params_total) / 1e6;
  const double macs_g = r.macs_per_second / 1e9;
  const double params_dev = 100.0 * (params_m / kReferenceParamsM - 1.0);
  const double macs_dev = 100.0 * (macs_g / kReferenceMacsG - 1.0);

  if (as_json) {
    nlohmann::json j = {{"params_total", r.params_total},
                        {"params_per_subnet", r.params_per_subnet},
                        {"macs_per_frame", r.macs_per_frame},
                        {"macs_per_sec", r.macs_per_second},
                        {"reference_params_m", kReferenceParamsM},
                        {"reference_macs_g", kReferenceMacsG},
                        {"params_deviation_pct", params_dev},
                        {"macs_deviation_pct", macs_dev}};
    std::cout << j.dump() << "\n";
    return kExitOk;
  }
  std::printf("SF-Net complexity report\n");
  for (const auto& [net, p] : r.params_per_subnet)
    std::printf("  %-12s %14s params\n", net.c_str(),
                with_commas(p).c_str());
  std::printf("  %-12s %14s params (%.2f M)\n", "total",
              with_commas(r.params_total).c_str(), params_m);
  std::printf("  %-12s %14s per frame (%.2f G/s at %d frames/s)\n", "macs",
              with_commas(r.macs_per_frame).c_str(), macs_g,
              sfnet::kSampleRate / cfg.frontend.hop);
  std::printf("  reference (published): %.2f M params, %.2f G MACs/s\n",
              kReferenceParamsM, kReferenceMacsG);
  std::printf("  deviation: params %+.1f%%, MACs %+.1f%%\n", params_dev,
              macs_dev);
  return kExitOk;
}

int cmd_bench(const std::string& weights_path, double seconds, int chunk,
              bool as_json) {
  if (seconds <= 0) {
    std::cerr << "bench: --seconds must be positive\n";
    return kExitUsage;
  }
  auto ws = std::make_shared<const sfnet::WeightSet>(
      load_or_default(weights_path));
  sfnet::SfNetEngine engine(ws);
  const auto& cfg = engine.config();
  const auto report =
      sfnet::complexity_report(cfg.arch, cfg.frontend, cfg.bands.band_bins());

  std::mt19937 rng(12345);
  auto noise_chunk = [&rng](size_t n) {
    std::vector<double> v(n);
    for (auto& s : v) s = double(rng()) / 4294967296.0 - 0.5;
    return v;
  };
  const size_t chunk_sz = chunk > 0 ? size_t(chunk) : size_t(cfg.frontend.hop);

  auto run = [&](double secs) {
    auto stream = engine.create_stream();
    size_t total = size_t(secs * sfnet::kSampleRate);
    const double t0 = now_seconds();
    for (size_t fed = 0; fed < total; fed += chunk_sz) {
      auto in = noise_chunk(std::min(chunk_sz, total - fed));
      auto out = stream->process(in);
    }
    auto tail = stream->flush();
    return now_seconds() - t0;
  };

  run(std::min(1.0, seconds));  // warm-up
  const double elapsed = run(seconds);
  const double rtf = elapsed / seconds;

  if (as_json) {
    nlohmann::json j = {{"rtf", rtf},
                        {"seconds", seconds},
                        {"elapsed_sec", elapsed},
                        {"macs_per_sec", report.macs_per_second},
                        {"params_total", report.params_total}};
    std::cout << j.dump() << "\n";
  } else {
    std::printf("processed %.1f s in %.3f s: rtf %.3f (%.2f G MACs/s model)\n",
                seconds, elapsed, rtf, report.macs_per_second / 1e9);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sfnet: real-time full-band (48 kHz) speech enhancement"};
  app.require_subcommand(1);

  EnhanceArgs enh;
  auto* enhance = app.add_subcommand("enhance", "Denoise a WAV file");
  enhance->add_option("--input", enh.input, "Input WAV (mono, 48 kHz)")
      ->required();
  enhance->add_option("--output", enh.output, "Output WAV")->required();
  enhance->add_option("--weights", enh.weights, "Weight file (.sfnw)");
  enhance->add_option("--mode", enh.mode, "offline | streaming");
  enhance->add_option("--chunk", enh.chunk,
                      "Streaming chunk size in samples (default 4800)");
  enhance->add_flag("--identity", enh.identity,
                    "Passthrough configuration (unit gains, zero residual)");
  enhance->add_flag("--pcm16", enh.pcm16, "Write 16-bit PCM instead of float");

  std::string m_ref, m_est;
  bool m_json = false;
  auto* metrics = app.add_subcommand("metrics", "SSNR / SDR of an estimate");
  metrics->add_option("--ref", m_ref, "Reference WAV")->required();
  metrics->add_option("--est", m_est, "Estimate WAV")->required();
  metrics->add_flag("--json", m_json, "Machine-readable output");

  std::string x_clean, x_noise, x_out;
  double x_snr = 0.0;
  auto* mix = app.add_subcommand("mix", "Mix clean speech with noise");
  mix->add_option("--clean", x_clean, "Clean WAV")->required();
  mix->add_option("--noise", x_noise, "Noise WAV")->required();
  mix->add_option("--snr", x_snr, "Target SNR in dB")->required();
  mix->add_option("--output", x_out, "Output WAV")->required();

  std::string i_config, i_out;
  uint64_t i_seed = 0;
  auto* init = app.add_subcommand("init", "Create a seeded weight file");
  init->add_option("--config", i_config, "Engine config JSON (optional)");
  init->add_option("--seed", i_seed, "RNG seed");
  init->add_option("--output", i_out, "Output .sfnw path")->required();

  std::string d_weights;
  bool d_json = false;
  auto* describe = app.add_subcommand("describe", "Parameter / MACs report");
  describe->add_option("--weights", d_weights,
                       "Weight file; default configuration when omitted");
  describe->add_flag("--json", d_json, "Machine-readable output");

  std::string b_weights;
  double b_seconds = 10.0;
  int b_chunk = 0;
  bool b_json = false;
  auto* bench = app.add_subcommand("bench", "Streaming RTF benchmark");
  bench->add_option("--weights", b_weights,
                    "Weight file; seeded default when omitted");
  bench->add_option("--seconds", b_seconds, "Seconds of audio (default 10)");
  bench->add_option("--chunk", b_chunk, "Chunk size (default one hop)");
  bench->add_flag("--json", b_json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (enhance->parsed()) return cmd_enhance(enh);
    if (metrics->parsed()) return cmd_metrics(m_ref, m_est, m_json);
    if (mix->parsed()) return cmd_mix(x_clean, x_noise, x_snr, x_out);
    if (init->parsed()) return cmd_init(i_config, i_seed, i_out);
    if (describe->parsed()) return cmd_describe(d_weights, d_json);
    if (bench->parsed()) return cmd_bench(b_weights, b_seconds, b_chunk, b_json);
  } catch (const sfnet::WeightsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitWeights;
  } catch (const sfnet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
