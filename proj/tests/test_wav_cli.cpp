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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "helpers.hpp"
#include "sfnet/metrics.hpp"
#include "sfnet/wav.hpp"
#include "sfnet/weights.hpp"

using namespace sfnet;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "sfnet_cli_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string tmp(const char* name) { return (tmp_dir() / name).string(); }

// Runs the CLI; returns the exit code and captures stdout+stderr.
int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string out_file = tmp("cli_output.txt");
  const std::string cmd =
      std::string(SFNET_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream is(out_file);
    *output = std::string(std::istreambuf_iterator<char>(is), {});
  }
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

EngineConfig tiny_config() {
  EngineConfig cfg;
  cfg.arch.dslb_channels = 8;
  cfg.arch.band_channels = 8;
  cfg.arch.guide_channels = 4;
  cfg.arch.stcm_hidden_dslb = 8;
  cfg.arch.stcm_hidden_band = 8;
  cfg.arch.head_channels = 4;
  cfg.arch.dslb_tcm_groups = 2;
  cfg.arch.band_tcm_groups = 2;
  cfg.arch.dilations = {1, 2};
  return cfg;
}

}  // namespace

TEST_CASE("float32 wav round trip is sample-exact") {
  Waveform w = testing::random_waveform(4321, 900);
  for (double& s : w.samples) s = double(float(s));  // float-representable
  const std::string path = tmp("f32.wav");
  write_wav(path, w, WavFormat::Float32);
  WavData back = read_wav(path);
  CHECK(back.sample_rate == 48000);
  CHECK(back.channels == 1);
  CHECK(back.format == WavFormat::Float32);
  REQUIRE(back.samples.size() == w.samples.size());
  for (size_t i = 0; i < w.samples.size(); ++i)
    CHECK(back.samples[i] == w.samples[i]);
}

TEST_CASE("pcm16 wav round trip stays within one LSB") {
  Waveform w = testing::random_waveform(2000, 901);
  const std::string path = tmp("pcm16.wav");
  write_wav(path, w, WavFormat::Pcm16);
  WavData back = read_wav(path);
  CHECK(back.format == WavFormat::Pcm16);
  REQUIRE(back.samples.size() == w.samples.size());
  for (size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1.0 / 32768.0);
}

TEST_CASE("stereo and wrong-rate files are rejected with clear messages") {
  // Hand-assemble a stereo PCM16 header.
  const std::string path = tmp("stereo.wav");
  {
    std::ofstream os(path, std::ios::binary);
    auto p16 = [&](uint16_t v) { os.write((char*)&v, 2); };
    auto p32 = [&](uint32_t v) { os.write((char*)&v, 4); };
    os.write("RIFF", 4);
    p32(36 + 8);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    p32(16);
    p16(1);      // PCM
    p16(2);      // stereo
    p32(48000);
    p32(48000 * 4);
    p16(4);
    p16(16);
    os.write("data", 4);
    p32(8);
    for (int i = 0; i < 4; ++i) p16(0);
  }
  WavData stereo = read_wav(path);
  CHECK(stereo.channels == 2);
  try {
    (void)to_waveform(stereo);
    FAIL("expected a channel-count error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("channel") != std::string::npos);
  }

  Waveform w44 = testing::random_waveform(100, 902);
  const std::string p44 = tmp("rate44.wav");
  w44.sample_rate = 44100;
  write_wav(p44, w44);
  CHECK_THROWS_AS((void)to_waveform(read_wav(p44)), DataError);
}

TEST_CASE("unknown chunks are skipped") {
  const std::string path = tmp("extra_chunk.wav");
  Waveform w = testing::random_waveform(64, 903);
  for (double& s : w.samples) s = double(float(s));
  write_wav(path, w, WavFormat::Float32);
  // Splice a LIST chunk between fmt and data.
  std::ifstream is(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(is)), {});
  is.close();
  const size_t data_pos = bytes.find("data");
  REQUIRE(data_pos != std::string::npos);
  std::string extra = "LIST";
  uint32_t len = 6;
  extra.append((char*)&len, 4);
  extra.append("junk__", 6);
  bytes.insert(data_pos, extra);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os.write(bytes.data(), std::streamsize(bytes.size()));
  os.close();
  WavData back = read_wav(path);
  REQUIRE(back.samples.size() == w.samples.size());
  CHECK(back.samples[10] == w.samples[10]);
}

TEST_CASE("cli: usage errors exit 64") {
  CHECK(run_cli("") == 64);
  CHECK(run_cli("enhance") == 64);  // missing required options
  CHECK(run_cli("no-such-command") == 64);

  // mode/chunk misuse
  const std::string in = tmp("usage_in.wav");
  write_wav(in, testing::speech_like(0.1, 904));
  CHECK(run_cli("enhance --input " + in + " --output " + tmp("usage_out.wav") +
                " --identity --mode offline --chunk 7") == 64);
  CHECK(run_cli("enhance --input " + in + " --output " + tmp("usage_out.wav") +
                " --mode streaming") == 64);  // no weights, no --identity
}

TEST_CASE("cli: bad wav exits 2, bad weights exit 3") {
  const std::string bad_wav = tmp("not_a.wav");
  {
    std::ofstream os(bad_wav, std::ios::binary);
    os << "this is not audio";
  }
  std::string msg;
  CHECK(run_cli("enhance --input " + bad_wav + " --output " +
                tmp("x.wav") + " --identity", &msg) == 2);

  const std::string in = tmp("ok_in.wav");
  write_wav(in, testing::speech_like(0.1, 905));
  const std::string bad_ws = tmp("bad.sfnw");
  {
    std::ofstream os(bad_ws, std::ios::binary);
    os << "SFNWgarbage";
  }
  CHECK(run_cli("enhance --input " + in + " --output " + tmp("x.wav") +
                " --weights " + bad_ws) == 3);

  // stereo input: data error
  const std::string stereo = tmp("stereo.wav");  // written above
  std::string out;
  CHECK(run_cli("enhance --input " + stereo + " --output " + tmp("x.wav") +
                " --identity", &out) == 2);
  CHECK(out.find("channel") != std::string::npos);
}

TEST_CASE("cli: identity enhancement passes audio through") {
  const std::string in = tmp("identity_in.wav");
  const std::string out = tmp("identity_out.wav");
  Waveform w = testing::speech_like(0.4, 906);
  write_wav(in, w);

  CHECK(run_cli("enhance --input " + in + " --output " + out +
                " --identity --mode streaming --chunk 480") == 0);
  Waveform got = to_waveform(read_wav(out));
  REQUIRE(got.samples.size() == w.samples.size());
  double err = 0.0;
  for (size_t i = 0; i + 480 < w.samples.size(); ++i)
    err = std::max(err, std::abs(got.samples[i] - w.samples[i]));
  CHECK(err < 2e-5);  // float32 wav quantization on top of the engine
}

TEST_CASE("cli: offline and streaming modes agree through files") {
  const std::string cfg_path = tmp("tiny_cfg.json");
  {
    nlohmann::json j = tiny_config();
    std::ofstream os(cfg_path);
    os << j.dump();
  }
  const std::string ws_path = tmp("tiny.sfnw");
  CHECK(run_cli("init --config " + cfg_path + " --seed 5 --output " +
                ws_path) == 0);

  const std::string in = tmp("mode_in.wav");
  write_wav(in, testing::speech_like(0.4, 907));
  const std::string out_off = tmp("mode_off.wav");
  const std::string out_str = tmp("mode_str.wav");
  CHECK(run_cli("enhance --input " + in + " --output " + out_off +
                " --weights " + ws_path + " --mode offline") == 0);
  CHECK(run_cli("enhance --input " + in + " --output " + out_str +
                " --weights " + ws_path + " --mode streaming --chunk 1") == 0);

  Waveform a = to_waveform(read_wav(out_off));
  Waveform b = to_waveform(read_wav(out_str));
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(testing::max_abs_diff(a.samples, b.samples) < 1e-5);
}

TEST_CASE("cli: metrics of a signal against itself hit the caps") {
  const std::string ref = tmp("metrics_ref.wav");
  write_wav(ref, testing::speech_like(0.3, 908));
  std::string out;
  CHECK(run_cli("metrics --ref " + ref + " --est " + ref + " --json", &out) ==
        0);
  auto j = nlohmann::json::parse(out);
  CHECK(j.at("ssnr_db").get<double>() == doctest::Approx(35.0));
  CHECK(j.at("sdr_db").get<double>() == doctest::Approx(100.0));
}

TEST_CASE("cli: mix then re-measure recovers the requested SNR") {
  const std::string clean = tmp("mix_clean.wav");
  const std::string noise = tmp("mix_noise.wav");
  Waveform c = testing::speech_like(0.3, 909);
  Waveform n = testing::random_waveform(c.samples.size(), 910);
  for (double& s : c.samples) s = double(float(s));
  for (double& s : n.samples) s = double(float(s));
  write_wav(clean, c);
  write_wav(noise, n);
  const std::string mixed = tmp("mix_out.wav");
  CHECK(run_cli("mix --clean " + clean + " --noise " + noise +
                " --snr 0 --output " + mixed) == 0);

  // Recover the components: mix - clean*peak_gain = scaled noise. peak_gain
  // is 1 here (inputs are well below clipping).
  Waveform m = to_waveform(read_wav(mixed));
  double ec = 0.0, en = 0.0;
  for (size_t i = 0; i < c.samples.size(); ++i) {
    const double noise_part = m.samples[i] - c.samples[i];
    ec += c.samples[i] * c.samples[i];
    en += noise_part * noise_part;
  }
  CHECK(10.0 * std::log10(ec / en) == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("cli: describe prints the reference comparison") {
  std::string out;
  CHECK(run_cli("describe", &out) == 0);
  CHECK(out.find("6.98") != std::string::npos);
  CHECK(out.find("5.62") != std::string::npos);
  CHECK(out.find("deviation") != std::string::npos);

  std::string js;
  CHECK(run_cli("describe --json", &js) == 0);
  auto j = nlohmann::json::parse(js);
  const auto report = complexity_report(ArchConfig{});
  CHECK(j.at("params_total").get<long long>() == report.params_total);
  CHECK(j.at("macs_per_sec").get<double>() ==
        doctest::Approx(report.macs_per_second));

  // describe against a weight file reads the manifest configuration
  const std::string ws_path = tmp("tiny.sfnw");  // written earlier
  std::string from_ws;
  if (run_cli("describe --weights " + ws_path + " --json", &from_ws) == 0) {
    auto jw = nlohmann::json::parse(from_ws);
    const auto tiny_report = complexity_report(tiny_config().arch);
    CHECK(jw.at("params_total").get<long long>() == tiny_report.params_total);
  }
}

TEST_CASE("cli: init is reproducible across runs") {
  const std::string cfg_path = tmp("tiny_cfg2.json");
  {
    nlohmann::json j = tiny_config();
    std::ofstream os(cfg_path);
    os << j.dump();
  }
  const std::string w1 = tmp("repro1.sfnw");
  const std::string w2 = tmp("repro2.sfnw");
  CHECK(run_cli("init --config " + cfg_path + " --seed 77 --output " + w1) ==
        0);
  CHECK(run_cli("init --config " + cfg_path + " --seed 77 --output " + w2) ==
        0);
  std::ifstream a(w1, std::ios::binary), b(w2, std::ios::binary);
  std::string ba((std::istreambuf_iterator<char>(a)), {});
  std::string bb((std::istreambuf_iterator<char>(b)), {});
  CHECK(ba == bb);
}
