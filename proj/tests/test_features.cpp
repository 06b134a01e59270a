// test_features.cpp
//
// Copyright 2026  Voxaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "support/signals.hpp"
#include "support/tmpdir.hpp"
#include "voxaug/features.hpp"
#include "voxaug/rng.hpp"
#include "voxaug/wav.hpp"

using voxaug::mel_spectrogram;
using voxaug::MelSpectrogram;
using voxaug::SpectralEnvelope;

namespace {

// Location (Hz) of the envelope's local maximum nearest to a guess.
double nearest_peak_hz(const SpectralEnvelope& env, double guess_hz) {
  const double bin = env.bin_hz();
  double best = -1.0, best_dist = 1e18;
  for (std::size_t k = 1; k + 1 < env.log_magnitude.size(); ++k) {
    if (env.log_magnitude[k] >= env.log_magnitude[k - 1] &&
        env.log_magnitude[k] >= env.log_magnitude[k + 1]) {
      const double y0 = env.log_magnitude[k - 1];
      const double y1 = env.log_magnitude[k];
      const double y2 = env.log_magnitude[k + 1];
      const double den = y0 - 2.0 * y1 + y2;
      const double delta =
          std::fabs(den) > 1e-30 ? std::clamp(0.5 * (y0 - y2) / den, -0.5, 0.5) : 0.0;
      const double hz = (static_cast<double>(k) + delta) * bin;
      const double dist = std::fabs(hz - guess_hz);
      if (dist < best_dist) {
        best_dist = dist;
        best = hz;
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("one second of audio yields 192 frames") {
  const auto a = testsig::tone(220.0, 1.0, 0.5);
  const auto m = mel_spectrogram(a);
  REQUIRE(m.frames == 192);
  REQUIRE(m.n_mels == 80);
  REQUIRE(m.values.size() == 192u * 80u);
}

TEST_CASE("mel frame count matches the closed form for random lengths") {
  voxaug::Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 1080 + rng.below(24000);
    voxaug::AudioBuffer a{std::vector<double>(n, 0.01), 24000};
    REQUIRE(mel_spectrogram(a).frames == (n - 1080) / 120 + 1);
  }
}

TEST_CASE("silence hits the log floor exactly") {
  const auto a = testsig::silence(0.2);
  const auto m = mel_spectrogram(a);
  const double floor_val = std::log(1e-10);
  for (double v : m.values) REQUIRE(v == floor_val);
}

TEST_CASE("a tone concentrates energy in a stable band") {
  const auto a = testsig::tone(1000.0, 0.5, 0.5);
  const auto m = mel_spectrogram(a);
  std::vector<int> argmax(m.frames);
  for (std::size_t i = 0; i < m.frames; ++i) {
    int best = 0;
    for (int b = 1; b < m.n_mels; ++b)
      if (m.at(i, b) > m.at(i, best)) best = b;
    argmax[i] = best;
  }
  for (std::size_t i = 1; i < m.frames; ++i)
    REQUIRE(std::abs(argmax[i] - argmax[0]) <= 1);
  // 1 kHz sits in the lower third of an 80-band 0..12 kHz mel axis.
  REQUIRE(argmax[0] > 10);
  REQUIRE(argmax[0] < 45);
}

TEST_CASE("scaling audio up never lowers any mel cell") {
  auto a = testsig::speech_like(1.0, 44);
  const auto m1 = mel_spectrogram(a);
  voxaug::apply_gain(a, 3.0);
  const auto m2 = mel_spectrogram(a);
  for (std::size_t i = 0; i < m1.values.size(); ++i)
    REQUIRE(m2.values[i] >= m1.values[i]);
}

TEST_CASE("mel analysis requires 24 kHz") {
  const auto a = testsig::tone(220.0, 0.5, 0.5, 16000);
  REQUIRE_THROWS_AS(mel_spectrogram(a), voxaug::SampleRateMismatch);
  const auto b = testsig::tone(220.0, 0.01, 0.5);
  REQUIRE_THROWS_AS(mel_spectrogram(b), voxaug::TooShort);
}

TEST_CASE("mel export writes float32 rows plus a faithful sidecar") {
  testsup::TempDir tmp("mel");
  const auto a = testsig::tone(500.0, 0.5, 0.5);
  const auto m = mel_spectrogram(a);
  const auto path = tmp.path() / "feats.bin";
  voxaug::write_mel(m, path);

  REQUIRE(std::filesystem::file_size(path) == m.values.size() * 4);
  std::ifstream f(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    std::uint32_t u = voxaug::detail::rd_u32(bytes.data() + 4 * i);
    float x;
    std::memcpy(&x, &u, 4);
    REQUIRE(x == static_cast<float>(m.values[i]));
  }

  std::ifstream j(path.string() + ".json");
  REQUIRE(j.good());
  const auto meta = nlohmann::json::parse(j);
  REQUIRE(meta["frames"] == m.frames);
  REQUIRE(meta["n_mels"] == 80);
  REQUIRE(meta["win_ms"] == 45.0);
  REQUIRE(meta["hop_ms"] == 5.0);
  REQUIRE(meta["sample_rate"] == 24000);
}

TEST_CASE("envelope of white noise is roughly flat") {
  // Averaged over frames, the smoothed log envelope of white noise should
  // not swing more than ~3 dB across the usable band.
  const auto a = testsig::white_noise(1.0, 0.5, 9);
  const std::size_t win = 1080;
  std::vector<double> mean;
  int frames = 0;
  for (std::size_t start = 0; start + win < a.samples.size(); start += 2 * win) {
    const auto env = voxaug::cepstral_envelope(
        std::span<const double>(a.samples.data() + start, win), 150.0, 24000);
    if (mean.empty()) mean.assign(env.log_magnitude.size(), 0.0);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += env.log_magnitude[k];
    ++frames;
  }
  for (double& v : mean) v /= frames;
  const double bin = 24000.0 / 2048.0;
  // Compare within 300 Hz..10 kHz to stay clear of window edge effects.
  double lo = 1e18, hi = -1e18;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double f = static_cast<double>(k) * bin;
    if (f < 300.0 || f > 10000.0) continue;
    lo = std::min(lo, mean[k]);
    hi = std::max(hi, mean[k]);
  }
  REQUIRE(hi - lo < 0.7);  // ~3 dB in natural log units is 0.345 per 1.5 dB
}

TEST_CASE("envelope peaks sit at the vowel formants") {
  const auto a = testsig::vowel(1.0);
  const std::size_t win = 2160;  // several periods of 150 Hz
  const auto env = voxaug::cepstral_envelope(
      std::span<const double>(a.samples.data() + 4800, win), 150.0, 24000);
  for (double formant : {700.0, 1220.0, 2600.0}) {
    const double peak = nearest_peak_hz(env, formant);
    REQUIRE(peak > 0.0);
    REQUIRE(std::fabs(peak - formant) < 0.04 * formant + 30.0);
  }
}

TEST_CASE("scaling the frame shifts the log envelope by a constant") {
  const auto a = testsig::vowel(0.5);
  const std::size_t win = 1080;
  std::vector<double> frame(a.samples.begin() + 2400,
                            a.samples.begin() + 2400 + win);
  const auto e1 = voxaug::cepstral_envelope(frame, 150.0, 24000);
  for (double& v : frame) v *= 2.0;
  const auto e2 = voxaug::cepstral_envelope(frame, 150.0, 24000);
  // Away from the spectrum's floor-clipped regions the difference is an
  // exact ln 2.
  const double bin = e1.bin_hz();
  for (std::size_t k = 0; k < e1.log_magnitude.size(); ++k) {
    const double f = static_cast<double>(k) * bin;
    if (f < 200.0 || f > 7000.0) continue;
    REQUIRE(e2.log_magnitude[k] - e1.log_magnitude[k] ==
            Catch::Approx(std::log(2.0)).margin(0.02));
  }
}

TEST_CASE("envelope rejects frames shorter than two periods") {
  std::vector<double> frame(400, 0.1);  // two periods of 150 Hz need 320 at 24k
  REQUIRE_NOTHROW(voxaug::cepstral_envelope(frame, 150.0, 24000));
  std::vector<double> tiny(300, 0.1);
  REQUIRE_THROWS_AS(voxaug::cepstral_envelope(tiny, 150.0, 24000),
                    voxaug::FrameTooShort);
  REQUIRE_THROWS_AS(voxaug::cepstral_envelope(frame, 0.0, 24000),
                    voxaug::InvalidParams);
}

TEST_CASE("axis warp: unit factor is the identity") {
  const auto a = testsig::vowel(0.5);
  const auto env = voxaug::cepstral_envelope(
      std::span<const double>(a.samples.data(), 1080), 150.0, 24000);
  const auto w = voxaug::warp_envelope_axis(env, 1.0);
  REQUIRE(w.log_magnitude == env.log_magnitude);
}

TEST_CASE("axis warp moves a bump by the factor") {
  SpectralEnvelope env;
  env.fft_size = 2048;
  env.sample_rate = 24000;
  env.log_magnitude.resize(1025);
  const double bin = env.bin_hz();
  for (std::size_t k = 0; k < env.log_magnitude.size(); ++k) {
    const double f = static_cast<double>(k) * bin;
    const double d = (f - 700.0) / 120.0;
    env.log_magnitude[k] = 2.0 * std::exp(-0.5 * d * d);
  }
  const auto w = voxaug::warp_envelope_axis(env, 1.2);
  const double peak = nearest_peak_hz(w, 840.0);
  REQUIRE(std::fabs(peak - 840.0) <= 2.0 * bin);
}

TEST_CASE("axis warp roundtrip is close to the identity") {
  const auto a = testsig::vowel(0.5);
  const auto env = voxaug::cepstral_envelope(
      std::span<const double>(a.samples.data(), 2160), 150.0, 24000);
  const auto rt =
      voxaug::warp_envelope_axis(voxaug::warp_envelope_axis(env, 2.0), 0.5);
  // The top octave is lost to edge-holding; compare the kept band.
  for (std::size_t k = 0; k < env.log_magnitude.size() / 2; ++k)
    REQUIRE(rt.log_magnitude[k] ==
            Catch::Approx(env.log_magnitude[k]).margin(0.05));
  REQUIRE_THROWS_AS(voxaug::warp_envelope_axis(env, 0.0), voxaug::InvalidParams);
}
