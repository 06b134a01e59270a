// features.hpp
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

// Frame-level spectral features on the shared 45 ms / 5 ms grid:
//
//  - 80-band log mel spectrogram, HTK mel scale, triangles spanning
//    0..12 kHz with unit peaks, natural log with a 1e-10 floor;
//  - cepstrally smoothed log spectral envelopes (lifter cut at 0.8 of the
//    local pitch period), which the voice transform uses for formant
//    correction;
//  - linear frequency-axis warping of an envelope.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include <json.hpp>

#include "voxaug/audio.hpp"
#include "voxaug/error.hpp"
#include "voxaug/fft.hpp"
#include "voxaug/frames.hpp"

namespace voxaug {

constexpr int kMelBands = 80;
constexpr double kMelFloor = 1e-10;

struct MelSpectrogram {
  std::vector<double> values;  // row-major, frames x n_mels
  std::size_t frames = 0;
  int n_mels = kMelBands;
  double win_ms = kWindowMs;
  double hop_ms = kHopMs;
  int sample_rate = kAnalysisRate;

  double at(std::size_t frame, int band) const {
    return values[frame * static_cast<std::size_t>(n_mels) +
                  static_cast<std::size_t>(band)];
  }
};

namespace detail {

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Sparse triangular filterbank over power-spectrum bins.
struct MelBank {
  MelBank(int n_bands, std::size_t fft_size, int sample_rate, double f_hi) {
    const double m_hi = hz_to_mel(f_hi);
    std::vector<double> edges(static_cast<std::size_t>(n_bands) + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
      edges[i] = mel_to_hz(m_hi * static_cast<double>(i) / (n_bands + 1));

    const std::size_t n_bins = fft_size / 2 + 1;
    const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
    start.resize(static_cast<std::size_t>(n_bands));
    weights.resize(static_cast<std::size_t>(n_bands));
    for (int b = 0; b < n_bands; ++b) {
      const double lo = edges[static_cast<std::size_t>(b)];
      const double mid = edges[static_cast<std::size_t>(b) + 1];
      const double hi = edges[static_cast<std::size_t>(b) + 2];
      std::size_t k0 = n_bins, k1 = 0;
      std::vector<double> w;
      for (std::size_t k = 0; k < n_bins; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        double v = 0.0;
        if (f > lo && f < mid)
          v = (f - lo) / (mid - lo);
        else if (f >= mid && f < hi)
          v = (hi - f) / (hi - mid);
        if (v > 0.0) {
          if (k0 == n_bins) k0 = k;
          k1 = k;
          w.push_back(v);
        }
      }
      if (k0 == n_bins) k0 = 0;  // degenerate band (never at this geometry)
      start[static_cast<std::size_t>(b)] = k0;
      weights[static_cast<std::size_t>(b)] = std::move(w);
      (void)k1;
    }
  }

  std::vector<std::size_t> start;
  std::vector<std::vector<double>> weights;
};

// Replaces a half-spectrum of log magnitudes with its cepstrally smoothed
// envelope: inverse transform, keep quefrencies [0, cutoff] (and the
// mirror), forward transform back.
inline void cepstral_smooth(std::vector<double>& log_mag, const RealFft& plan,
                            int cutoff) {
  const std::size_t n = plan.size();
  if (log_mag.size() != n / 2 + 1)
    throw InvalidParams("log spectrum size does not match plan");
  std::vector<std::complex<double>> spec(n / 2 + 1);
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] = {log_mag[k], 0.0};
  std::vector<double> cep(n);
  plan.inverse(spec, cep);
  const std::size_t qc = static_cast<std::size_t>(
      std::clamp<int>(cutoff, 1, static_cast<int>(n / 2) - 1));
  std::fill(cep.begin() + static_cast<std::ptrdiff_t>(qc + 1),
            cep.end() - static_cast<std::ptrdiff_t>(qc), 0.0);
  plan.forward(cep, spec);
  for (std::size_t k = 0; k < spec.size(); ++k) log_mag[k] = spec[k].real();
}

// Envelope that rides harmonic tops instead of averaging peaks and
// valleys: repeatedly smooth max(log spectrum, previous envelope).
// Plain smoothing of a comb dips between harmonics; the iteration
// pulls those dips back up to the interpolated peak level.
inline void true_envelope(std::vector<double>& log_mag, const RealFft& plan,
                          int cutoff, int iterations = 3) {
  const std::vector<double> raw = log_mag;
  cepstral_smooth(log_mag, plan, cutoff);
  for (int it = 1; it < iterations; ++it) {
    for (std::size_t k = 0; k < log_mag.size(); ++k)
      log_mag[k] = std::max(log_mag[k], raw[k]);
    cepstral_smooth(log_mag, plan, cutoff);
  }
}

inline std::vector<double> hann_periodic(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t t = 0; t < n; ++t)
    w[t] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(t) /
                                static_cast<double>(n));
  return w;
}

}  // namespace detail

inline MelSpectrogram mel_spectrogram(const AudioBuffer& audio) {
  if (audio.sample_rate != kAnalysisRate)
    throw SampleRateMismatch("mel analysis requires 24 kHz input, got " +
                             std::to_string(audio.sample_rate));
  const std::size_t n_frames = frame_count(audio.samples.size(), audio.sample_rate);
  const std::size_t win = static_cast<std::size_t>(window_samples(audio.sample_rate));
  const std::size_t hop = static_cast<std::size_t>(hop_samples(audio.sample_rate));
  const std::size_t n_fft = next_pow2(win);

  const RealFft fft(n_fft);
  const auto window = detail::hann_periodic(win);
  const detail::MelBank bank(kMelBands, n_fft, audio.sample_rate,
                             audio.sample_rate / 2.0);

  MelSpectrogram out;
  out.frames = n_frames;
  out.values.resize(n_frames * kMelBands);

  std::vector<double> buf(n_fft, 0.0);
  std::vector<std::complex<double>> X(n_fft / 2 + 1);
  std::vector<double> power(n_fft / 2 + 1);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const double* src = audio.samples.data() + i * hop;
    for (std::size_t t = 0; t < win; ++t) buf[t] = src[t] * window[t];
    fft.forward(buf, X);
    for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(X[k]);
    double* row = out.values.data() + i * kMelBands;
    for (int b = 0; b < kMelBands; ++b) {
      const auto& w = bank.weights[static_cast<std::size_t>(b)];
      const std::size_t k0 = bank.start[static_cast<std::size_t>(b)];
      double acc = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * power[k0 + j];
      row[b] = std::log(std::max(acc, kMelFloor));
    }
  }
  return out;
}

// Log-magnitude spectral envelope over fft_size/2 + 1 bins.
struct SpectralEnvelope {
  std::vector<double> log_magnitude;
  std::size_t fft_size = 0;
  int sample_rate = 0;

  double bin_hz() const {
    return static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  }
};

// Spectral envelope of one frame, estimated by the peak-riding
// iteration in detail::true_envelope.  The frame must hold at least two
// periods of f0.  The lifter keeps quefrencies up to half the period:
// that is the smallest basis that can thread every harmonic top, and a
// larger one starts tracking the comb itself, which makes the iteration
// ratchet instead of converge.  Magnitudes are floored 40 dB below the
// frame's spectral peak (keeps the estimate equivariant under input
// scaling, and a deeper floor feeds cliff ringing into the iteration).
// Ten passes bring the shape within a few percent independent of the
// window length; the absolute level retains a small estimator-specific
// lift, so envelopes should only be compared against envelopes measured
// the same way.  fft_size == 0 picks next_pow2(2 * frame length).
inline SpectralEnvelope cepstral_envelope(std::span<const double> frame,
                                          double f0_hz, int sample_rate,
                                          std::size_t fft_size = 0,
                                          int iterations = 10) {
  if (!(f0_hz > 0.0)) throw InvalidParams("envelope needs a positive f0");
  if (sample_rate <= 0) throw InvalidParams("envelope needs a positive rate");
  const double period = static_cast<double>(sample_rate) / f0_hz;
  if (static_cast<double>(frame.size()) < 2.0 * period)
    throw FrameTooShort("envelope frame shorter than two pitch periods");
  if (fft_size == 0) fft_size = next_pow2(2 * frame.size());
  if (fft_size < frame.size())
    throw InvalidParams("fft size smaller than the frame");

  const RealFft fft(fft_size);
  const auto window = detail::hann_periodic(frame.size());
  std::vector<double> buf(fft_size, 0.0);
  for (std::size_t t = 0; t < frame.size(); ++t) buf[t] = frame[t] * window[t];
  std::vector<std::complex<double>> X(fft_size / 2 + 1);
  fft.forward(buf, X);

  SpectralEnvelope env;
  env.fft_size = fft_size;
  env.sample_rate = sample_rate;
  env.log_magnitude.resize(X.size());
  double peak = 0.0;
  for (const auto& v : X) peak = std::max(peak, std::abs(v));
  const double floor = std::max(peak * 1e-2, 1e-12);
  for (std::size_t k = 0; k < X.size(); ++k)
    env.log_magnitude[k] = std::log(std::max(std::abs(X[k]), floor));
  detail::true_envelope(env.log_magnitude, fft,
                        static_cast<int>(std::lround(0.5 * period)),
                        iterations);
  return env;
}

// Stretches (factor > 1) or compresses (factor < 1) the frequency axis:
// output bin b reads the input at b / factor with linear interpolation,
// holding the last bin beyond the edge.  A peak at f moves to factor * f.
inline SpectralEnvelope warp_envelope_axis(const SpectralEnvelope& in,
                                           double factor) {
  if (!(factor > 0.0)) throw InvalidParams("warp factor must be positive");
  SpectralEnvelope out = in;
  const std::size_t n = in.log_magnitude.size();
  for (std::size_t b = 0; b < n; ++b) {
    const double src = static_cast<double>(b) / factor;
    const std::size_t i0 = std::min(static_cast<std::size_t>(src), n - 1);
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double frac = src - static_cast<double>(i0);
    out.log_magnitude[b] =
        in.log_magnitude[i0] +
        (i1 > i0 ? frac * (in.log_magnitude[i1] - in.log_magnitude[i0]) : 0.0);
  }
  return out;
}

// Raw little-endian float32, row-major frames x n_mels, plus a JSON
// sidecar at <path>.json describing the geometry.
inline void write_mel(const MelSpectrogram& mel, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open " + path.string() + " for writing");
  std::string bytes;
  bytes.reserve(mel.values.size() * 4);
  for (double v : mel.values) {
    const float x = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &x, 4);
    bytes.push_back(static_cast<char>(u & 0xFF));
    bytes.push_back(static_cast<char>((u >> 8) & 0xFF));
    bytes.push_back(static_cast<char>((u >> 16) & 0xFF));
    bytes.push_back(static_cast<char>((u >> 24) & 0xFF));
  }
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoFailure("write failed on " + path.string());

  nlohmann::json meta{{"frames", mel.frames},
                      {"n_mels", mel.n_mels},
                      {"win_ms", mel.win_ms},
                      {"hop_ms", mel.hop_ms},
                      {"sample_rate", mel.sample_rate},
                      {"mel_scale", "htk"}};
  std::ofstream j(path.string() + ".json", std::ios::trunc);
  if (!j) throw IoFailure("cannot open sidecar for " + path.string());
  j << meta.dump(2) << "\n";
  if (!j) throw IoFailure("sidecar write failed for " + path.string());
}

}  // namespace voxaug
