// augment.hpp
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

// The seven augmentation schemes: noise mixing at a drawn SNR, plain
// pitch shifting, formant-aware pitch transformation, and additive
// control-track noise, plus their compositions.  Every random quantity
// flows from one rng stream derived as hash(seed, input id, copy index),
// so any (file, copy) output is reproducible in isolation and results
// do not depend on processing order.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "voxaug/audio.hpp"
#include "voxaug/error.hpp"
#include "voxaug/noise_bank.hpp"
#include "voxaug/pitch.hpp"
#include "voxaug/rng.hpp"
#include "voxaug/stretch.hpp"
#include "voxaug/votrans.hpp"

namespace voxaug {

// ---------------------------------------------------------------------------
// Parameters

struct NoiseParams {
  double snr_low_db = 4.0;
  double snr_high_db = 12.0;
  int segments_per_clean = 5;
};

struct F0NoiseParams {
  double f0_variance = 0.25;    // semitones^2
  double conf_variance = 0.215;
  double smooth_window_low_ms = 100.0;
  double smooth_window_high_ms = 300.0;
  double noise_smooth_divisor = 2.0;
};

struct PitchShiftParams {
  double sox_variance = 3.0;  // semitones^2
  double sox_cap = 8.0;       // |shift| limit, semitones
  double votrans_low = -12.0;
  double votrans_high = 12.0;
};

enum class Scheme {
  kNoisy,
  kSox,
  kVoTrans,
  kNoisyF0,
  kNoisyF0Sm,
  kNoisyF0Vt,
  kNoisyF0VtSox,
};

inline std::string_view scheme_label(Scheme s) {
  switch (s) {
    case Scheme::kNoisy: return "noisy";
    case Scheme::kSox: return "sox";
    case Scheme::kVoTrans: return "votrans";
    case Scheme::kNoisyF0: return "noisyf0";
    case Scheme::kNoisyF0Sm: return "noisyf0-sm";
    case Scheme::kNoisyF0Vt: return "noisyf0-vt";
    case Scheme::kNoisyF0VtSox: return "noisyf0-vt-sox";
  }
  throw InvalidParams("unknown scheme");
}

inline Scheme parse_scheme(std::string_view name) {
  if (name == "noisy") return Scheme::kNoisy;
  if (name == "sox") return Scheme::kSox;
  if (name == "votrans") return Scheme::kVoTrans;
  if (name == "noisyf0") return Scheme::kNoisyF0;
  if (name == "noisyf0-sm") return Scheme::kNoisyF0Sm;
  if (name == "noisyf0-vt") return Scheme::kNoisyF0Vt;
  if (name == "noisyf0-vt-sox") return Scheme::kNoisyF0VtSox;
  throw InvalidParams("unknown scheme name: " + std::string(name));
}

// True when the scheme only perturbs the control tracks (contour and
// confidence) and passes audio through untouched.
inline bool controls_only(Scheme s) {
  return s == Scheme::kNoisyF0 || s == Scheme::kNoisyF0Sm;
}

inline int default_copies(Scheme s) {
  switch (s) {
    case Scheme::kSox:
    case Scheme::kVoTrans: return 10;
    case Scheme::kNoisy: return 5;
    default: return 1;
  }
}

struct AugmentationSpec {
  Scheme scheme = Scheme::kNoisyF0;
  NoiseParams noise;
  F0NoiseParams f0_noise;
  PitchShiftParams shift;
  std::uint64_t seed = 0;
  int copies_per_input = 0;  // 0 means the scheme default

  int copies() const {
    if (copies_per_input < 0) throw InvalidParams("copies must be positive");
    return copies_per_input > 0 ? copies_per_input : default_copies(scheme);
  }
};

// ---------------------------------------------------------------------------
// Samplers.  Each consumes a documented number of draws from the stream
// so interleavings stay reproducible.

// Uniform SNR in [snr_low, snr_high] dB.  One uniform.
inline double sample_snr(Rng& rng, const NoiseParams& p = {}) {
  if (!(p.snr_low_db <= p.snr_high_db))
    throw InvalidParams("snr range inverted");
  return rng.uniform(p.snr_low_db, p.snr_high_db);
}

// Normal shift with sigma = sqrt(sox_variance), magnitude-clamped to
// sox_cap.  One normal (two uniforms).  `raw` receives the pre-clamp
// value when provided.
inline double sample_sox_shift(Rng& rng, const PitchShiftParams& p = {},
                               double* raw = nullptr) {
  if (!(p.sox_cap > 0.0)) throw InvalidParams("sox cap must be positive");
  const double x = rng.normal(0.0, std::sqrt(p.sox_variance));
  if (raw) *raw = x;
  return std::clamp(x, -p.sox_cap, p.sox_cap);
}

struct VoTransDraw {
  double semitones = 0.0;
  double kappa = 0.0;
};

// Shift uniform in [votrans_low, votrans_high] semitones, then timbre
// coupling uniform in [0, 1].  Two uniforms, in that order.
inline VoTransDraw sample_votrans_params(Rng& rng,
                                         const PitchShiftParams& p = {}) {
  if (!(p.votrans_low <= p.votrans_high))
    throw InvalidParams("votrans range inverted");
  VoTransDraw d;
  d.semitones = rng.uniform(p.votrans_low, p.votrans_high);
  d.kappa = rng.uniform(0.0, 1.0);
  return d;
}

// Uniform smoothing window in [low, high] ms.  One uniform.
inline double sample_smoothing_window(Rng& rng, const F0NoiseParams& p = {}) {
  if (!(p.smooth_window_low_ms <= p.smooth_window_high_ms))
    throw InvalidParams("smoothing window range inverted");
  return rng.uniform(p.smooth_window_low_ms, p.smooth_window_high_ms);
}

// ---------------------------------------------------------------------------
// Noise mixing

struct MixResult {
  AudioBuffer audio;
  double noise_gain = 1.0;          // applied to the noise segment
  double normalization_gain = 1.0;  // applied to the whole mixture
};

// out = clean + g * noise with g chosen so the mixture's source-to-noise
// ratio is exactly `snr_db` before normalization:
//   g = rms(clean) / (rms(noise) * 10^(snr/20)).
// If the sum clips, the whole mixture is scaled back to peak 1 and the
// scale recorded; the pre-normalization SNR is exact by construction.
inline MixResult mix_at_snr(const AudioBuffer& clean, const AudioBuffer& noise,
                            double snr_db) {
  if (clean.sample_rate != noise.sample_rate)
    throw SampleRateMismatch("mix_at_snr: clean at " +
                             std::to_string(clean.sample_rate) + " Hz, noise at " +
                             std::to_string(noise.sample_rate) + " Hz");
  if (noise.samples.size() < clean.samples.size())
    throw InvalidParams("mix_at_snr: noise shorter than clean signal");

  const double clean_rms = measure_rms(clean);
  AudioBuffer segment;
  segment.sample_rate = noise.sample_rate;
  segment.samples.assign(noise.samples.begin(),
                         noise.samples.begin() +
                             static_cast<std::ptrdiff_t>(clean.samples.size()));
  const double noise_rms = measure_rms(segment);
  if (clean_rms <= 0.0) throw SilentInput("mix_at_snr: clean signal is silent");
  if (noise_rms <= 0.0) throw SilentInput("mix_at_snr: noise segment is silent");

  MixResult out;
  out.noise_gain = clean_rms / (noise_rms * std::pow(10.0, snr_db / 20.0));
  out.audio.sample_rate = clean.sample_rate;
  out.audio.samples.resize(clean.samples.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    out.audio.samples[i] =
        clean.samples[i] + out.noise_gain * segment.samples[i];
    peak = std::max(peak, std::fabs(out.audio.samples[i]));
  }
  if (peak > 1.0) {
    out.normalization_gain = 1.0 / peak;
    for (double& v : out.audio.samples) v *= out.normalization_gain;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Control-track perturbation

// Per frame, in frame order: draw x ~ N(0, f0_variance) then
// y ~ N(0, conf_variance).  f0' = clamp(f0 * 2^(x/12), 50, 600) Hz;
// conf' = clamp(conf + y, 0, 1).  The f0 noise lives in the semitone
// (log) domain so a draw moves every register by the same interval.
inline F0Contour perturb_f0(const F0Contour& in, const F0NoiseParams& p,
                            Rng& rng) {
  const double f0_sigma = std::sqrt(p.f0_variance);
  const double conf_sigma = std::sqrt(p.conf_variance);
  F0Contour out = in;
  for (std::size_t i = 0; i < in.frames(); ++i) {
    const double x = rng.normal(0.0, f0_sigma);
    const double y = rng.normal(0.0, conf_sigma);
    out.f0_hz[i] = std::clamp(in.f0_hz[i] * std::pow(2.0, x / 12.0),
                              kF0MinHz, kF0MaxHz);
    out.confidence[i] = std::clamp(in.confidence[i] + y, 0.0, 1.0);
  }
  return out;
}

// Smoothed variant: draw S ~ U(low, high) ms, smooth the contour with a
// centered window of S, then add semitone noise that was itself smoothed
// with a window of S / noise_smooth_divisor.  Draw order: S first, then
// per frame x, y as in perturb_f0.  Confidence is perturbed unsmoothed.
inline F0Contour perturb_f0_smoothed(const F0Contour& in,
                                     const F0NoiseParams& p, Rng& rng,
                                     double* window_ms_out = nullptr) {
  const double window_ms = sample_smoothing_window(rng, p);
  if (window_ms_out) *window_ms_out = window_ms;
  if (!(p.noise_smooth_divisor > 0.0))
    throw InvalidParams("noise smooth divisor must be positive");

  F0Contour base = smooth_contour(in, window_ms);
  const double f0_sigma = std::sqrt(p.f0_variance);
  const double conf_sigma = std::sqrt(p.conf_variance);
  std::vector<double> noise_st(in.frames());
  F0Contour out = base;
  for (std::size_t i = 0; i < in.frames(); ++i) {
    noise_st[i] = rng.normal(0.0, f0_sigma);
    const double y = rng.normal(0.0, conf_sigma);
    out.confidence[i] = std::clamp(in.confidence[i] + y, 0.0, 1.0);
  }

  // Reuse the contour smoother for the noise track by round-tripping
  // through Hz: exp2(st/12) is strictly positive, so the precondition
  // holds and both tracks share one smoothing definition.
  F0Contour noise_track;
  noise_track.hop_ms = in.hop_ms;
  noise_track.f0_hz.resize(noise_st.size());
  noise_track.confidence.assign(noise_st.size(), 0.0);
  for (std::size_t i = 0; i < noise_st.size(); ++i)
    noise_track.f0_hz[i] = std::pow(2.0, noise_st[i] / 12.0);
  noise_track = smooth_contour(noise_track, window_ms / p.noise_smooth_divisor);

  for (std::size_t i = 0; i < in.frames(); ++i) {
    const double st = 12.0 * std::log2(noise_track.f0_hz[i]);
    out.f0_hz[i] =
        std::clamp(base.f0_hz[i] * std::pow(2.0, st / 12.0), kF0MinHz, kF0MaxHz);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Streaming control perturbation

// Frame-by-frame equivalent of the control-track schemes for use inside
// a training loop.  The plain variant reproduces perturb_f0 exactly for
// the same seed; the smoothed variant must run with zero lookahead, so
// it uses trailing (causal) windows and its output lags the centered
// offline version by about half the smoothing window.
class F0PerturbStream {
 public:
  F0PerturbStream() = default;

  // `smoothed` selects the causal smoothed variant.  The stream draws
  // its window immediately (matching the offline draw order) when
  // smoothed; hop_ms fixes the frame grid for window sizing.
  F0PerturbStream(bool smoothed, const F0NoiseParams& params,
                  std::uint64_t stream_seed, double hop_ms = kHopMs)
      : params_(params), rng_(stream_seed), smoothed_(smoothed), live_(true) {
    if (smoothed_) {
      window_ms_ = sample_smoothing_window(rng_, params_);
      base_win_ = window_frames(window_ms_, hop_ms);
      noise_win_ = window_frames(window_ms_ / params_.noise_smooth_divisor,
                                 hop_ms);
    }
  }

  double window_ms() const { return window_ms_; }

  // Consumes one frame and returns its perturbed (f0, confidence).
  std::pair<double, double> push(double f0_hz, double confidence) {
    if (!live_) throw UninitializedState("push on a default stream state");
    const double x = rng_.normal(0.0, std::sqrt(params_.f0_variance));
    const double y = rng_.normal(0.0, std::sqrt(params_.conf_variance));
    const double conf = std::clamp(confidence + y, 0.0, 1.0);
    if (!smoothed_) {
      const double f0 = std::clamp(f0_hz * std::pow(2.0, x / 12.0),
                                   kF0MinHz, kF0MaxHz);
      return {f0, conf};
    }
    if (!(f0_hz > 0.0))
      throw InvalidParams("smoothing requires strictly positive f0");
    const double base_st = trailing_mean(base_, 12.0 * std::log2(f0_hz),
                                         base_win_);
    const double noise_st = trailing_mean(noise_, x, noise_win_);
    const double f0 = std::clamp(std::pow(2.0, (base_st + noise_st) / 12.0),
                                 kF0MinHz, kF0MaxHz);
    return {f0, conf};
  }

 private:
  struct Window {
    std::deque<double> buf;
    double sum = 0.0;
  };

  static int window_frames(double ms, double hop_ms) {
    int w = static_cast<int>(std::lround(ms / hop_ms));
    if (w < 1) w = 1;
    if (w % 2 == 0) ++w;
    return w;
  }

  double trailing_mean(Window& w, double v, int len) {
    w.buf.push_back(v);
    w.sum += v;
    if (w.buf.size() > static_cast<std::size_t>(len)) {
      w.sum -= w.buf.front();
      w.buf.pop_front();
    }
    return w.sum / static_cast<double>(w.buf.size());
  }

  F0NoiseParams params_;
  Rng rng_{0};
  bool smoothed_ = false;
  bool live_ = false;
  double window_ms_ = 0.0;
  int base_win_ = 1;
  int noise_win_ = 1;
  Window base_;
  Window noise_;
};

// ---------------------------------------------------------------------------
// Scheme dispatch

// Record of one (input, copy) application: the scheme, the stream
// identity, and every scalar drawn.  Per-frame noise draws are not
// listed value-by-value; they are regenerated exactly by replaying the
// recorded stream, which the `stream` field pins.
struct Provenance {
  std::string scheme;
  std::uint64_t seed = 0;
  std::string input_id;
  std::uint64_t copy_index = 0;
  std::uint64_t stream = 0;  // hash(seed, input_id, copy_index)
  nlohmann::json draws = nlohmann::json::object();
  double normalization_gain = 1.0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"scheme", scheme},
                          {"seed", seed},
                          {"input_id", input_id},
                          {"copy_index", copy_index},
                          {"stream", stream},
                          {"draws", draws},
                          {"normalization_gain", normalization_gain}};
  }
};

struct SchemeResult {
  AudioBuffer audio;
  F0Contour contour;
  Provenance provenance;
};

// Applies one scheme to one (input, copy) pair.  The rng stream is
// derived from (spec.seed, input_id, copy_index) alone, so results are
// independent of processing order and parallel schedule.  Draw order
// per scheme, frozen:
//   noisy:          snr, noise file, noise offset
//   sox:            shift
//   votrans:        shift, kappa
//   noisyf0:        per frame x, y
//   noisyf0-sm:     window, per frame x, y
//   noisyf0-vt:     shift, kappa, then per frame x, y on the recomputed
//                   contour
//   noisyf0-vt-sox: votrans shift, kappa, sox shift, then per frame x, y
// Audio-transforming schemes re-estimate the contour from the output
// audio; controls-only schemes return the input audio bit-identically.
inline SchemeResult apply_scheme(const AudioBuffer& audio,
                                 const F0Contour& contour,
                                 const NoiseBank* noise_bank,
                                 const AugmentationSpec& spec,
                                 std::string_view input_id,
                                 std::uint64_t copy_index) {
  SchemeResult out;
  out.provenance.scheme = std::string(scheme_label(spec.scheme));
  out.provenance.seed = spec.seed;
  out.provenance.input_id = std::string(input_id);
  out.provenance.copy_index = copy_index;
  out.provenance.stream = hash64_stream(spec.seed, input_id, copy_index);
  Rng rng(out.provenance.stream);
  auto& draws = out.provenance.draws;

  switch (spec.scheme) {
    case Scheme::kNoisy: {
      if (noise_bank == nullptr)
        throw MissingNoiseBank("scheme 'noisy' requires a noise bank");
      const double snr = sample_snr(rng, spec.noise);
      NoiseSegment seg =
          pick_noise_segment(*noise_bank, audio.duration_seconds(), rng);
      MixResult mix = mix_at_snr(audio, seg.audio, snr);
      draws["snr_db"] = snr;
      draws["noise_file"] = seg.file_index;
      draws["noise_offset_s"] = seg.offset_s;
      out.provenance.normalization_gain = mix.normalization_gain;
      out.audio = std::move(mix.audio);
      out.contour = contour;
      break;
    }
    case Scheme::kSox: {
      double raw = 0.0;
      const double p = sample_sox_shift(rng, spec.shift, &raw);
      draws["sox_raw"] = raw;
      draws["sox_semitones"] = p;
      out.audio = pitch_shift_plain(audio, p);
      out.contour = estimate_f0(out.audio);
      break;
    }
    case Scheme::kVoTrans: {
      const VoTransDraw d = sample_votrans_params(rng, spec.shift);
      draws["votrans_semitones"] = d.semitones;
      draws["votrans_kappa"] = d.kappa;
      VoTransResult r = votrans_transform(audio, contour, {d.semitones, d.kappa});
      out.provenance.normalization_gain = r.normalization_gain;
      out.audio = std::move(r.audio);
      out.contour = estimate_f0(out.audio);
      break;
    }
    case Scheme::kNoisyF0: {
      out.audio = audio;
      out.contour = perturb_f0(contour, spec.f0_noise, rng);
      break;
    }
    case Scheme::kNoisyF0Sm: {
      double window_ms = 0.0;
      out.audio = audio;
      out.contour =
          perturb_f0_smoothed(contour, spec.f0_noise, rng, &window_ms);
      draws["smooth_window_ms"] = window_ms;
      break;
    }
    case Scheme::kNoisyF0Vt: {
      const VoTransDraw d = sample_votrans_params(rng, spec.shift);
      draws["votrans_semitones"] = d.semitones;
      draws["votrans_kappa"] = d.kappa;
      VoTransResult r = votrans_transform(audio, contour, {d.semitones, d.kappa});
      out.provenance.normalization_gain = r.normalization_gain;
      out.audio = std::move(r.audio);
      out.contour = perturb_f0(estimate_f0(out.audio), spec.f0_noise, rng);
      break;
    }
    case Scheme::kNoisyF0VtSox: {
      const VoTransDraw d = sample_votrans_params(rng, spec.shift);
      draws["votrans_semitones"] = d.semitones;
      draws["votrans_kappa"] = d.kappa;
      double raw = 0.0;
      const double p = sample_sox_shift(rng, spec.shift, &raw);
      draws["sox_raw"] = raw;
      draws["sox_semitones"] = p;
      VoTransResult r = votrans_transform(audio, contour, {d.semitones, d.kappa});
      out.provenance.normalization_gain = r.normalization_gain;
      out.audio = pitch_shift_plain(r.audio, p);
      out.contour = perturb_f0(estimate_f0(out.audio), spec.f0_noise, rng);
      break;
    }
  }
  return out;
}

}  // namespace voxaug
