// votrans.hpp
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

// Pitch-synchronous voice transformation.
//
// Analysis marks one position per pitch period (snapped to waveform
// troughs on voiced stretches, fixed 10 ms spacing on unvoiced ones).
// Synthesis walks output time in steps of the local period divided by
// the pitch ratio and overlap-adds one grain per step from the nearest
// analysis mark, which preserves duration while moving voiced pitch by
// exactly the requested ratio.  Grain content is resampled to the
// output period first, so duplicated grains add coherently.
//
// The formant coupling knob kappa in [0, 1] decides how much of the
// resampling's envelope drag to keep: at kappa = 0 each voiced grain's
// spectral envelope is restored to the original (formants stay put), at
// kappa = 1 it is left at the full pitch ratio (formants move with the
// pitch).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <vector>

#include "voxaug/audio.hpp"
#include "voxaug/error.hpp"
#include "voxaug/features.hpp"
#include "voxaug/fft.hpp"
#include "voxaug/frames.hpp"
#include "voxaug/pitch.hpp"
#include "voxaug/resample.hpp"

namespace voxaug {

struct PitchMarks {
  std::vector<std::ptrdiff_t> positions;
  int sample_rate = 0;
};

struct VoTransParams {
  double pitch_semitones = 0.0;
  double formant_kappa = 0.0;  // 0 = keep formants, 1 = move with pitch
};

struct VoTransResult {
  AudioBuffer audio;
  double normalization_gain = 1.0;  // applied gain; 1 when nothing clipped
};

namespace detail {

struct MarkContext {
  const F0Contour& contour;
  int sample_rate;
  int win, hop;
  std::ptrdiff_t min_gap, max_gap, unvoiced_gap;

  MarkContext(const F0Contour& c, int rate)
      : contour(c),
        sample_rate(rate),
        win(window_samples(rate)),
        hop(hop_samples(rate)),
        min_gap(static_cast<std::ptrdiff_t>(std::ceil(rate / kF0MaxHz))),
        max_gap(static_cast<std::ptrdiff_t>(std::floor(rate / kF0MinHz))),
        unvoiced_gap(rate / 100) {}

  std::size_t frame_at(std::ptrdiff_t pos) const {
    const double center = static_cast<double>(pos) - 0.5 * win;
    std::ptrdiff_t f = static_cast<std::ptrdiff_t>(std::lround(center / hop));
    f = std::clamp<std::ptrdiff_t>(
        f, 0, static_cast<std::ptrdiff_t>(contour.frames()) - 1);
    return static_cast<std::size_t>(f);
  }

  bool voiced_at(std::ptrdiff_t pos) const {
    return contour.confidence[frame_at(pos)] >= 1.0 - kVoicedThreshold;
  }

  std::ptrdiff_t period_at(std::ptrdiff_t pos) const {
    const double f0 = contour.f0_hz[frame_at(pos)];
    const auto t = static_cast<std::ptrdiff_t>(std::lround(sample_rate / f0));
    return std::clamp(t, min_gap, max_gap);
  }
};

}  // namespace detail

// One mark per pitch period.  Voiced gaps stay within [rate/600, rate/50]
// samples and snap to the deepest trough within +-10% of the nominal
// period; unvoiced marks advance by a fixed 10 ms.
inline PitchMarks detect_pitch_marks(const AudioBuffer& audio,
                                     const F0Contour& contour) {
  if (audio.samples.empty()) throw EmptyAudio("pitch marks of empty audio");
  if (contour.frames() == 0 ||
      contour.frames() != frame_count(audio.samples.size(), audio.sample_rate))
    throw InvalidParams("contour does not match the audio frame grid");

  const detail::MarkContext ctx(contour, audio.sample_rate);
  const auto len = static_cast<std::ptrdiff_t>(audio.samples.size());
  const auto& x = audio.samples;

  auto deepest_trough = [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
    lo = std::clamp<std::ptrdiff_t>(lo, 0, len - 1);
    hi = std::clamp<std::ptrdiff_t>(hi, 0, len - 1);
    std::ptrdiff_t best = lo;
    for (std::ptrdiff_t i = lo + 1; i <= hi; ++i)
      if (x[static_cast<std::size_t>(i)] < x[static_cast<std::size_t>(best)])
        best = i;
    return best;
  };

  PitchMarks marks;
  marks.sample_rate = audio.sample_rate;

  std::ptrdiff_t m;
  if (ctx.voiced_at(0)) {
    m = deepest_trough(0, ctx.period_at(0) - 1);
  } else {
    m = 0;
  }
  marks.positions.push_back(m);

  while (true) {
    std::ptrdiff_t next;
    if (ctx.voiced_at(m)) {
      const std::ptrdiff_t t = ctx.period_at(m);
      const std::ptrdiff_t nominal = m + t;
      if (nominal >= len) break;
      const std::ptrdiff_t slack = t / 10;
      const std::ptrdiff_t lo = std::max(m + ctx.min_gap, nominal - slack);
      const std::ptrdiff_t hi =
          std::min({m + ctx.max_gap, nominal + slack, len - 1});
      next = deepest_trough(lo, hi);
    } else {
      next = m + ctx.unvoiced_gap;
      if (next >= len) break;
    }
    marks.positions.push_back(next);
    m = next;
  }
  return marks;
}

inline VoTransResult votrans_transform(const AudioBuffer& audio,
                                       const F0Contour& contour,
                                       const VoTransParams& params) {
  if (audio.samples.empty()) throw EmptyAudio("transform of empty audio");
  if (std::fabs(params.pitch_semitones) > 12.0)
    throw InvalidShift("pitch shift beyond +-12 semitones");
  if (params.formant_kappa < 0.0 || params.formant_kappa > 1.0)
    throw InvalidParams("formant coupling must lie in [0, 1]");

  const auto marks = detect_pitch_marks(audio, contour);
  const detail::MarkContext ctx(contour, audio.sample_rate);
  const auto& pos = marks.positions;
  const auto n_marks = pos.size();
  const auto len = static_cast<std::ptrdiff_t>(audio.samples.size());
  const auto& x = audio.samples;

  // Per-mark measured gap; the last mark inherits its neighbour's.
  std::vector<std::ptrdiff_t> gap(n_marks);
  for (std::size_t i = 0; i + 1 < n_marks; ++i) gap[i] = pos[i + 1] - pos[i];
  gap[n_marks - 1] = n_marks > 1 ? gap[n_marks - 2] : ctx.unvoiced_gap;

  const double ratio = hz_to_semitone_ratio(params.pitch_semitones);
  const double respace = 1.0 / ratio;  // output period multiplier
  // Grain content is resampled by the pitch ratio, which drags the
  // envelope along by the same factor.  The per-grain correction maps
  // it to the requested warp instead: kappa = 1 keeps the resampled
  // envelope (formants follow pitch, no correction), kappa = 0 undoes
  // it (formant preservation).
  const double inv_warp = std::pow(
      2.0, -params.formant_kappa * params.pitch_semitones / 12.0);
  const bool correct_env =
      std::fabs(params.pitch_semitones) > 1e-12 &&
      std::fabs(params.formant_kappa - 1.0) > 1e-12;

  std::vector<double> acc(audio.samples.size(), 0.0);
  std::vector<double> wsum(audio.samples.size(), 0.0);

  // Small plan cache: grain FFT sizes repeat heavily.
  std::map<std::size_t, std::unique_ptr<RealFft>> plans;
  auto plan_for = [&](std::size_t n) -> RealFft& {
    auto& slot = plans[n];
    if (!slot) slot = std::make_unique<RealFft>(n);
    return *slot;
  };
  std::vector<double> raw, rs, buf, win;

  // Target envelope cache: the envelope is a slow feature, so one
  // long-window measurement serves the grains of a ~20 ms neighborhood.
  SpectralEnvelope tgt_env;
  std::ptrdiff_t tgt_mark = std::numeric_limits<std::ptrdiff_t>::min();

  // One resampling kernel serves every grain: the ratio is fixed.
  const detail::SincKernel grain_kernel(respace < 1.0 ? respace : 1.0);

  // Asymmetric Hann: half-cosine rise over `left`, fall over `right`.
  // Adjacent grains built this way sum to one at the nominal spacing.
  auto build_window = [](std::vector<double>& w, std::ptrdiff_t left,
                         std::ptrdiff_t right) {
    w.resize(static_cast<std::size_t>(left + right));
    for (std::ptrdiff_t i = 0; i < left; ++i)
      w[static_cast<std::size_t>(i)] =
          0.5 - 0.5 * std::cos(M_PI * static_cast<double>(i) /
                               static_cast<double>(left));
    for (std::ptrdiff_t i = 0; i < right; ++i)
      w[static_cast<std::size_t>(left + i)] =
          0.5 + 0.5 * std::cos(M_PI * static_cast<double>(i) /
                               static_cast<double>(right));
  };

  auto nearest_mark = [&](double t) {
    const auto it = std::lower_bound(pos.begin(), pos.end(),
                                     static_cast<std::ptrdiff_t>(std::llround(t)));
    if (it == pos.begin()) return std::size_t{0};
    if (it == pos.end()) return n_marks - 1;
    const std::size_t hi = static_cast<std::size_t>(it - pos.begin());
    const double d_hi = std::fabs(static_cast<double>(pos[hi]) - t);
    const double d_lo = std::fabs(t - static_cast<double>(pos[hi - 1]));
    return d_lo <= d_hi ? hi - 1 : hi;
  };

  auto emit = [&](double t_center) {
    const std::size_t mi = nearest_mark(t_center);
    const std::ptrdiff_t m = pos[mi];
    const bool voiced = ctx.voiced_at(m);
    const std::ptrdiff_t g = gap[mi];
    const std::ptrdiff_t g_prev = mi > 0 ? gap[mi - 1] : g;
    const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(std::llround(t_center));

    // Raw span: one analysis period to either side of the mark.
    const std::size_t raw_len = static_cast<std::size_t>(g_prev + g);
    raw.assign(raw_len, 0.0);
    for (std::size_t i = 0; i < raw_len; ++i) {
      const std::ptrdiff_t src = m - g_prev + static_cast<std::ptrdiff_t>(i);
      if (src >= 0 && src < len) raw[i] = x[static_cast<std::size_t>(src)];
    }

    // Voiced grains are resampled to the output period so each placed
    // copy is a wavelet of the new pitch and duplicates add coherently.
    const bool shifted = voiced && respace != 1.0;
    const std::ptrdiff_t h_prev =
        shifted ? std::max<std::ptrdiff_t>(
                      1, std::llround(static_cast<double>(g_prev) * respace))
                : g_prev;
    const std::ptrdiff_t h_next =
        shifted ? std::max<std::ptrdiff_t>(
                      1, std::llround(static_cast<double>(g) * respace))
                : g;
    const std::vector<double>* content = &raw;
    if (shifted) {
      rs = detail::sinc_resample_with(grain_kernel, raw, respace);
      content = &rs;
    }

    const std::size_t grain_len = static_cast<std::size_t>(h_prev + h_next);
    build_window(win, h_prev, h_next);
    buf.assign(grain_len, 0.0);
    const std::size_t have = std::min(grain_len, content->size());
    for (std::size_t i = 0; i < have; ++i) buf[i] = (*content)[i] * win[i];

    // Near signal edges the target span may fall under two periods;
    // such grains go out uncorrected.
    const std::ptrdiff_t s_prev = std::min<std::ptrdiff_t>(5 * g, m);
    const std::ptrdiff_t s_next = std::min<std::ptrdiff_t>(5 * g, len - m);
    if (correct_env && shifted && s_prev + s_next >= 3 * g) {
      // Zero-padding the grain to at least twice its length keeps the
      // correction filter's circular tail from wrapping into it; the
      // size tracks the grain so low-pitch grains stay resolved and
      // high-pitch ones stay cheap.
      std::size_t nfft = 256;
      while (nfft < 2 * grain_len) nfft <<= 1;
      RealFft& fft = plan_for(nfft);
      const double bin_hz = static_cast<double>(audio.sample_rate) /
                            static_cast<double>(nfft);

      // Target envelope, warped by 2^(kappa p / 12) and read as
      // env_in(f * inv_warp).  Measured over ~10 input periods around
      // the mark with the library estimator: the output inherits this
      // exact shape, so it must be the sharp long-window envelope, not
      // a 2-period one whose smeared formant skirts would be imprinted.
      if (tgt_mark == std::numeric_limits<std::ptrdiff_t>::min() ||
          std::abs(m - tgt_mark) > 4 * g) {
        tgt_env = cepstral_envelope(
            std::span<const double>(
                x.data() + (m - s_prev),
                static_cast<std::size_t>(s_prev + s_next)),
            static_cast<double>(audio.sample_rate) / static_cast<double>(g),
            audio.sample_rate);
        tgt_mark = m;
      }
      const auto& tgt = tgt_env;
      const double bin_t = tgt.bin_hz();
      const auto& tmag = tgt.log_magnitude;
      auto env_in = [&](double hz) {
        const double q = std::clamp(hz / bin_t, 0.0,
                                    static_cast<double>(tmag.size() - 1));
        const std::size_t lo = static_cast<std::size_t>(q);
        const std::size_t hi = std::min(lo + 1, tmag.size() - 1);
        const double frac = q - static_cast<double>(lo);
        return tmag[lo] + frac * (tmag[hi] - tmag[lo]);
      };

      // Content envelope, measured on the resampled grain itself so
      // that regions holding only leakage stay at their true (low)
      // level and are not amplified into artifacts.
      std::vector<double> padded_g(nfft, 0.0);
      std::copy(buf.begin(), buf.end(), padded_g.begin());
      std::vector<std::complex<double>> spec_g(nfft / 2 + 1);
      fft.forward(padded_g, spec_g);
      std::vector<double> env_g(spec_g.size());
      double peak_g = 0.0;
      for (const auto& v : spec_g) peak_g = std::max(peak_g, std::abs(v));
      const double floor_g = std::max(peak_g * 1e-2, 1e-12);
      for (std::size_t k = 0; k < spec_g.size(); ++k)
        env_g[k] = std::log(std::max(std::abs(spec_g[k]), floor_g));
      detail::true_envelope(env_g, fft,
                            static_cast<int>(std::lround(0.5 * h_next)), 3);
      for (std::size_t k = 0; k < spec_g.size(); ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        spec_g[k] *= std::exp(env_in(f * inv_warp) - env_g[k]);
      }
      fft.inverse(spec_g, padded_g);
      // The correction is a shape change only: both envelope estimates
      // carry their own absolute lift, so the grain is rescaled to its
      // pre-correction energy to keep the voiced/unvoiced balance.
      double e_before = 0.0, e_after = 0.0;
      for (std::size_t i = 0; i < grain_len; ++i) {
        e_before += buf[i] * buf[i];
        e_after += padded_g[i] * padded_g[i];
      }
      const double rescale =
          e_after > 0.0 ? std::sqrt(e_before / e_after) : 1.0;
      for (std::size_t i = 0; i < grain_len; ++i)
        buf[i] = padded_g[i] * rescale;
    }

    for (std::size_t i = 0; i < grain_len; ++i) {
      const std::ptrdiff_t dst = c - h_prev + static_cast<std::ptrdiff_t>(i);
      if (dst < 0 || dst >= len) continue;
      acc[static_cast<std::size_t>(dst)] += buf[i];
      wsum[static_cast<std::size_t>(dst)] += win[i];
    }
  };

  // Walk output time from the first mark in both directions.  Voiced
  // steps shrink by the pitch ratio; unvoiced steps stay put, so only
  // voiced content changes pitch.
  auto step_at = [&](double t) {
    const std::size_t mi = nearest_mark(t);
    const double g = static_cast<double>(gap[mi]);
    return ctx.voiced_at(pos[mi]) ? g * respace : g;
  };

  for (double t = static_cast<double>(pos[0]); t < static_cast<double>(len);
       t += step_at(t))
    emit(t);
  for (double t = static_cast<double>(pos[0]) - step_at(pos[0]); t > -960.0;
       t -= step_at(t))
    emit(t);

  VoTransResult out;
  out.audio.sample_rate = audio.sample_rate;
  out.audio.samples.resize(audio.samples.size());
  // Renormalize only where windows over-overlap.  Thin coverage is left
  // untouched: for downward shifts the inter-grain dips carry the new
  // period, and dividing them out would restore the original pitch.
  for (std::size_t i = 0; i < acc.size(); ++i)
    out.audio.samples[i] = acc[i] / std::max(wsum[i], 1.0);

  const double peak = peak_abs(out.audio);
  if (peak > 1.0) {
    out.normalization_gain = 1.0 / peak;
    apply_gain(out.audio, out.normalization_gain);
  }
  return out;
}

}  // namespace voxaug
