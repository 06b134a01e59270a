// stretch.hpp
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

// Waveform-similarity overlap-add time stretching and the pitch shifter
// built from it: resample to move pitch (which also changes duration),
// then stretch the duration back.  30 ms segments, 10 ms crossfade
// overlap, +-5 ms similarity search.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "voxaug/audio.hpp"
#include "voxaug/error.hpp"
#include "voxaug/resample.hpp"

namespace voxaug {

// Stretches or compresses x to exactly out_len samples.  Segment joins
// pick the input offset (within the search radius) whose overlap best
// correlates with what has already been written, then blend linearly.
inline std::vector<double> time_stretch_wsola(std::span<const double> x,
                                              std::size_t out_len,
                                              int sample_rate) {
  if (x.empty()) throw EmptyAudio("stretch of empty input");
  if (sample_rate <= 0) throw InvalidParams("stretch needs a positive rate");
  if (out_len == 0) return {};

  const std::size_t seg = static_cast<std::size_t>(sample_rate) * 30 / 1000;
  const std::size_t ov = static_cast<std::size_t>(sample_rate) * 10 / 1000;
  const std::ptrdiff_t search = sample_rate * 5 / 1000;
  const std::size_t hop = seg - ov;
  const std::size_t n = x.size();

  std::vector<double> out(out_len, 0.0);
  if (n <= seg || out_len <= seg) {
    // Degenerate: too short to overlap-add, fall back to a linear read.
    for (std::size_t m = 0; m < out_len; ++m) {
      const double t = out_len > 1
                           ? static_cast<double>(m) *
                                 static_cast<double>(n - 1) /
                                 static_cast<double>(out_len - 1)
                           : 0.0;
      const std::size_t i = static_cast<std::size_t>(t);
      const double frac = t - static_cast<double>(i);
      const std::size_t j = std::min(i + 1, n - 1);
      out[m] = x[i] + frac * (x[j] - x[i]);
    }
    return out;
  }

  // Seed with the input head so the first overlap has context.
  const std::size_t head = std::min(seg, out_len);
  std::copy_n(x.begin(), head, out.begin());

  // Linear map from output to input positions aligning both endpoints.
  const double in_span = static_cast<double>(n - seg);
  const double out_span = static_cast<double>(out_len - seg);
  for (std::size_t pos = hop; pos < out_len; pos += hop) {
    const std::ptrdiff_t nominal = static_cast<std::ptrdiff_t>(
        std::llround(static_cast<double>(pos) * in_span / std::max(1.0, out_span)));
    std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, nominal - search);
    std::ptrdiff_t hi =
        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n - seg), nominal + search);
    if (lo > hi) lo = hi;

    // Normalized cross-correlation against the tail already written.
    const std::size_t ov_here = std::min(ov, out_len - pos);
    std::ptrdiff_t best = lo;
    double best_score = -1e300;
    for (std::ptrdiff_t cand = lo; cand <= hi; ++cand) {
      double dot = 0.0, energy = 1e-12;
      const double* xp = x.data() + cand;
      const double* op = out.data() + pos;
      for (std::size_t i = 0; i < ov_here; ++i) {
        dot += op[i] * xp[i];
        energy += xp[i] * xp[i];
      }
      const double score = dot / std::sqrt(energy);
      if (score > best_score) {
        best_score = score;
        best = cand;
      }
    }

    const double* src = x.data() + best;
    for (std::size_t i = 0; i < ov_here; ++i) {
      const double w = static_cast<double>(i + 1) / static_cast<double>(ov + 1);
      out[pos + i] = (1.0 - w) * out[pos + i] + w * src[i];
    }
    const std::size_t body_end = std::min(seg, out_len - pos);
    for (std::size_t i = ov_here; i < body_end; ++i) out[pos + i] = src[i];
  }
  return out;
}

// Pitch shift by resampling (moves pitch and duration together) and
// stretching the duration back.  Zero shift bypasses both stages.
inline AudioBuffer pitch_shift_plain(const AudioBuffer& in, double semitones) {
  if (std::fabs(semitones) > 12.0)
    throw InvalidShift("pitch shift beyond +-12 semitones");
  if (in.samples.empty()) throw EmptyAudio("pitch shift of empty input");
  if (semitones == 0.0) return in;

  const double ratio = std::pow(2.0, -semitones / 12.0);
  const auto shifted = sinc_resample(in.samples, ratio);
  AudioBuffer out;
  out.sample_rate = in.sample_rate;
  out.samples =
      time_stretch_wsola(shifted, in.samples.size(), in.sample_rate);
  return out;
}

}  // namespace voxaug
