// pitch.hpp
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

// Fundamental frequency tracking on the shared 45 ms / 5 ms frame grid.
//
// Per frame the cumulative-mean-normalized difference function (CMNDF) is
// evaluated over the 50..600 Hz lag range.  The difference function uses a
// fixed 1080-sample integration window and is computed through one FFT
// cross-correlation per frame instead of the quadratic direct form.
//
// Voicing and confidence come from the global CMNDF minimum: a frame is
// voiced iff min d' <= 0.85, and confidence = clamp(1 - min d', 0, 1).
// The reported lag, however, is picked by the classic walk: the first dip
// under 0.1 extended to its local minimum, falling back to the global
// argmin.  That avoids octave errors on strongly periodic input while
// keeping the confidence definition exact.
//
// Unvoiced frames carry no pitch of their own: their f0 is filled by
// linear interpolation (in Hz) between the surrounding voiced frames,
// edges hold the nearest voiced value, and an entirely unvoiced contour
// reads 150 Hz flat.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "voxaug/audio.hpp"
#include "voxaug/error.hpp"
#include "voxaug/fft.hpp"
#include "voxaug/frames.hpp"

namespace voxaug {

constexpr double kF0MinHz = 50.0;
constexpr double kF0MaxHz = 600.0;
constexpr double kF0DefaultHz = 150.0;
constexpr double kVoicedThreshold = 0.85;  // on the CMNDF minimum
constexpr double kPickThreshold = 0.10;    // lag-pick walk threshold

struct F0Contour {
  std::vector<double> f0_hz;
  std::vector<double> confidence;
  double hop_ms = kHopMs;

  std::size_t frames() const { return f0_hz.size(); }
};

// Ratio a pitch moves by for a shift in semitones: 2^(p/12).
inline double hz_to_semitone_ratio(double semitones) {
  return std::pow(2.0, semitones / 12.0);
}

namespace detail {

// One frame's CMNDF over tau in [min_lag, max_lag], plus bookkeeping to
// translate a refined lag into Hz.
struct FramePlan {
  explicit FramePlan(int sample_rate)
      : win(window_samples(sample_rate)),
        min_lag(static_cast<int>(std::ceil(sample_rate / kF0MaxHz))),
        max_lag(static_cast<int>(std::floor(sample_rate / kF0MinHz))),
        fft(next_pow2(static_cast<std::size_t>(win + max_lag))),
        n(fft.size()),
        a(n, 0.0),
        b(n, 0.0),
        A(n / 2 + 1),
        B(n / 2 + 1),
        corr(n),
        diff(static_cast<std::size_t>(max_lag) + 1) {}

  // frame points at win + max_lag samples (zero-padded by the caller when
  // the tail runs out).  Fills diff[tau] for tau in [0, max_lag].
  void cmndf(const double* frame) {
    // d(tau) = E0 + E(tau) - 2 r(tau) with a fixed integration window:
    //   E0     = sum_{t<win} x[t]^2
    //   E(tau) = sum_{t<win} x[t+tau]^2   (running update)
    //   r(tau) = sum_{t<win} x[t] x[t+tau] (one FFT correlation)
    std::fill(a.begin(), a.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
    std::copy(frame, frame + win, a.begin());
    std::copy(frame, frame + win + max_lag, b.begin());
    fft_forward_pair();

    double e0 = 0.0;
    for (int t = 0; t < win; ++t) e0 += frame[t] * frame[t];
    double et = e0;
    double cum = 0.0;
    diff[0] = 1.0;  // by CMNDF definition
    for (int tau = 1; tau <= max_lag; ++tau) {
      et += frame[win + tau - 1] * frame[win + tau - 1] -
            frame[tau - 1] * frame[tau - 1];
      double d = e0 + et - 2.0 * corr[static_cast<std::size_t>(tau)];
      if (d < 0.0) d = 0.0;  // rounding guard
      cum += d;
      diff[static_cast<std::size_t>(tau)] =
          cum > 0.0 ? d * static_cast<double>(tau) / cum : 1.0;
    }
  }

  const int win;
  const int min_lag;
  const int max_lag;
  RealFft fft;
  const std::size_t n;
  std::vector<double> a, b;
  std::vector<std::complex<double>> A, B;
  std::vector<double> corr;
  std::vector<double> diff;

 private:
  void fft_forward_pair() {
    fft.forward(a, A);
    fft.forward(b, B);
    for (std::size_t k = 0; k < A.size(); ++k) A[k] = std::conj(A[k]) * B[k];
    fft.inverse(A, corr);
  }
};

// Parabolic refinement of a discrete minimum at index i.
inline double refine_min(const std::vector<double>& d, int i, int lo, int hi) {
  if (i <= lo || i >= hi) return static_cast<double>(i);
  const double y0 = d[static_cast<std::size_t>(i - 1)];
  const double y1 = d[static_cast<std::size_t>(i)];
  const double y2 = d[static_cast<std::size_t>(i + 1)];
  const double denom = y0 - 2.0 * y1 + y2;
  if (std::fabs(denom) < 1e-30) return static_cast<double>(i);
  double delta = 0.5 * (y0 - y2) / denom;
  delta = std::clamp(delta, -0.5, 0.5);
  return static_cast<double>(i) + delta;
}

}  // namespace detail

inline F0Contour estimate_f0(const AudioBuffer& audio) {
  if (audio.sample_rate != kAnalysisRate)
    throw SampleRateMismatch("pitch analysis requires 24 kHz input, got " +
                             std::to_string(audio.sample_rate));
  const std::size_t n_frames = frame_count(audio.samples.size(), audio.sample_rate);

  detail::FramePlan plan(audio.sample_rate);
  const int hop = hop_samples(audio.sample_rate);
  const std::size_t need = static_cast<std::size_t>(plan.win + plan.max_lag);

  F0Contour out;
  out.f0_hz.assign(n_frames, 0.0);
  out.confidence.assign(n_frames, 0.0);
  std::vector<char> voiced(n_frames, 0);
  std::vector<double> frame(need);

  for (std::size_t i = 0; i < n_frames; ++i) {
    const std::size_t start = i * static_cast<std::size_t>(hop);
    const std::size_t avail = std::min(need, audio.samples.size() - start);
    std::copy_n(audio.samples.begin() + static_cast<std::ptrdiff_t>(start), avail,
                frame.begin());
    std::fill(frame.begin() + static_cast<std::ptrdiff_t>(avail), frame.end(), 0.0);
    plan.cmndf(frame.data());

    const auto& d = plan.diff;
    int argmin = plan.min_lag;
    for (int tau = plan.min_lag; tau <= plan.max_lag; ++tau)
      if (d[static_cast<std::size_t>(tau)] < d[static_cast<std::size_t>(argmin)])
        argmin = tau;
    const double d_min = d[static_cast<std::size_t>(argmin)];

    out.confidence[i] = std::clamp(1.0 - d_min, 0.0, 1.0);
    if (d_min <= kVoicedThreshold) {
      // First dip under the pick threshold, extended to its local minimum;
      // global argmin if nothing dips that low.
      int pick = -1;
      for (int tau = plan.min_lag; tau <= plan.max_lag; ++tau) {
        if (d[static_cast<std::size_t>(tau)] < kPickThreshold) {
          while (tau + 1 <= plan.max_lag &&
                 d[static_cast<std::size_t>(tau + 1)] <
                     d[static_cast<std::size_t>(tau)])
            ++tau;
          pick = tau;
          break;
        }
      }
      if (pick < 0) pick = argmin;
      const double lag =
          detail::refine_min(d, pick, plan.min_lag, plan.max_lag);
      const double f0 = static_cast<double>(audio.sample_rate) / lag;
      out.f0_hz[i] = std::clamp(f0, kF0MinHz, kF0MaxHz);
      voiced[i] = 1;
    }
  }

  // Fill unvoiced gaps: linear interpolation in Hz between voiced
  // neighbours, nearest voiced value at the edges, 150 Hz if nothing is
  // voiced at all.
  std::ptrdiff_t prev = -1;
  const auto nf = static_cast<std::ptrdiff_t>(n_frames);
  bool any_voiced = false;
  for (std::ptrdiff_t i = 0; i < nf; ++i) {
    if (!voiced[static_cast<std::size_t>(i)]) continue;
    any_voiced = true;
    if (prev < 0) {
      for (std::ptrdiff_t j = 0; j < i; ++j)
        out.f0_hz[static_cast<std::size_t>(j)] = out.f0_hz[static_cast<std::size_t>(i)];
    } else if (i - prev > 1) {
      const double f_lo = out.f0_hz[static_cast<std::size_t>(prev)];
      const double f_hi = out.f0_hz[static_cast<std::size_t>(i)];
      for (std::ptrdiff_t j = prev + 1; j < i; ++j) {
        const double t = static_cast<double>(j - prev) / static_cast<double>(i - prev);
        out.f0_hz[static_cast<std::size_t>(j)] = f_lo + (f_hi - f_lo) * t;
      }
    }
    prev = i;
  }
  if (!any_voiced) {
    std::fill(out.f0_hz.begin(), out.f0_hz.end(), kF0DefaultHz);
  } else if (prev + 1 < nf) {
    for (std::ptrdiff_t j = prev + 1; j < nf; ++j)
      out.f0_hz[static_cast<std::size_t>(j)] = out.f0_hz[static_cast<std::size_t>(prev)];
  }
  return out;
}

// Centered moving average of the contour in the semitone (log) domain.
// The window is window_ms on the 5 ms grid forced odd; it shrinks at the
// edges.  Confidence passes through untouched.
inline F0Contour smooth_contour(const F0Contour& in, double window_ms) {
  if (!(window_ms > 0.0)) throw InvalidParams("smoothing window must be positive");
  int w = static_cast<int>(std::lround(window_ms / in.hop_ms));
  if (w < 1) w = 1;
  if (w % 2 == 0) ++w;
  F0Contour out = in;
  if (w == 1 || in.f0_hz.empty()) return out;

  const auto n = static_cast<std::ptrdiff_t>(in.f0_hz.size());
  std::vector<double> st(in.f0_hz.size());
  for (std::size_t i = 0; i < in.f0_hz.size(); ++i) {
    if (!(in.f0_hz[i] > 0.0))
      throw InvalidParams("smoothing requires strictly positive f0");
    st[i] = 12.0 * std::log2(in.f0_hz[i]);
  }
  // Prefix sums make each shrinking-edge window O(1).
  std::vector<double> prefix(in.f0_hz.size() + 1, 0.0);
  for (std::size_t i = 0; i < st.size(); ++i) prefix[i + 1] = prefix[i] + st[i];

  const std::ptrdiff_t h = w / 2;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - h);
    const std::ptrdiff_t hi = std::min(n - 1, i + h);
    const double mean = (prefix[static_cast<std::size_t>(hi + 1)] -
                         prefix[static_cast<std::size_t>(lo)]) /
                        static_cast<double>(hi - lo + 1);
    out.f0_hz[static_cast<std::size_t>(i)] = std::pow(2.0, mean / 12.0);
  }
  return out;
}

inline void write_contour_csv(const F0Contour& c, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoFailure("cannot open " + path.string() + " for writing");
  f << "frame,f0_hz,confidence\n";
  char line[96];
  for (std::size_t i = 0; i < c.frames(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.6f,%.6f\n", i, c.f0_hz[i],
                  c.confidence[i]);
    f << line;
  }
  if (!f) throw IoFailure("write failed on " + path.string());
}

inline F0Contour read_contour_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoFailure("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != "frame,f0_hz,confidence")
    throw CorruptHeader(path.string() + ": bad contour header");
  F0Contour out;
  std::size_t expect = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::size_t idx;
    double f0, conf;
    try {
      if (!std::getline(ss, cell, ',')) throw CorruptHeader("short row");
      idx = static_cast<std::size_t>(std::stoull(cell));
      if (!std::getline(ss, cell, ',')) throw CorruptHeader("short row");
      f0 = std::stod(cell);
      if (!std::getline(ss, cell, ',')) throw CorruptHeader("short row");
      conf = std::stod(cell);
    } catch (const Error&) {
      throw CorruptHeader(path.string() + ": malformed contour row");
    } catch (const std::exception&) {
      throw CorruptHeader(path.string() + ": malformed contour row");
    }
    if (idx != expect++)
      throw CorruptHeader(path.string() + ": non-contiguous frame index");
    out.f0_hz.push_back(f0);
    out.confidence.push_back(conf);
  }
  return out;
}

}  // namespace voxaug
