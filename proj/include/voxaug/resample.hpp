// resample.hpp
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

// Windowed-sinc resampler: 64-tap kernel under a Kaiser window with
// beta = 8, evaluated from a dense table with linear interpolation.  When
// the rate drops, the kernel widens so the cutoff tracks the new Nyquist.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "voxaug/audio.hpp"
#include "voxaug/error.hpp"

namespace voxaug {

namespace detail {

// Modified Bessel function I0 by power series; converges fast for the
// argument range a Kaiser window uses.
inline double bessel_i0(double x) {
  const double h = 0.5 * x;
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= (h / k) * (h / k);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

class SincKernel {
 public:
  // scale <= 1 stretches the kernel by 1/scale and lowers the cutoff by
  // scale; scale == 1 is the plain 64-tap interpolation kernel.
  explicit SincKernel(double scale) : scale_(scale), half_(kHalfTaps / scale) {
    const double i0b = bessel_i0(kBeta);
    const std::size_t n = static_cast<std::size_t>(half_ * kGrid) + 2;
    table_.resize(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / kGrid;
      if (u >= half_) continue;
      const double v = u / half_;
      const double win = bessel_i0(kBeta * std::sqrt(1.0 - v * v)) / i0b;
      table_[i] = scale_ * sinc(scale_ * u) * win;
    }
  }

  double half_width() const { return half_; }

  double operator()(double u) const {
    const double a = std::fabs(u) * kGrid;
    const std::size_t i = static_cast<std::size_t>(a);
    if (i + 1 >= table_.size()) return 0.0;
    const double frac = a - static_cast<double>(i);
    return table_[i] + frac * (table_[i + 1] - table_[i]);
  }

 private:
  static double sinc(double x) {
    if (std::fabs(x) < 1e-9) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
  }

  static constexpr double kBeta = 8.0;
  static constexpr int kHalfTaps = 32;  // 64 taps total at scale 1
  static constexpr int kGrid = 128;     // table points per input sample

  double scale_;
  double half_;
  std::vector<double> table_;
};

// Inner loop against a prebuilt kernel.  Callers that resample many
// short spans at one ratio build the kernel once; its table is the
// expensive part.
inline std::vector<double> sinc_resample_with(const SincKernel& kernel,
                                              std::span<const double> x,
                                              double ratio) {
  const std::size_t out_len =
      static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) * ratio));
  const double half = kernel.half_width();
  const auto n = static_cast<std::ptrdiff_t>(x.size());

  std::vector<double> out(out_len);
  for (std::size_t m = 0; m < out_len; ++m) {
    const double t = static_cast<double>(m) / ratio;
    std::ptrdiff_t j0 = static_cast<std::ptrdiff_t>(std::ceil(t - half));
    std::ptrdiff_t j1 = static_cast<std::ptrdiff_t>(std::floor(t + half));
    if (j0 < 0) j0 = 0;
    if (j1 >= n) j1 = n - 1;
    double acc = 0.0;
    for (std::ptrdiff_t j = j0; j <= j1; ++j)
      acc += x[static_cast<std::size_t>(j)] * kernel(static_cast<double>(j) - t);
    out[m] = acc;
  }
  return out;
}

}  // namespace detail

// Resamples by an arbitrary length ratio (output length over input
// length).  Output sample n is taken at input position n / ratio.
inline std::vector<double> sinc_resample(std::span<const double> x, double ratio) {
  if (!(ratio > 0.0)) throw InvalidParams("resample ratio must be positive");
  if (x.empty()) return {};
  const detail::SincKernel kernel(ratio < 1.0 ? ratio : 1.0);
  return detail::sinc_resample_with(kernel, x, ratio);
}

// Rate conversion; same rate returns a copy untouched.  Output length is
// round(n * target / source).
inline AudioBuffer resample(const AudioBuffer& in, int target_rate) {
  if (target_rate <= 0) throw InvalidParams("target rate must be positive");
  if (in.sample_rate <= 0) throw InvalidParams("source rate must be positive");
  if (target_rate == in.sample_rate) return in;
  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples = sinc_resample(
      in.samples, static_cast<double>(target_rate) / in.sample_rate);
  return out;
}

}  // namespace voxaug
