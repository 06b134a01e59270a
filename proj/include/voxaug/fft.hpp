// fft.hpp
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

// Iterative radix-2 FFT with cached twiddles, plus real-signal wrappers
// that run a half-size complex transform.  All analysis sizes in this
// library are powers of two, so nothing more general is needed.

#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "voxaug/error.hpp"

namespace voxaug {

class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n) {
    if (n < 2 || (n & (n - 1)) != 0)
      throw InvalidParams("fft size must be a power of two >= 2");
    const int log2n = std::countr_zero(n);
    bitrev_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (int b = 0; b < log2n; ++b) r |= ((i >> b) & 1u) << (log2n - 1 - b);
      bitrev_[i] = static_cast<std::uint32_t>(r);
    }
    twiddle_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double a = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = {std::cos(a), std::sin(a)};
    }
  }

  std::size_t size() const { return n_; }

  // In place, unnormalized: X[k] = sum_t x[t] exp(-2*pi*i*k*t/n).
  void forward(std::complex<double>* a) const { transform(a, false); }

  // In place, includes the 1/n factor; forward followed by inverse is identity.
  void inverse(std::complex<double>* a) const {
    transform(a, true);
    const double inv = 1.0 / static_cast<double>(n_);
    auto* d = reinterpret_cast<double*>(a);
    for (std::size_t i = 0; i < 2 * n_; ++i) d[i] *= inv;
  }

 private:
  void transform(std::complex<double>* a, bool inv) const {
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j = bitrev_[i];
      if (j > i) std::swap(a[i], a[j]);
    }
    // std::complex guarantees array layout {re, im}; arithmetic is done on
    // raw doubles to keep the butterfly free of library multiply calls.
    auto* d = reinterpret_cast<double*>(a);
    const auto* tw = reinterpret_cast<const double*>(twiddle_.data());
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len >> 1;
      const std::size_t step = n_ / len;
      for (std::size_t base = 0; base < n_; base += len) {
        for (std::size_t k = 0; k < half; ++k) {
          const std::size_t tk = 2 * (k * step);
          const double wr = tw[tk];
          const double wi = inv ? -tw[tk + 1] : tw[tk + 1];
          const std::size_t p = 2 * (base + k);
          const std::size_t q = 2 * (base + k + half);
          const double vr = d[q] * wr - d[q + 1] * wi;
          const double vi = d[q] * wi + d[q + 1] * wr;
          const double ur = d[p];
          const double ui = d[p + 1];
          d[p] = ur + vr;
          d[p + 1] = ui + vi;
          d[q] = ur - vr;
          d[q + 1] = ui - vi;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<std::complex<double>> twiddle_;
  std::vector<std::uint32_t> bitrev_;
};

// Real-signal transforms of size n (power of two >= 4) built on a complex
// transform of size n/2.  Spectra use the n/2+1 nonredundant bins.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n), half_(n / 2) {
    if (n < 4 || (n & (n - 1)) != 0)
      throw InvalidParams("real fft size must be a power of two >= 4");
    wn_.resize(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
      const double a = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
      wn_[k] = {std::cos(a), std::sin(a)};
    }
    work_.resize(n / 2);
  }

  std::size_t size() const { return n_; }

  // x: n reals.  X: n/2+1 bins of the unnormalized DFT.
  void forward(std::span<const double> x, std::span<std::complex<double>> X) const {
    check_spans(x.size(), X.size());
    const std::size_t h = n_ / 2;
    for (std::size_t k = 0; k < h; ++k) work_[k] = {x[2 * k], x[2 * k + 1]};
    half_.forward(work_.data());
    const std::complex<double> z0 = work_[0];
    X[0] = {z0.real() + z0.imag(), 0.0};
    X[h] = {z0.real() - z0.imag(), 0.0};
    for (std::size_t k = 1; k < h; ++k) {
      const std::complex<double> zk = work_[k];
      const std::complex<double> zc = std::conj(work_[h - k]);
      const std::complex<double> even = 0.5 * (zk + zc);
      const std::complex<double> odd = std::complex<double>(0.0, -0.5) * (zk - zc);
      X[k] = even + wn_[k] * odd;
    }
  }

  // X: n/2+1 bins of a Hermitian spectrum.  x: n reals of the normalized
  // inverse DFT (1/n convention), so forward then inverse is identity.
  void inverse(std::span<const std::complex<double>> X, std::span<double> x) const {
    check_spans(x.size(), X.size());
    const std::size_t h = n_ / 2;
    work_[0] = {0.5 * (X[0].real() + X[h].real()), 0.5 * (X[0].real() - X[h].real())};
    for (std::size_t k = 1; k < h; ++k) {
      const std::complex<double> xk = X[k];
      const std::complex<double> xc = std::conj(X[h - k]);
      const std::complex<double> even = 0.5 * (xk + xc);
      const std::complex<double> odd = std::conj(wn_[k]) * (0.5 * (xk - xc));
      work_[k] = even + std::complex<double>(0.0, 1.0) * odd;
    }
    half_.inverse(work_.data());
    for (std::size_t k = 0; k < h; ++k) {
      x[2 * k] = work_[k].real();
      x[2 * k + 1] = work_[k].imag();
    }
  }

 private:
  void check_spans(std::size_t nx, std::size_t nX) const {
    if (nx != n_ || nX != n_ / 2 + 1)
      throw InvalidParams("real fft span sizes do not match plan");
  }

  std::size_t n_;
  Fft half_;
  std::vector<std::complex<double>> wn_;
  mutable std::vector<std::complex<double>> work_;
};

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace voxaug
