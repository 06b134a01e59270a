// frames.hpp
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

// Shared frame geometry.  Every frame-level analysis in the toolkit uses
// a 45 ms window advanced by a 5 ms hop at 24 kHz; pitch contours and mel
// spectrograms of the same audio therefore always align frame for frame.

#pragma once

#include <cstddef>

#include "voxaug/error.hpp"

namespace voxaug {

constexpr int kAnalysisRate = 24000;
constexpr double kWindowMs = 45.0;
constexpr double kHopMs = 5.0;

constexpr int window_samples(int sample_rate) {
  return sample_rate * 45 / 1000;
}

constexpr int hop_samples(int sample_rate) {
  return sample_rate * 5 / 1000;
}

// Number of full analysis windows that fit: floor((n - win) / hop) + 1.
inline std::size_t frame_count(std::size_t n_samples, int sample_rate) {
  const std::size_t win = static_cast<std::size_t>(window_samples(sample_rate));
  const std::size_t hop = static_cast<std::size_t>(hop_samples(sample_rate));
  if (n_samples < win) throw TooShort("audio shorter than one analysis window");
  return (n_samples - win) / hop + 1;
}

}  // namespace voxaug
