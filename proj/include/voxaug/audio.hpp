// audio.hpp
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

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "voxaug/error.hpp"

namespace voxaug {

// Mono audio held as doubles in [-1, 1] nominal range.  Intermediate
// processing may exceed the range; writers and normalizing stages bring
// it back.
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_seconds() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

inline double peak_abs(const AudioBuffer& a) {
  double p = 0.0;
  for (double v : a.samples) p = std::max(p, std::fabs(v));
  return p;
}

inline void apply_gain(AudioBuffer& a, double gain) {
  for (double& v : a.samples) v *= gain;
}

// Root mean square over the whole buffer.
inline double measure_rms(const AudioBuffer& a) {
  if (a.samples.empty()) throw EmptyBuffer("rms of empty buffer");
  double acc = 0.0;
  for (double v : a.samples) acc += v * v;
  return std::sqrt(acc / static_cast<double>(a.samples.size()));
}

}  // namespace voxaug
