// noise_bank.hpp
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

// Directory of environmental noise recordings served as fixed-length
// segments for noise mixing.  Files are indexed up front and loaded on
// demand; every segment is delivered mono at the 24 kHz analysis rate.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "voxaug/audio.hpp"
#include "voxaug/error.hpp"
#include "voxaug/frames.hpp"
#include "voxaug/resample.hpp"
#include "voxaug/rng.hpp"
#include "voxaug/wav.hpp"

namespace voxaug {

struct NoiseBank {
  struct Entry {
    std::filesystem::path path;
    double duration_s = 0.0;
  };
  std::vector<Entry> segments;

  double total_duration_s() const {
    double t = 0.0;
    for (const auto& e : segments) t += e.duration_s;
    return t;
  }
};

// Indexes every WAV under `dir` (recursively), sorted by path so the
// bank layout is reproducible.  Mono only; sample rates other than
// 24 kHz are resampled when a segment is served, so the recorded
// duration is the one the mixer will see.
inline NoiseBank load_noise_bank(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw EmptyDirectory("noise bank: " + dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() != ".wav") continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw EmptyDirectory("noise bank: no WAV files under " + dir.string());

  NoiseBank bank;
  bank.segments.reserve(files.size());
  for (const auto& f : files) {
    // read_wav_info rejects stereo and exotic formats up front, so a bad
    // file fails at load time instead of mid-materialization.
    const WavInfo info = read_wav_info(f);
    bank.segments.push_back({f, info.duration_seconds()});
  }
  return bank;
}

// 50 ms equal-power crossfade used when a noise file is shorter than the
// requested segment and must be tiled.
constexpr double kNoiseCrossfadeMs = 50.0;

struct NoiseSegment {
  AudioBuffer audio;
  std::size_t file_index = 0;
  double offset_s = 0.0;
};

namespace detail {

// Tiles `x` to at least `needed` samples, joining copies with an
// equal-power (sin/cos) crossfade so the seam keeps the noise energy.
inline std::vector<double> tile_with_crossfade(const std::vector<double>& x,
                                               std::size_t needed,
                                               std::size_t fade) {
  std::vector<double> out = x;
  if (x.size() <= fade)
    throw InvalidParams("noise file shorter than the crossfade");
  while (out.size() < needed) {
    const std::size_t seam = out.size() - fade;
    out.resize(seam + x.size());
    for (std::size_t i = 0; i < fade; ++i) {
      const double t =
          (static_cast<double>(i) + 0.5) / static_cast<double>(fade);
      const double a = std::cos(0.5 * M_PI * t);
      const double b = std::sin(0.5 * M_PI * t);
      out[seam + i] = a * out[seam + i] + b * x[i];
    }
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(fade), x.end(),
              out.begin() + static_cast<std::ptrdiff_t>(seam + fade));
  }
  return out;
}

}  // namespace detail

// Draws one segment of exactly `needed_s` seconds: uniform file choice,
// then a uniform start offset within the file.  Draw order (file, then
// offset) is part of the reproducibility contract.  Files shorter than
// the request are tiled with a 50 ms equal-power crossfade first.
inline NoiseSegment pick_noise_segment(const NoiseBank& bank, double needed_s,
                                       Rng& rng) {
  if (bank.segments.empty()) throw EmptyDirectory("noise bank is empty");
  if (!(needed_s > 0.0)) throw InvalidParams("segment length must be positive");

  NoiseSegment out;
  out.file_index = static_cast<std::size_t>(rng.below(bank.segments.size()));
  const auto& entry = bank.segments[out.file_index];

  AudioBuffer file = read_wav(entry.path);
  if (file.sample_rate != kAnalysisRate) file = resample(file, kAnalysisRate);

  const auto needed = static_cast<std::size_t>(
      std::llround(needed_s * static_cast<double>(kAnalysisRate)));
  const std::size_t fade = static_cast<std::size_t>(
      std::llround(kNoiseCrossfadeMs * 1e-3 * kAnalysisRate));

  std::vector<double> source = file.samples;
  if (source.size() < needed)
    source = detail::tile_with_crossfade(source, needed, fade);

  const std::size_t slack = source.size() - needed;
  const std::size_t start =
      slack > 0 ? static_cast<std::size_t>(rng.below(slack + 1)) : 0;
  out.offset_s = static_cast<double>(start) / kAnalysisRate;

  out.audio.sample_rate = kAnalysisRate;
  out.audio.samples.assign(
      source.begin() + static_cast<std::ptrdiff_t>(start),
      source.begin() + static_cast<std::ptrdiff_t>(start + needed));
  return out;
}

}  // namespace voxaug
