// rtbench.hpp
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

// Streaming-constraint checks: receptive-field and lookahead accounting
// for dilated convolution stacks, and wall-clock real-time-factor
// measurement of augmentation workloads.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "voxaug/audio.hpp"
#include "voxaug/error.hpp"
#include "voxaug/frames.hpp"

namespace voxaug {

// Streamed output must lag the microphone by less than this.
inline constexpr double kLatencyBudgetMs = 90.0;

// An augmentation chain must run at least this many times faster than
// real time on a single core to keep up with on-the-fly training.
inline constexpr double kRtfThreshold = 3.0;

struct ConvLayer {
  int kernel = 1;
  int dilation = 1;
  bool causal = false;
};

struct ConvStackSpec {
  std::vector<ConvLayer> layers;
  double hop_ms = kHopMs;
  double window_ms = kWindowMs;
};

inline void validate(const ConvStackSpec& spec) {
  if (spec.layers.empty())
    throw InvalidParams("conv stack needs at least one layer");
  for (const auto& l : spec.layers) {
    if (l.kernel < 1) throw InvalidParams("conv kernel must be >= 1");
    if (l.dilation < 1) throw InvalidParams("conv dilation must be >= 1");
  }
  if (!(spec.hop_ms > 0.0) || !(spec.window_ms > 0.0))
    throw InvalidParams("hop and window must be positive");
}

inline ConvStackSpec conv_stack_from_json(const nlohmann::json& j) {
  ConvStackSpec spec;
  try {
    for (const auto& jl : j.at("layers")) {
      ConvLayer l;
      l.kernel = jl.at("kernel").get<int>();
      l.dilation = jl.at("dilation").get<int>();
      l.causal = jl.at("causal").get<bool>();
      spec.layers.push_back(l);
    }
    if (j.contains("hop_ms")) spec.hop_ms = j.at("hop_ms").get<double>();
    if (j.contains("window_ms"))
      spec.window_ms = j.at("window_ms").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptHeader(std::string("conv stack: ") + e.what());
  }
  validate(spec);
  return spec;
}

inline nlohmann::json conv_stack_to_json(const ConvStackSpec& spec) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : spec.layers)
    layers.push_back({{"kernel", l.kernel},
                      {"dilation", l.dilation},
                      {"causal", l.causal}});
  return nlohmann::json{{"layers", std::move(layers)},
                        {"hop_ms", spec.hop_ms},
                        {"window_ms", spec.window_ms}};
}

// Frames of input influencing one output frame.  Each layer widens the
// dependency interval by (kernel-1)*dilation regardless of alignment.
inline int receptive_field(const ConvStackSpec& spec) {
  validate(spec);
  int rf = 1;
  for (const auto& l : spec.layers) rf += (l.kernel - 1) * l.dilation;
  return rf;
}

struct LatencyReport {
  int receptive_field_frames = 0;
  double receptive_field_ms = 0.0;
  double lookahead_ms = 0.0;
  double algorithmic_latency_ms = 0.0;
  bool within_budget = false;

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"receptive_field_frames", receptive_field_frames},
        {"receptive_field_ms", receptive_field_ms},
        {"lookahead_ms", lookahead_ms},
        {"algorithmic_latency_ms", algorithmic_latency_ms},
        {"budget_ms", kLatencyBudgetMs},
        {"within_budget", within_budget}};
  }
};

// Lookahead counts only future frames: a centered (non-causal) kernel
// sees floor((kernel-1)/2)*dilation frames ahead, a causal one none.
// The algorithmic latency model adds half the analysis window (the
// newest frame is centered on audio half a window old) plus one hop of
// output delay on top of the stack's own lookahead.
inline LatencyReport latency_budget(const ConvStackSpec& spec) {
  validate(spec);
  LatencyReport r;
  r.receptive_field_frames = receptive_field(spec);
  r.receptive_field_ms = r.receptive_field_frames * spec.hop_ms;
  int lookahead_frames = 0;
  for (const auto& l : spec.layers)
    if (!l.causal) lookahead_frames += ((l.kernel - 1) / 2) * l.dilation;
  r.lookahead_ms = lookahead_frames * spec.hop_ms;
  r.algorithmic_latency_ms = r.lookahead_ms +
                             (spec.window_ms - spec.hop_ms) / 2.0 +
                             spec.hop_ms;
  r.within_budget = r.algorithmic_latency_ms < kLatencyBudgetMs;
  return r;
}

// ---------------------------------------------------------------------------
// Real-time factor

struct RtfReport {
  double audio_seconds = 0.0;
  double median_wall_seconds = 0.0;
  double rtf = 0.0;
  int repeats = 0;
  bool pass = false;

  nlohmann::json to_json() const {
    return nlohmann::json{{"audio_seconds", audio_seconds},
                          {"median_wall_seconds", median_wall_seconds},
                          {"rtf", rtf},
                          {"repeats", repeats},
                          {"threshold", kRtfThreshold},
                          {"pass", pass}};
  }
};

using Workload = std::function<void(const AudioBuffer&)>;

// Times `workload` over the same audio `repeats` times on the calling
// thread and reports audio-seconds per wall-second from the median run.
// Short clips and too few repeats make the median meaningless, so both
// are rejected up front.
inline RtfReport measure_rtf(const Workload& workload,
                             const AudioBuffer& audio, int repeats = 3) {
  if (repeats < 3) throw InvalidParams("rtf needs at least 3 repeats");
  if (audio.duration_seconds() < 10.0)
    throw TooShort("rtf needs at least 10 s of audio");
  if (!workload) throw WorkloadFailure("empty workload");

  std::vector<double> walls;
  walls.reserve(static_cast<std::size_t>(repeats));
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      workload(audio);
    } catch (const std::exception& e) {
      throw WorkloadFailure(std::string("workload failed: ") + e.what());
    }
    const auto t1 = std::chrono::steady_clock::now();
    walls.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(walls.begin(), walls.end());
  const double median =
      walls.size() % 2 == 1
          ? walls[walls.size() / 2]
          : 0.5 * (walls[walls.size() / 2 - 1] + walls[walls.size() / 2]);

  RtfReport r;
  r.audio_seconds = audio.duration_seconds();
  r.median_wall_seconds = median;
  r.rtf = median > 0.0 ? r.audio_seconds / median
                       : std::numeric_limits<double>::infinity();
  r.repeats = repeats;
  r.pass = r.rtf >= kRtfThreshold;
  return r;
}

}  // namespace voxaug
