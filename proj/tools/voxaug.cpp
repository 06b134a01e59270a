// voxaug.cpp
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

// Command line front end.  Subcommands wrap the library modules into
// reproducible pipeline steps: manifests, offline augmentation, contour
// and feature extraction, and streaming-constraint benchmarks.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.  Logs go to
// stderr; machine-readable output goes to files or stdout only.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "voxaug/dataset.hpp"
#include "voxaug/features.hpp"
#include "voxaug/pitch.hpp"
#include "voxaug/resample.hpp"
#include "voxaug/rtbench.hpp"
#include "voxaug/wav.hpp"

namespace {

using namespace voxaug;

AudioBuffer load_audio(const std::filesystem::path& path) {
  AudioBuffer a = read_wav(path);
  if (a.sample_rate != kAnalysisRate) a = resample(a, kAnalysisRate);
  return a;
}

const std::vector<std::string> kSchemeNames = {
    "noisy",   "sox",        "votrans",       "noisyf0",
    "noisyf0-sm", "noisyf0-vt", "noisyf0-vt-sox"};

// Accepts a non-negative real number of minutes or the word "all".
const CLI::Validator kMinutesOrAll{
    [](std::string& s) -> std::string {
      if (s == "all") return {};
      try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size() || !(v >= 0.0))
          return "expected a non-negative number of minutes or 'all'";
      } catch (...) {
        return "expected a non-negative number of minutes or 'all'";
      }
      return {};
    },
    "MINUTES|all"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voxaug: speech data augmentation for voice conversion"};
  app.require_subcommand(1);

  // -- manifest ------------------------------------------------------------
  auto* manifest =
      app.add_subcommand("manifest", "Build or subset dataset manifests");
  manifest->require_subcommand(1);

  std::string mb_dir, mb_out;
  double mb_fraction = 0.05;
  auto* mbuild = manifest->add_subcommand(
      "build", "Scan a directory of WAV files into a manifest");
  mbuild->add_option("dir", mb_dir, "Corpus root directory")->required();
  mbuild->add_option("--out", mb_out, "Manifest file to write")->required();
  mbuild
      ->add_option("--val-fraction", mb_fraction,
                   "Fraction of files held out as validation")
      ->check(CLI::Range(0.0, 0.5));
  mbuild->callback([&] {
    const DatasetManifest m = build_manifest(mb_dir, mb_fraction);
    write_manifest(m, mb_out);
    std::cerr << "voxaug: " << m.entries.size() << " entries, "
              << m.total_duration_s << " s total -> " << mb_out << "\n";
  });

  std::string ms_in, ms_out, ms_minutes;
  auto* msubset = manifest->add_subcommand(
      "subset", "Keep a duration-targeted training prefix");
  msubset->add_option("manifest", ms_in, "Input manifest")->required();
  msubset
      ->add_option("--minutes", ms_minutes,
                   "Training minutes to keep, or 'all'")
      ->required()
      ->check(kMinutesOrAll);
  msubset->add_option("--out", ms_out, "Manifest file to write")->required();
  msubset->callback([&] {
    const DatasetManifest m = read_manifest(ms_in);
    const std::optional<double> minutes =
        ms_minutes == "all" ? std::nullopt
                            : std::optional<double>(std::stod(ms_minutes));
    const DatasetManifest sub = subset_by_duration(m, minutes);
    write_manifest(sub, ms_out);
    std::cerr << "voxaug: subset " << sub.entries.size() << "/"
              << m.entries.size() << " entries, "
              << sub.train_duration_s() << " s train -> " << ms_out << "\n";
  });

  // -- augment ---------------------------------------------------------
  std::string ag_manifest, ag_scheme, ag_out, ag_noise;
  std::uint64_t ag_seed = 0;
  int ag_copies = 0;
  int ag_jobs = 1;
  auto* augment =
      app.add_subcommand("augment", "Materialize an augmented dataset");
  augment->add_option("--manifest", ag_manifest, "Dataset manifest")
      ->required();
  augment->add_option("--scheme", ag_scheme, "Augmentation scheme")
      ->required()
      ->check(CLI::IsMember(kSchemeNames));
  augment->add_option("--out", ag_out, "Output directory")->required();
  augment->add_option("--seed", ag_seed, "Base seed for all randomness")
      ->required();
  augment->add_option("--noise-dir", ag_noise,
                      "Directory of noise WAVs (required by 'noisy')");
  augment
      ->add_option("--copies", ag_copies,
                   "Copies per training clip (0 = scheme default)")
      ->check(CLI::NonNegativeNumber);
  augment->add_option("--jobs", ag_jobs, "Parallel file workers")
      ->check(CLI::PositiveNumber);
  augment->callback([&] {
    const DatasetManifest m = read_manifest(ag_manifest);
    AugmentationSpec spec;
    spec.scheme = parse_scheme(ag_scheme);
    spec.seed = ag_seed;
    spec.copies_per_input = ag_copies;
    const std::optional<std::filesystem::path> noise_dir =
        ag_noise.empty() ? std::nullopt
                         : std::optional<std::filesystem::path>(ag_noise);
    const DatasetManifest out =
        materialize(m, spec, noise_dir, ag_out, ag_jobs);
    std::cerr << "voxaug: materialized " << out.entries.size()
              << " entries with scheme " << ag_scheme << " -> " << ag_out
              << "\n";
  });

  // -- f0 extract --------------------------------------------------------
  auto* f0cmd = app.add_subcommand("f0", "Pitch contour tools");
  f0cmd->require_subcommand(1);
  std::string fx_wav, fx_out;
  auto* fextract =
      f0cmd->add_subcommand("extract", "Estimate a pitch contour");
  fextract->add_option("wav", fx_wav, "Input WAV file")->required();
  fextract->add_option("--out", fx_out, "Contour CSV to write")->required();
  fextract->callback([&] {
    const AudioBuffer audio = load_audio(fx_wav);
    const F0Contour contour = estimate_f0(audio);
    write_contour_csv(contour, fx_out);
    std::cerr << "voxaug: " << contour.frames() << " frames -> " << fx_out
              << "\n";
  });

  // -- mel ----------------------------------------------------------------
  std::string mel_wav, mel_out;
  auto* mel = app.add_subcommand("mel", "Compute a mel spectrogram");
  mel->add_option("wav", mel_wav, "Input WAV file")->required();
  mel->add_option("--out", mel_out, "Feature file to write")->required();
  mel->callback([&] {
    const AudioBuffer audio = load_audio(mel_wav);
    const MelSpectrogram feats = mel_spectrogram(audio);
    write_mel(feats, mel_out);
    std::cerr << "voxaug: " << feats.frames << " x " << feats.n_mels
              << " mel frames -> " << mel_out << "\n";
  });

  // -- bench ---------------------------------------------------------------
  auto* bench =
      app.add_subcommand("bench", "Streaming constraint checks");
  bench->require_subcommand(1);

  std::string bl_spec;
  auto* blat = bench->add_subcommand(
      "latency", "Receptive field and latency of a conv stack");
  blat->add_option("--spec", bl_spec, "Conv stack JSON file")->required();
  blat->callback([&] {
    std::ifstream f(bl_spec);
    if (!f) throw IoFailure("cannot open " + bl_spec);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CorruptHeader(bl_spec + ": " + e.what());
    }
    const LatencyReport r = latency_budget(conv_stack_from_json(j));
    std::cout << r.to_json().dump(2) << "\n";
  });

  std::string br_scheme, br_input, br_noise;
  int br_repeats = 3;
  std::uint64_t br_seed = 0;
  auto* brtf = bench->add_subcommand(
      "rtf", "Real-time factor of an augmentation chain");
  brtf->add_option("--scheme", br_scheme, "Augmentation scheme")
      ->required()
      ->check(CLI::IsMember(kSchemeNames));
  brtf->add_option("--input", br_input, "WAV fixture, at least 10 s")
      ->required();
  brtf->add_option("--repeats", br_repeats, "Timing repeats (median wins)")
      ->check(CLI::Range(3, 1000));
  brtf->add_option("--seed", br_seed, "Seed for the timed draws");
  brtf->add_option("--noise-dir", br_noise,
                   "Directory of noise WAVs (required by 'noisy')");
  brtf->callback([&] {
    const AudioBuffer audio = load_audio(br_input);
    AugmentationSpec spec;
    spec.scheme = parse_scheme(br_scheme);
    spec.seed = br_seed;
    std::optional<NoiseBank> bank;
    if (!br_noise.empty()) bank.emplace(load_noise_bank(br_noise));
    if (spec.scheme == Scheme::kNoisy && !bank)
      throw MissingNoiseBank("scheme 'noisy' requires --noise-dir");
    // The timed chain is the full per-clip pipeline: contour estimation
    // plus the scheme transform.
    const Workload workload = [&](const AudioBuffer& a) {
      const F0Contour contour = estimate_f0(a);
      apply_scheme(a, contour, bank ? &*bank : nullptr, spec, "bench", 0);
    };
    const RtfReport r = measure_rtf(workload, audio, br_repeats);
    std::cout << r.to_json().dump(2) << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "voxaug: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "voxaug: error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
