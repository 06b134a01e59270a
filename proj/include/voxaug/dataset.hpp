// dataset.hpp
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

// Dataset bookkeeping: directory scans into manifests, duration-targeted
// subsets, and offline materialization of augmented copies with sidecar
// provenance.  Only training entries are ever transformed; validation
// entries pass through byte-identical.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "voxaug/augment.hpp"
#include "voxaug/error.hpp"
#include "voxaug/frames.hpp"
#include "voxaug/noise_bank.hpp"
#include "voxaug/pitch.hpp"
#include "voxaug/resample.hpp"
#include "voxaug/wav.hpp"

namespace voxaug {

enum class Split { kTrain, kValidation };

struct ManifestEntry {
  std::string id;
  std::filesystem::path path;
  double duration_s = 0.0;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  double total_duration_s = 0.0;

  double train_duration_s() const {
    double t = 0.0;
    for (const auto& e : entries)
      if (e.split == Split::kTrain) t += e.duration_s;
    return t;
  }
};

namespace detail {

// Stable identifier from the path relative to the scan root: extension
// dropped, directory separators flattened to "__" so the id can name
// output files directly.
inline std::string id_from_relative(const std::filesystem::path& rel) {
  std::filesystem::path bare = rel;
  bare.replace_extension();
  std::string id;
  for (const auto& part : bare) {
    if (!id.empty()) id += "__";
    id += part.string();
  }
  return id;
}

inline double recompute_total(const DatasetManifest& m) {
  double t = 0.0;
  for (const auto& e : m.entries) t += e.duration_s;
  return t;
}

}  // namespace detail

// Scans `root` recursively for WAV files, orders them lexicographically
// by relative path, and marks the last ceil(fraction * N) as validation.
// Durations come from the headers; an unreadable or malformed file is an
// error, not a skip, so a manifest never silently drops corpus data.
inline DatasetManifest build_manifest(const std::filesystem::path& root,
                                      double validation_fraction = 0.05) {
  if (!(validation_fraction >= 0.0 && validation_fraction <= 0.5))
    throw InvalidParams("validation fraction must lie in [0, 0.5]");
  if (!std::filesystem::is_directory(root))
    throw EmptyDirectory("manifest root " + root.string() +
                         " is not a directory");

  // Absolute paths keep manifest entries meaningful no matter where the
  // manifest file itself ends up.
  const std::filesystem::path abs_root = std::filesystem::absolute(root);
  std::vector<std::filesystem::path> rels;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(abs_root)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() != ".wav") continue;
    rels.push_back(std::filesystem::relative(entry.path(), abs_root));
  }
  std::sort(rels.begin(), rels.end());
  if (rels.empty())
    throw EmptyDirectory("no WAV files under " + root.string());

  DatasetManifest m;
  m.entries.reserve(rels.size());
  const std::size_t n_val = static_cast<std::size_t>(
      std::ceil(validation_fraction * static_cast<double>(rels.size())));
  for (std::size_t i = 0; i < rels.size(); ++i) {
    ManifestEntry e;
    e.id = detail::id_from_relative(rels[i]);
    e.path = abs_root / rels[i];
    try {
      e.duration_s = read_wav_info(e.path).duration_seconds();
    } catch (const Error& err) {
      throw UnreadableFile(e.path.string() + ": " + err.what());
    }
    e.split = i + n_val >= rels.size() ? Split::kValidation : Split::kTrain;
    m.entries.push_back(std::move(e));
  }
  std::vector<std::string> ids;
  ids.reserve(m.entries.size());
  for (const auto& e : m.entries) ids.push_back(e.id);
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 1; i < ids.size(); ++i)
    if (ids[i - 1] == ids[i])
      throw InvalidParams("duplicate manifest id: " + ids[i]);
  m.total_duration_s = detail::recompute_total(m);
  return m;
}

// Greedy prefix subset: training entries accumulate in manifest order
// until the target is reached, so larger targets always give supersets.
// Validation entries are always retained.  nullopt means "all".
inline DatasetManifest subset_by_duration(const DatasetManifest& in,
                                          std::optional<double> minutes) {
  if (!minutes.has_value()) return in;
  const double target_s = *minutes * 60.0;
  if (!(target_s >= 0.0)) throw InvalidParams("subset target must be >= 0");
  if (target_s > in.train_duration_s() + 1e-9)
    throw TargetExceedsTotal("subset target exceeds the training corpus");

  DatasetManifest out;
  double acc = 0.0;
  for (const auto& e : in.entries) {
    if (e.split == Split::kValidation) {
      out.entries.push_back(e);
      continue;
    }
    if (acc >= target_s) continue;
    out.entries.push_back(e);
    acc += e.duration_s;
  }
  out.total_duration_s = detail::recompute_total(out);
  return out;
}

// ---------------------------------------------------------------------------
// Manifest JSON

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    entries.push_back(
        {{"id", e.id},
         {"path", e.path.string()},
         {"duration_s", e.duration_s},
         {"split", e.split == Split::kTrain ? "train" : "validation"}});
  }
  return nlohmann::json{{"entries", std::move(entries)},
                        {"total_duration_s", m.total_duration_s}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.id = je.at("id").get<std::string>();
      e.path = je.at("path").get<std::string>();
      e.duration_s = je.at("duration_s").get<double>();
      const std::string split = je.at("split").get<std::string>();
      if (split == "train") {
        e.split = Split::kTrain;
      } else if (split == "validation") {
        e.split = Split::kValidation;
      } else {
        throw CorruptHeader("manifest: unknown split '" + split + "'");
      }
      m.entries.push_back(std::move(e));
    }
    m.total_duration_s = j.at("total_duration_s").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptHeader(std::string("manifest: ") + e.what());
  }
  if (std::fabs(m.total_duration_s - detail::recompute_total(m)) > 1e-6)
    throw CorruptHeader("manifest: total_duration_s disagrees with entries");
  return m;
}

// Entries under the manifest's own directory are stored relative to it,
// so two materialized trees differing only in their root are
// byte-identical; everything else is stored verbatim.
inline void write_manifest(const DatasetManifest& m,
                           const std::filesystem::path& path) {
  const std::filesystem::path base =
      path.has_parent_path() ? path.parent_path() : ".";
  DatasetManifest stored = m;
  for (auto& e : stored.entries) {
    const std::filesystem::path rel = e.path.lexically_relative(base);
    if (!rel.empty() && rel.begin()->string() != "..") e.path = rel;
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoFailure("cannot open " + path.string() + " for writing");
  f << manifest_to_json(stored).dump(2) << "\n";
  if (!f) throw IoFailure("write failed on " + path.string());
}

// Relative entry paths resolve against the manifest's directory.
inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoFailure("cannot open " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptHeader(path.string() + ": " + e.what());
  }
  DatasetManifest m = manifest_from_json(j);
  const std::filesystem::path base =
      path.has_parent_path() ? path.parent_path() : ".";
  for (auto& e : m.entries)
    if (e.path.is_relative()) e.path = base / e.path;
  return m;
}

// ---------------------------------------------------------------------------
// Materialization

namespace detail {

inline AudioBuffer load_at_analysis_rate(const std::filesystem::path& path) {
  AudioBuffer a = read_wav(path);
  if (a.sample_rate != kAnalysisRate) a = resample(a, kAnalysisRate);
  return a;
}

}  // namespace detail

// Materializes one augmented dataset: for every training entry and copy
// index, applies the scheme and writes `<id>__<scheme>__<copy>` as WAV
// (unless the scheme is controls-only, in which case the manifest keeps
// the original audio path), contour CSV, and provenance JSON sidecar.
// Validation entries are copied byte-identically.  Entries may be
// processed by several workers; outputs are a pure function of
// (manifest, spec) regardless of the worker count, and the output
// manifest is written last.  On any failure the partially written
// output directory is removed.
inline DatasetManifest materialize(
    const DatasetManifest& manifest, const AugmentationSpec& spec,
    const std::optional<std::filesystem::path>& noise_dir,
    const std::filesystem::path& out_dir, int jobs = 1) {
  if (jobs < 1) throw InvalidParams("jobs must be at least 1");
  if (std::filesystem::exists(out_dir) &&
      !std::filesystem::is_empty(out_dir))
    throw InvalidParams("output directory " + out_dir.string() +
                        " is not empty");
  const bool needs_noise = spec.scheme == Scheme::kNoisy;
  if (needs_noise && !noise_dir.has_value())
    throw MissingNoiseBank("scheme 'noisy' requires --noise-dir");

  std::filesystem::create_directories(out_dir);
  const std::string label(scheme_label(spec.scheme));
  const int copies = spec.copies();

  try {
    std::optional<NoiseBank> bank;
    if (needs_noise) bank.emplace(load_noise_bank(*noise_dir));

    // Per-entry output slots keep the final manifest order independent
    // of worker scheduling.
    std::vector<std::vector<ManifestEntry>> slots(manifest.entries.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex error_mu;
    std::exception_ptr first_error;

    auto process_entry = [&](std::size_t idx) {
      const ManifestEntry& entry = manifest.entries[idx];
      if (entry.split == Split::kValidation) {
        const std::filesystem::path dst = out_dir / (entry.id + ".wav");
        std::filesystem::copy_file(entry.path, dst);
        slots[idx].push_back({entry.id, dst, entry.duration_s,
                              Split::kValidation});
        return;
      }
      const AudioBuffer audio = detail::load_at_analysis_rate(entry.path);
      const F0Contour contour = estimate_f0(audio);
      for (int copy = 0; copy < copies; ++copy) {
        const SchemeResult r =
            apply_scheme(audio, contour, bank ? &*bank : nullptr, spec,
                         entry.id, static_cast<std::uint64_t>(copy));
        const std::string stem =
            entry.id + "__" + label + "__" + std::to_string(copy);
        ManifestEntry out_entry;
        out_entry.id = stem;
        out_entry.duration_s = r.audio.duration_seconds();
        out_entry.split = Split::kTrain;
        if (controls_only(spec.scheme)) {
          out_entry.path = entry.path;
        } else {
          out_entry.path = out_dir / (stem + ".wav");
          write_wav(r.audio, out_entry.path);
        }
        write_contour_csv(r.contour, out_dir / (stem + ".csv"));
        std::ofstream side(out_dir / (stem + ".json"), std::ios::trunc);
        if (!side) throw IoFailure("cannot write sidecar for " + stem);
        side << r.provenance.to_json().dump(2) << "\n";
        slots[idx].push_back(std::move(out_entry));
      }
    };

    auto worker = [&] {
      for (;;) {
        {
          std::lock_guard<std::mutex> lk(error_mu);
          if (first_error) return;
        }
        const std::size_t idx = cursor.fetch_add(1);
        if (idx >= manifest.entries.size()) return;
        try {
          process_entry(idx);
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };

    const int n_workers = std::min<int>(
        jobs, static_cast<int>(manifest.entries.size()));
    if (n_workers <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(n_workers));
      for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    DatasetManifest out;
    for (auto& slot : slots)
      for (auto& e : slot) out.entries.push_back(std::move(e));
    out.total_duration_s = detail::recompute_total(out);
    write_manifest(out, out_dir / "manifest.json");
    return out;
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove_all(out_dir, ec);
    throw;
  }
}

}  // namespace voxaug
