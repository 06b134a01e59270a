// wav.hpp
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

// RIFF/WAVE reader and writer.  Reads mono 16-bit PCM and mono 32-bit
// float; always writes mono 16-bit PCM.  Chunks are walked in order and
// unknown ones skipped, including their pad byte.

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "voxaug/audio.hpp"
#include "voxaug/error.hpp"

namespace voxaug {

struct WavInfo {
  int sample_rate = 0;
  std::size_t n_samples = 0;
  int bits_per_sample = 0;
  bool is_float = false;

  double duration_seconds() const {
    return sample_rate > 0
               ? static_cast<double>(n_samples) / sample_rate
               : 0.0;
  }
};

namespace detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void wr_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline void wr_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

struct WavChunks {
  WavInfo info;
  std::size_t data_offset = 0;  // into the file bytes
  std::size_t data_size = 0;
};

// Parses the header and locates the data chunk without touching samples.
inline WavChunks parse_wav(const std::vector<unsigned char>& bytes,
                           const std::string& name) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw CorruptHeader(name + ": not a RIFF/WAVE file");

  WavChunks out;
  bool have_fmt = false, have_data = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t size = rd_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size())
      throw CorruptHeader(name + ": chunk extends past end of file");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw CorruptHeader(name + ": fmt chunk too small");
      format = rd_u16(bytes.data() + body);
      channels = rd_u16(bytes.data() + body + 2);
      rate = rd_u32(bytes.data() + body + 4);
      bits = rd_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      out.data_offset = body;
      out.data_size = size;
      have_data = true;
    }
    pos = body + size + (size & 1);  // chunks are word aligned
  }
  if (!have_fmt || !have_data)
    throw CorruptHeader(name + ": missing fmt or data chunk");

  if (channels != 1)
    throw UnsupportedFormat(name + ": only mono is supported, got " +
                            std::to_string(channels) + " channels");
  if (format == 1) {
    if (bits != 16)
      throw UnsupportedFormat(name + ": PCM must be 16-bit, got " +
                              std::to_string(bits));
    out.info.is_float = false;
  } else if (format == 3) {
    if (bits != 32)
      throw UnsupportedFormat(name + ": float must be 32-bit, got " +
                              std::to_string(bits));
    out.info.is_float = true;
  } else {
    throw UnsupportedFormat(name + ": unsupported format tag " +
                            std::to_string(format));
  }
  if (rate == 0) throw CorruptHeader(name + ": zero sample rate");

  out.info.sample_rate = static_cast<int>(rate);
  out.info.bits_per_sample = bits;
  out.info.n_samples = out.data_size / (bits / 8);
  return out;
}

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoFailure("read failed on " + path.string());
  return bytes;
}

}  // namespace detail

// Header-only probe; used when building manifests so durations come from
// headers without decoding sample data.
inline WavInfo read_wav_info(const std::filesystem::path& path) {
  return detail::parse_wav(detail::slurp(path), path.filename().string()).info;
}

inline AudioBuffer read_wav(const std::filesystem::path& path) {
  const auto bytes = detail::slurp(path);
  const auto chunks = detail::parse_wav(bytes, path.filename().string());
  AudioBuffer out;
  out.sample_rate = chunks.info.sample_rate;
  out.samples.resize(chunks.info.n_samples);
  const unsigned char* p = bytes.data() + chunks.data_offset;
  if (chunks.info.is_float) {
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
      std::uint32_t u = detail::rd_u32(p + 4 * i);
      float f;
      std::memcpy(&f, &u, 4);
      out.samples[i] = static_cast<double>(f);
    }
  } else {
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
      const std::int16_t v =
          static_cast<std::int16_t>(detail::rd_u16(p + 2 * i));
      out.samples[i] = static_cast<double>(v) / 32768.0;
    }
  }
  return out;
}

// Quantizes one sample to 16-bit: clamp to representable range, scale by
// 32768, round half away from zero.
inline std::int16_t quantize_sample(double v) {
  const double hi = 32767.0 / 32768.0;
  const double q = v < -1.0 ? -1.0 : (v > hi ? hi : v);
  return static_cast<std::int16_t>(std::lround(q * 32768.0));
}

inline void write_wav(const AudioBuffer& audio, const std::filesystem::path& path) {
  if (audio.sample_rate <= 0) throw InvalidParams("write_wav: bad sample rate");
  const std::uint32_t n = static_cast<std::uint32_t>(audio.samples.size());
  const std::uint32_t data_size = 2 * n;

  std::string out;
  out.reserve(44 + data_size);
  out.append("RIFF");
  detail::wr_u32(out, 36 + data_size);
  out.append("WAVE");
  out.append("fmt ");
  detail::wr_u32(out, 16);
  detail::wr_u16(out, 1);  // PCM
  detail::wr_u16(out, 1);  // mono
  detail::wr_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  detail::wr_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  detail::wr_u16(out, 2);   // block align
  detail::wr_u16(out, 16);  // bits per sample
  out.append("data");
  detail::wr_u32(out, data_size);
  for (double v : audio.samples) {
    const std::int16_t q = quantize_sample(v);
    detail::wr_u16(out, static_cast<std::uint16_t>(q));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoFailure("write failed on " + path.string());
}

}  // namespace voxaug
